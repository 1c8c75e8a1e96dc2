#pragma once

#include "cutlocus/geometry.hpp"

#include "json.hpp"

namespace cutlocus {

// Flat chart domains with a constant (Riemannian or Randers) norm.
class FlatDomain : public Manifold {
 public:
  enum class Region { Plane, HalfPlane, Disk, Annulus, Rectangle };

  FlatDomain(std::shared_ptr<const MetricField> metric, Region region);

  static std::shared_ptr<FlatDomain> plane(int dim = 2, std::shared_ptr<const MetricField> metric = nullptr);
  // {x_2 >= 0} with boundary s -> (s, 0), s in [-extent, extent].
  static std::shared_ptr<FlatDomain> half_plane(double extent = 4.0,
                                                std::shared_ptr<const MetricField> metric = nullptr);
  static std::shared_ptr<FlatDomain> disk(Vec center, double radius,
                                          std::shared_ptr<const MetricField> metric = nullptr);
  static std::shared_ptr<FlatDomain> annulus(Vec center, double r_inner, double r_outer,
                                             std::shared_ptr<const MetricField> metric = nullptr);
  static std::shared_ptr<FlatDomain> rectangle(Vec lo, Vec hi, std::shared_ptr<const MetricField> metric = nullptr);

  std::string kind() const override;
  int dim() const override { return metric_->dim(); }
  double interior_margin(const Vec& p) const override;
  bool has_distance_oracle() const override;
  double distance(const Vec& p, const Vec& q) const override;
  std::vector<GeodesicLink> geodesics_between(const Vec& p, const Vec& q, double slack) const override;
  GridSpec grid_spec() const override;

  Region region() const { return region_; }
  const Vec& center() const { return center_; }
  double r_inner() const { return r_inner_; }
  double r_outer() const { return r_outer_; }
  double extent() const { return extent_; }

 private:
  bool euclidean() const;
  void build_boundary();

  Region region_;
  Vec center_;
  double r_inner_ = 0.0;
  double r_outer_ = 0.0;
  double extent_ = 4.0;
  Vec lo_, hi_;
};

// R^n modulo a rectangular lattice with the Euclidean norm.
class FlatTorus : public Manifold {
 public:
  explicit FlatTorus(Vec periods);

  std::string kind() const override { return "flat_torus"; }
  int dim() const override { return static_cast<int>(periods_.size()); }
  Vec wrap(const Vec& p) const override;
  Vec displacement(const Vec& a, const Vec& b) const override;
  bool has_distance_oracle() const override { return true; }
  // Lattice minimum over translates with |m|, |n| <= 2.
  double distance(const Vec& p, const Vec& q) const override;
  std::vector<GeodesicLink> geodesics_between(const Vec& p, const Vec& q, double slack) const override;
  GridSpec grid_spec() const override;

  const Vec& periods() const { return periods_; }
  static constexpr int kLatticeReach = 2;

 private:
  Vec periods_;
};

// Ellipsoid sum (x_i / a_i)^2 = 1 embedded in R^3 with the induced metric;
// optionally restricted to the cap {colatitude <= cap}.
class QuadricSurface : public Manifold {
 public:
  QuadricSurface(Vec semiaxes, double cap_colatitude = kInf);

  static std::shared_ptr<QuadricSurface> sphere(double radius = 1.0);
  static std::shared_ptr<QuadricSurface> ellipsoid(double a, double b, double c);

  std::string kind() const override { return is_sphere() ? "sphere" : "ellipsoid"; }
  int dim() const override { return 2; }
  int coord_dim() const override { return 3; }
  double interior_margin(const Vec& p) const override;
  Vec project(const Vec& x) const override;
  Mat tangent_basis(const Vec& p) const override;
  Vec acceleration(const Vec& x, const Vec& v) const override;
  void acceleration_jacobians(const Vec& x, const Vec& v, Mat& ax, Mat& av) const override;
  bool has_distance_oracle() const override { return is_sphere(); }
  double distance(const Vec& p, const Vec& q) const override;
  std::vector<GeodesicLink> geodesics_between(const Vec& p, const Vec& q, double slack) const override;
  GridSpec grid_spec() const override;
  Vec grid_point(double u, double v) const override;

  Vec normal(const Vec& p) const;  // unit outward normal
  bool is_sphere() const;
  const Vec& semiaxes() const { return axes_; }
  double colatitude(const Vec& p) const;

 private:
  Vec axes_;
  double cap_;
};

// A chart rectangle carrying a position-dependent Riemannian metric.
class ChartManifold : public Manifold {
 public:
  ChartManifold(std::shared_ptr<const MetricField> metric, Vec lo, Vec hi);

  // Round sphere of radius 1 in (colatitude, longitude) coordinates, away from the poles.
  static std::shared_ptr<ChartManifold> spherical_chart();

  std::string kind() const override { return "chart"; }
  int dim() const override { return metric_->dim(); }
  double interior_margin(const Vec& p) const override;
  GridSpec grid_spec() const override;

 private:
  Vec lo_, hi_;
};

// Builds a manifold from a JSON document such as {"kind":"annulus","r_inner":1,"r_outer":2}.
// Unknown keys raise ConfigError.
std::shared_ptr<Manifold> manifold_from_json(const nlohmann::json& doc);
nlohmann::json manifold_to_json(const Manifold& m);

}  // namespace cutlocus
