#pragma once

#include "cutlocus/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cutlocus {

enum class MetricKind { Riemannian, Finsler };

// A norm on each tangent space, written in chart (or ambient) coordinates.
class MetricField {
 public:
  virtual ~MetricField() = default;
  virtual MetricKind kind() const = 0;
  virtual int dim() const = 0;
  virtual double norm(const Vec& p, const Vec& v) const = 0;
  // d(phi)/dv. The default uses central differences with step 1e-6 (1 + |v|).
  virtual Vec norm_gradient(const Vec& p, const Vec& v) const;
  // Gram matrix; only meaningful for Riemannian fields.
  virtual Mat tensor(const Vec& p) const;
  // True when phi does not depend on the base point (geodesics are straight lines).
  virtual bool is_constant() const { return false; }
};

class RiemannianMetric : public MetricField {
 public:
  explicit RiemannianMetric(Mat g);
  RiemannianMetric(int dim, std::function<Mat(const Vec&)> field);

  MetricKind kind() const override { return MetricKind::Riemannian; }
  int dim() const override { return dim_; }
  double norm(const Vec& p, const Vec& v) const override;
  Vec norm_gradient(const Vec& p, const Vec& v) const override;
  Mat tensor(const Vec& p) const override;
  bool is_constant() const override { return !field_; }

 private:
  int dim_;
  Mat constant_;
  std::function<Mat(const Vec&)> field_;
};

// phi(v) = sqrt(v^T A v) + <b, v> with constant A and |b|_{A^-1} < 1.
class RandersMetric : public MetricField {
 public:
  RandersMetric(Mat a, Vec drift);

  MetricKind kind() const override { return MetricKind::Finsler; }
  int dim() const override { return static_cast<int>(drift_.size()); }
  double norm(const Vec& p, const Vec& v) const override;
  Vec norm_gradient(const Vec& p, const Vec& v) const override;
  bool is_constant() const override { return true; }
  const Vec& drift() const { return drift_; }

 private:
  Mat a_;
  Vec drift_;
};

// Arbitrary Finsler norm given as a callable; validated on construction.
class FunctionFinslerMetric : public MetricField {
 public:
  FunctionFinslerMetric(int dim, std::function<double(const Vec&, const Vec&)> phi,
                        bool constant = false);

  MetricKind kind() const override { return MetricKind::Finsler; }
  int dim() const override { return dim_; }
  double norm(const Vec& p, const Vec& v) const override { return phi_(p, v); }
  bool is_constant() const override { return constant_; }

 private:
  int dim_;
  std::function<double(const Vec&, const Vec&)> phi_;
  bool constant_;
};

// Throws DomainError when phi fails 1-homogeneity (rel 1e-10) or strict convexity
// on the sampled directions (72 in 2D, 266 in 3D) at the given base points.
void validate_metric(const MetricField& metric, const std::vector<Vec>& base_points);

// Closed boundary curve with a periodic parametrization (or an open arc for half-planes).
struct BoundaryComponent {
  int id = 0;
  bool periodic = true;
  double s_min = 0.0;
  double s_max = 2 * kPi;
  std::function<Vec(double)> position;
  std::function<Vec(double)> tangent;       // d position / ds
  std::function<Vec(double)> inner_normal;  // points into M (not necessarily unit)

  double period() const { return s_max - s_min; }
};

// A geodesic segment between two points, as produced by distance oracles.
struct GeodesicLink {
  double length = 0.0;
  Vec initial;   // unit velocity at the start
  Vec arrival;   // unit velocity at the end
  bool continuum = false;  // a whole family of minimizers (e.g. antipodes)
};

struct GridSpec {
  double u0 = 0, u1 = 1, v0 = 0, v1 = 1;
  bool periodic_u = false, periodic_v = false;
};

class Manifold {
 public:
  explicit Manifold(std::shared_ptr<const MetricField> metric) : metric_(std::move(metric)) {}
  virtual ~Manifold() = default;

  virtual std::string kind() const = 0;
  virtual int dim() const = 0;
  virtual int coord_dim() const { return dim(); }
  const MetricField& metric() const { return *metric_; }
  std::shared_ptr<const MetricField> metric_ptr() const { return metric_; }

  // Positive inside, zero on the boundary, negative outside.
  virtual double interior_margin(const Vec& p) const { (void)p; return kInf; }
  bool contains(const Vec& p, double slack = 1e-9) const { return interior_margin(p) >= -slack; }
  virtual Vec wrap(const Vec& p) const { return p; }
  // Coordinate displacement from a to b (minimal image on quotients).
  virtual Vec displacement(const Vec& a, const Vec& b) const { return b - a; }
  virtual Vec project(const Vec& x) const { return x; }
  // Orthonormal (for the coordinate inner product) basis of T_pM, coord_dim x dim.
  virtual Mat tangent_basis(const Vec& p) const;

  // Geodesic spray: x'' = acceleration(x, x').
  virtual Vec acceleration(const Vec& x, const Vec& v) const;
  virtual void acceleration_jacobians(const Vec& x, const Vec& v, Mat& ax, Mat& av) const;

  const std::vector<BoundaryComponent>& boundary() const { return boundary_; }

  virtual bool has_distance_oracle() const { return false; }
  virtual double distance(const Vec& p, const Vec& q) const;
  // Locally minimizing geodesics from p to q whose length is within slack of d(p, q),
  // shortest first.
  virtual std::vector<GeodesicLink> geodesics_between(const Vec& p, const Vec& q,
                                                      double slack) const;

  virtual GridSpec grid_spec() const = 0;
  virtual Vec grid_point(double u, double v) const { return vec2(u, v); }

 protected:
  std::shared_ptr<const MetricField> metric_;
  std::vector<BoundaryComponent> boundary_;
};

double finsler_norm(const Manifold& m, const Vec& p, const Vec& v);
// w_j = phi(v) d(phi)/dv^j; throws DomainError on the zero vector.
Vec dual_one_form(const Manifold& m, const Vec& p, const Vec& v);
// Inverse of the duality map: the vector whose dual one-form is w.
Vec vector_from_dual(const Manifold& m, const Vec& p, const Vec& w);
// Unit velocity at p of the minimizing geodesic arriving at p from q.
Vec v_p(const Manifold& m, const Vec& p, const Vec& q);
double distance_oracle(const Manifold& m, const Vec& p, const Vec& q);

// Christoffel contraction -Gamma(x)[v, v] for a Riemannian chart metric.
Vec riemannian_spray(const MetricField& metric, const Vec& x, const Vec& v);
// Spray of a general Finsler chart metric from finite differences of phi^2.
Vec finsler_spray(const MetricField& metric, const Vec& x, const Vec& v);

}  // namespace cutlocus
