#pragma once

#include "cutlocus/geometry.hpp"
#include "cutlocus/ode.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace cutlocus {

struct PhaseState {
  Vec position;
  Vec velocity;
  double time = 0.0;
};

struct GeodesicTrajectory {
  std::vector<PhaseState> states;
  DenseTrajectory dense;
  bool exited = false;  // left the domain before t_end
  double exit_time = kInf;

  PhaseState at(double t) const;
};

// Adaptive integration of the geodesic spray. Stops early (exited = true) when
// the domain is left.
GeodesicTrajectory integrate_geodesic(const Manifold& m, const PhaseState& start, double t_end, double tol = 1e-10,
                                      bool stop_at_boundary = true);

// Boundary data g per boundary component plus optional constant offsets.
struct BoundaryData {
  std::vector<std::function<double(double)>> g;
  std::vector<std::function<double(double)>> dg;
  std::vector<double> offset;

  static BoundaryData zero(int components);
  static BoundaryData constants(const std::vector<double>& a);

  int components() const { return static_cast<int>(std::max(g.size(), offset.size())); }
  // g without the offset.
  double base(int c, double s) const;
  double value(int c, double s) const { return base(c, s) + off(c); }
  double derivative(int c, double s) const;
  double off(int c) const { return c < static_cast<int>(offset.size()) ? offset[c] : 0.0; }
};

// Unit inward vector field X along a boundary curve with X^|T(dM) = dg.
class CharacteristicField {
 public:
  CharacteristicField(std::shared_ptr<const Manifold> m, BoundaryComponent component,
                      std::function<double(double)> dg);

  Vec operator()(double s) const;
  Vec derivative(double s) const;
  const BoundaryComponent& component() const { return comp_; }
  // |X^(T) - dg(T)| at s, for diagnostics.
  double residual(double s) const;

 private:
  std::shared_ptr<const Manifold> m_;
  BoundaryComponent comp_;
  std::function<double(double)> dg_;
};

CharacteristicField characteristic_field(std::shared_ptr<const Manifold> m, const BoundaryComponent& component,
                                         std::function<double(double)> dg);

// Point (t, z) of the ray space V. component < 0 marks rays shot from a point.
struct RayCoordinate {
  double t = 0.0;
  int component = 0;
  Vec z;
};

struct JacobiBundle {
  PhaseState base;
  Mat columns;             // dF applied to (r, d/dz_1, ...), coordinates x dim
  Mat derivative_columns;  // covariant-free velocity variations
  bool exited = false;
};

// A family of unit-speed geodesics parametrized by z (the exponential map F).
class RayFamily {
 public:
  explicit RayFamily(std::shared_ptr<const Manifold> m) : m_(std::move(m)) {}
  virtual ~RayFamily() = default;

  const Manifold& manifold() const { return *m_; }
  std::shared_ptr<const Manifold> manifold_ptr() const { return m_; }
  int z_dim() const { return m_->dim() - 1; }
  virtual int component() const = 0;
  // Position, unit velocity and their z-derivatives at t = 0.
  virtual void initial(const Vec& z, Vec& pos, Vec& vel, Mat& dpos, Mat& dvel) const = 0;
  // g(z) without offsets (zero for point sources).
  virtual double source_value(const Vec& z) const { (void)z; return 0.0; }
  virtual bool periodic() const { return true; }
  virtual double period() const { return 2 * kPi; }
  virtual double z_min() const { return 0.0; }

 protected:
  std::shared_ptr<const Manifold> m_;
};

class BoundaryRayFamily : public RayFamily {
 public:
  BoundaryRayFamily(std::shared_ptr<const Manifold> m, BoundaryComponent comp, std::function<double(double)> g,
                    std::function<double(double)> dg = {});

  int component() const override { return comp_.id; }
  void initial(const Vec& z, Vec& pos, Vec& vel, Mat& dpos, Mat& dvel) const override;
  double source_value(const Vec& z) const override { return g_ ? g_(z[0]) : 0.0; }
  bool periodic() const override { return comp_.periodic; }
  double period() const override { return comp_.period(); }
  double z_min() const override { return comp_.s_min; }
  const CharacteristicField& field() const { return field_; }
  const BoundaryComponent& boundary_component() const { return comp_; }

 private:
  BoundaryComponent comp_;
  std::function<double(double)> g_;
  CharacteristicField field_;
};

// Unit-speed geodesics from p; z is the angle in the tangent frame (2D) or the
// spherical angles (colatitude, longitude) in 3D.
class PointRayFamily : public RayFamily {
 public:
  PointRayFamily(std::shared_ptr<const Manifold> m, Vec p);

  int component() const override { return -1; }
  void initial(const Vec& z, Vec& pos, Vec& vel, Mat& dpos, Mat& dvel) const override;
  const Vec& source() const { return p_; }
  // Ray parameter of a unit initial direction at p.
  Vec direction_parameter(const Vec& dir) const;
  Vec unit_direction(const Vec& z) const;

 private:
  Vec p_;
  Mat frame_;
};

struct FlowOptions {
  double tol = 1e-10;
  bool stop_at_boundary = true;
};

// One ray with Jacobi fields, traced once and evaluated anywhere in [0, t_end].
class Ray {
 public:
  Ray() = default;
  Ray(const RayFamily* family, Vec z, DenseTrajectory dense, bool exited, double exit_time, OdeRhs rhs);

  const Vec& z() const { return z_; }
  double t_end() const { return dense_.t_end(); }
  bool exited() const { return exited_; }
  double exit_time() const { return exit_time_; }
  const DenseTrajectory& dense() const { return dense_; }

  // Exact state at t (one embedded step from the preceding node).
  VecX state(double t) const;
  JacobiBundle bundle(double t) const;
  // det of dF in an oriented orthonormal tangent frame at F(t, z).
  double det(double t) const;
  double det_dense(double t) const;
  // dF in the oriented orthonormal tangent frame, exact and interpolated.
  Mat jacobian(double t) const;
  Mat jacobian_dense(double t) const;
  Vec position(double t) const;

 private:
  const RayFamily* family_ = nullptr;
  Vec z_;
  DenseTrajectory dense_;
  bool exited_ = false;
  double exit_time_ = kInf;
  OdeRhs rhs_;
};

Ray trace_ray(const RayFamily& family, const Vec& z, double t_end, const FlowOptions& opt = {});
JacobiBundle flow_with_jacobi(const RayFamily& family, const RayCoordinate& x, const FlowOptions& opt = {});
Vec exponential_from_boundary(const RayFamily& family, const RayCoordinate& x, const FlowOptions& opt = {});
Vec exponential_from_point(std::shared_ptr<const Manifold> m, const Vec& p, const Vec& v, double tol = 1e-10);

// det(E^T columns) with E the oriented orthonormal tangent frame at x.
double frame_det(const Manifold& m, const Vec& x, const Mat& columns);
Mat frame_matrix(const Manifold& m, const Vec& x, const Mat& columns);

// Deterministic data-parallel sweep: result[i] = trace_ray(family, zs[i], t_end).
std::vector<Ray> sweep_rays(const RayFamily& family, const std::vector<Vec>& zs, double t_end,
                            const FlowOptions& opt = {}, int threads = 0);

}  // namespace cutlocus
