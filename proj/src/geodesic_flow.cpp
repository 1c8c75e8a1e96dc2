#include "cutlocus/geodesic_flow.hpp"

#include "cutlocus/numerics.hpp"
#include "cutlocus/parallel.hpp"

#include <cmath>

namespace cutlocus {

namespace {

OdeOptions ode_options(double tol) {
  OdeOptions o;
  o.rtol = tol;
  o.atol = tol;
  return o;
}

OdeEvent boundary_event(const Manifold& m, int c) {
  if (m.boundary().empty() && std::isinf(m.interior_margin(Vec::Zero(c)))) return {};
  return [&m, c](double, const VecX& y) { return m.interior_margin(y.head(c)) + 1e-10; };
}

}  // namespace

PhaseState GeodesicTrajectory::at(double t) const {
  const VecX y = dense.eval(t);
  const auto c = y.size() / 2;
  return {y.head(c), y.tail(c), t};
}

GeodesicTrajectory integrate_geodesic(const Manifold& m, const PhaseState& start, double t_end, double tol,
                                      bool stop_at_boundary) {
  if (!(tol > 0)) throw DomainError("integration tolerance must be positive");
  if (stop_at_boundary && !m.contains(start.position, 1e-9))
    throw DomainError("geodesic start lies outside the domain");
  const int c = m.coord_dim();
  VecX y0(2 * c);
  y0 << start.position, start.velocity;
  OdeRhs rhs = [&m, c](double, const VecX& y, VecX& dy) {
    dy.resize(2 * c);
    dy.head(c) = y.tail(c);
    dy.tail(c) = m.acceleration(y.head(c), y.tail(c));
  };
  OdeResult r = integrate_dp45(rhs, start.time, y0, t_end, ode_options(tol),
                                stop_at_boundary ? boundary_event(m, c) : OdeEvent{});
  GeodesicTrajectory out;
  out.dense = std::move(r.trajectory);
  out.exited = r.event_triggered;
  out.exit_time = r.event_triggered ? r.event_time : kInf;
  for (size_t k = 0; k < out.dense.t.size(); ++k)
    out.states.push_back({out.dense.y[k].head(c), out.dense.y[k].tail(c), out.dense.t[k]});
  return out;
}

BoundaryData BoundaryData::zero(int components) {
  BoundaryData b;
  b.g.resize(components);
  b.dg.resize(components);
  b.offset.assign(components, 0.0);
  return b;
}

BoundaryData BoundaryData::constants(const std::vector<double>& a) {
  BoundaryData b = zero(static_cast<int>(a.size()));
  b.offset = a;
  return b;
}

double BoundaryData::base(int c, double s) const {
  if (c < 0 || c >= static_cast<int>(g.size()) || !g[c]) return 0.0;
  return g[c](s);
}

double BoundaryData::derivative(int c, double s) const {
  if (c >= 0 && c < static_cast<int>(dg.size()) && dg[c]) return dg[c](s);
  if (c < 0 || c >= static_cast<int>(g.size()) || !g[c]) return 0.0;
  const double h = 1e-6 * (1.0 + std::abs(s));
  return (g[c](s + h) - g[c](s - h)) / (2 * h);
}

CharacteristicField::CharacteristicField(std::shared_ptr<const Manifold> m, BoundaryComponent component,
                                         std::function<double(double)> dg)
    : m_(std::move(m)), comp_(std::move(component)), dg_(std::move(dg)) {}

Vec CharacteristicField::operator()(double s) const {
  const Manifold& m = *m_;
  const Vec q = comp_.position(s);
  const Vec tan = comp_.tangent(s);
  const Vec nu = comp_.inner_normal(s);
  const double dg = dg_ ? dg_(s) : 0.0;
  const Mat e = m.tangent_basis(q);
  if (e.cols() != 2) throw UnsupportedError("characteristic field implemented for curves in surfaces");
  const Eigen::Vector2d te = e.transpose() * tan;
  const Eigen::Vector2d ne = e.transpose() * nu;
  const double side = te[0] * ne[1] - te[1] * ne[0] >= 0 ? 1.0 : -1.0;
  const double psi_t = std::atan2(te[1], te[0]);
  const MetricField& metric = m.metric();
  auto unit_at = [&](double beta) {
    const double psi = psi_t + side * beta;
    const Vec u = e * Eigen::Vector2d(std::cos(psi), std::sin(psi));
    return Vec(u / metric.norm(q, u));
  };
  auto f = [&](double beta) {
    const Vec x = unit_at(beta);
    return metric.norm_gradient(q, x).dot(tan) - dg;
  };
  const double f0 = metric.norm(q, tan) - dg;
  const double fpi = -metric.norm(q, -tan) - dg;
  if (!(f0 > 0 && fpi < 0)) throw CompatibilityError("boundary derivative too large for a unit inward solution",
                                                     std::abs(dg) / metric.norm(q, tan));
  // 50-sample initialization, then a bracketed solve.
  double lo = 0.0, hi = kPi, flo = f0, fhi = fpi;
  double prev_b = 0.0, prev_f = f0;
  for (int i = 0; i < 50; ++i) {
    const double b = kPi * (i + 0.5) / 50;
    const double fb = f(b);
    if (prev_f > 0 && fb <= 0) {
      lo = prev_b; flo = prev_f; hi = b; fhi = fb;
      break;
    }
    prev_b = b;
    prev_f = fb;
    if (i == 49) { lo = b; flo = fb; }
  }
  const double beta = bracketed_root(f, lo, hi, flo, fhi, 1e-15);
  return unit_at(beta);
}

Vec CharacteristicField::derivative(double s) const {
  const double h = 1e-5;
  return ((*this)(s + h) - (*this)(s - h)) / (2 * h);
}

double CharacteristicField::residual(double s) const {
  const Vec x = (*this)(s);
  const Vec q = comp_.position(s);
  const double dg = dg_ ? dg_(s) : 0.0;
  return std::abs(m_->metric().norm_gradient(q, x).dot(comp_.tangent(s)) - dg) +
         std::abs(m_->metric().norm(q, x) - 1.0);
}

CharacteristicField characteristic_field(std::shared_ptr<const Manifold> m, const BoundaryComponent& component,
                                         std::function<double(double)> dg) {
  return CharacteristicField(std::move(m), component, std::move(dg));
}

BoundaryRayFamily::BoundaryRayFamily(std::shared_ptr<const Manifold> m, BoundaryComponent comp,
                                     std::function<double(double)> g, std::function<double(double)> dg)
    : RayFamily(m), comp_(comp), g_(g), field_(m, comp, nullptr) {
  if (!dg && g) {
    dg = [g](double s) {
      const double h = 1e-6 * (1.0 + std::abs(s));
      return (g(s + h) - g(s - h)) / (2 * h);
    };
  }
  field_ = CharacteristicField(m, comp, dg);
}

void BoundaryRayFamily::initial(const Vec& z, Vec& pos, Vec& vel, Mat& dpos, Mat& dvel) const {
  const double s = z[0];
  pos = comp_.position(s);
  vel = field_(s);
  dpos = comp_.tangent(s);
  dvel = field_.derivative(s);
}

PointRayFamily::PointRayFamily(std::shared_ptr<const Manifold> m, Vec p) : RayFamily(m), p_(std::move(p)) {
  if (!m_->contains(p_, 1e-9)) throw DomainError("ray source lies outside the domain");
  frame_ = m_->tangent_basis(p_);
}

Vec PointRayFamily::unit_direction(const Vec& z) const {
  if (z_dim() == 1) return frame_ * Eigen::Vector2d(std::cos(z[0]), std::sin(z[0]));
  return frame_ * Eigen::Vector3d(std::sin(z[0]) * std::cos(z[1]), std::sin(z[0]) * std::sin(z[1]), std::cos(z[0]));
}

Vec PointRayFamily::direction_parameter(const Vec& dir) const {
  const Vec c = frame_.transpose() * dir;
  Vec z(z_dim());
  if (z_dim() == 1) {
    z[0] = wrap_angle(std::atan2(c[1], c[0]));
  } else {
    z[0] = std::acos(std::clamp(c[2] / c.norm(), -1.0, 1.0));
    z[1] = wrap_angle(std::atan2(c[1], c[0]));
  }
  return z;
}

void PointRayFamily::initial(const Vec& z, Vec& pos, Vec& vel, Mat& dpos, Mat& dvel) const {
  const MetricField& metric = m_->metric();
  const int c = m_->coord_dim();
  const int k = z_dim();
  pos = p_;
  const Vec u = unit_direction(z);
  const double f = metric.norm(p_, u);
  vel = u / f;
  dpos = Mat::Zero(c, k);
  dvel = Mat(c, k);
  const Vec grad = metric.norm_gradient(p_, u);
  for (int j = 0; j < k; ++j) {
    Vec du;
    if (k == 1) {
      du = frame_ * Eigen::Vector2d(-std::sin(z[0]), std::cos(z[0]));
    } else if (j == 0) {
      du = frame_ * Eigen::Vector3d(std::cos(z[0]) * std::cos(z[1]), std::cos(z[0]) * std::sin(z[1]), -std::sin(z[0]));
    } else {
      du = frame_ * Eigen::Vector3d(-std::sin(z[0]) * std::sin(z[1]), std::sin(z[0]) * std::cos(z[1]), 0.0);
    }
    dvel.col(j) = du / f - u * grad.dot(du) / (f * f);
  }
}

Ray::Ray(const RayFamily* family, Vec z, DenseTrajectory dense, bool exited, double exit_time, OdeRhs rhs)
    : family_(family), z_(std::move(z)), dense_(std::move(dense)), exited_(exited), exit_time_(exit_time),
      rhs_(std::move(rhs)) {}

VecX Ray::state(double t) const {
  const size_t k = dense_.t.size() == 1 ? 0 : dense_.segment(t);
  return dp45_step(rhs_, dense_.t[k], dense_.y[k], dense_.dy[k], t - dense_.t[k]);
}

namespace {

JacobiBundle bundle_from_state(const Manifold& m, int k, const VecX& y, double t) {
  const int c = m.coord_dim();
  JacobiBundle b;
  b.base = {y.head(c), y.segment(c, c), t};
  b.columns.resize(c, k + 1);
  b.derivative_columns.resize(c, k + 1);
  b.columns.col(0) = b.base.velocity;
  b.derivative_columns.col(0) = m.acceleration(b.base.position, b.base.velocity);
  for (int j = 0; j < k; ++j) {
    b.columns.col(j + 1) = y.segment(2 * c + j * c, c);
    b.derivative_columns.col(j + 1) = y.segment(2 * c + k * c + j * c, c);
  }
  return b;
}

}  // namespace

JacobiBundle Ray::bundle(double t) const {
  return bundle_from_state(family_->manifold(), family_->z_dim(), state(t), t);
}

double Ray::det(double t) const {
  const JacobiBundle b = bundle(t);
  return frame_det(family_->manifold(), b.base.position, b.columns);
}

double Ray::det_dense(double t) const {
  const JacobiBundle b = bundle_from_state(family_->manifold(), family_->z_dim(), dense_.eval(t), t);
  return frame_det(family_->manifold(), b.base.position, b.columns);
}

Mat Ray::jacobian(double t) const {
  const JacobiBundle b = bundle(t);
  return frame_matrix(family_->manifold(), b.base.position, b.columns);
}

Mat Ray::jacobian_dense(double t) const {
  const JacobiBundle b = bundle_from_state(family_->manifold(), family_->z_dim(), dense_.eval(t), t);
  return frame_matrix(family_->manifold(), b.base.position, b.columns);
}

Vec Ray::position(double t) const { return state(t).head(family_->manifold().coord_dim()); }

Mat frame_matrix(const Manifold& m, const Vec& x, const Mat& columns) {
  return m.tangent_basis(x).transpose() * columns;
}

double frame_det(const Manifold& m, const Vec& x, const Mat& columns) { return frame_matrix(m, x, columns).determinant(); }

Ray trace_ray(const RayFamily& family, const Vec& z, double t_end, const FlowOptions& opt) {
  const Manifold& m = family.manifold();
  const int c = m.coord_dim();
  const int k = family.z_dim();
  Vec pos, vel;
  Mat dpos, dvel;
  family.initial(z, pos, vel, dpos, dvel);
  VecX y0(2 * c + 2 * c * k);
  y0.head(c) = pos;
  y0.segment(c, c) = vel;
  for (int j = 0; j < k; ++j) {
    y0.segment(2 * c + j * c, c) = dpos.col(j);
    y0.segment(2 * c + k * c + j * c, c) = dvel.col(j);
  }
  OdeRhs rhs = [&m, c, k](double, const VecX& y, VecX& dy) {
    dy.resize(y.size());
    const Vec x = y.head(c), v = y.segment(c, c);
    dy.head(c) = v;
    dy.segment(c, c) = m.acceleration(x, v);
    if (k == 0) return;
    Mat ax, av;
    m.acceleration_jacobians(x, v, ax, av);
    for (int j = 0; j < k; ++j) {
      const Vec jj = y.segment(2 * c + j * c, c);
      const Vec jd = y.segment(2 * c + k * c + j * c, c);
      dy.segment(2 * c + j * c, c) = jd;
      dy.segment(2 * c + k * c + j * c, c) = ax * jj + av * jd;
    }
  };
  OdeEvent ev = opt.stop_at_boundary && t_end > 0 ? boundary_event(m, c) : OdeEvent{};
  OdeResult r = integrate_dp45(rhs, 0.0, y0, t_end, ode_options(opt.tol), ev);
  return Ray(&family, z, std::move(r.trajectory), r.event_triggered, r.event_triggered ? r.event_time : kInf, rhs);
}

JacobiBundle flow_with_jacobi(const RayFamily& family, const RayCoordinate& x, const FlowOptions& opt) {
  const Ray ray = trace_ray(family, x.z, x.t, opt);
  JacobiBundle b = ray.bundle(ray.t_end());
  b.exited = ray.exited();
  return b;
}

Vec exponential_from_boundary(const RayFamily& family, const RayCoordinate& x, const FlowOptions& opt) {
  return flow_with_jacobi(family, x, opt).base.position;
}

Vec exponential_from_point(std::shared_ptr<const Manifold> m, const Vec& p, const Vec& v, double tol) {
  const double speed = m->metric().norm(p, v);
  if (speed == 0.0) return p;
  const auto traj = integrate_geodesic(*m, PhaseState{p, v / speed, 0.0}, speed, tol);
  if (traj.exited) throw DomainError("geodesic leaves the domain before reaching exp_p(v)");
  return traj.states.back().position;
}

std::vector<Ray> sweep_rays(const RayFamily& family, const std::vector<Vec>& zs, double t_end,
                            const FlowOptions& opt, int threads) {
  std::vector<Ray> out(zs.size());
  parallel_for(zs.size(), threads, [&](size_t i) { out[i] = trace_ray(family, zs[i], t_end, opt); });
  return out;
}

}  // namespace cutlocus
