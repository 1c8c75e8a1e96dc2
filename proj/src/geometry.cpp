#include "cutlocus/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace cutlocus {

Vec MetricField::norm_gradient(const Vec& p, const Vec& v) const {
  const double h = 1e-6 * (1.0 + v.norm());
  Vec g(v.size());
  Vec w = v;
  for (int j = 0; j < v.size(); ++j) {
    w[j] = v[j] + h;
    const double fp = norm(p, w);
    w[j] = v[j] - h;
    const double fm = norm(p, w);
    w[j] = v[j];
    g[j] = (fp - fm) / (2 * h);
  }
  return g;
}

Mat MetricField::tensor(const Vec&) const {
  throw UnsupportedError("metric tensor requested from a non-Riemannian metric");
}

RiemannianMetric::RiemannianMetric(Mat g) : dim_(static_cast<int>(g.rows())), constant_(std::move(g)) {
  Eigen::LLT<Mat> llt(constant_);
  if (llt.info() != Eigen::Success) throw DomainError("metric tensor is not positive definite");
}

RiemannianMetric::RiemannianMetric(int dim, std::function<Mat(const Vec&)> field)
    : dim_(dim), field_(std::move(field)) {}

Mat RiemannianMetric::tensor(const Vec& p) const { return field_ ? field_(p) : constant_; }

double RiemannianMetric::norm(const Vec& p, const Vec& v) const {
  const double q = v.dot(tensor(p) * v);
  return std::sqrt(std::max(q, 0.0));
}

Vec RiemannianMetric::norm_gradient(const Vec& p, const Vec& v) const {
  const Mat g = tensor(p);
  const double n = std::sqrt(std::max(v.dot(g * v), 0.0));
  if (n == 0.0) throw DomainError("norm gradient at the zero vector");
  return g * v / n;
}

RandersMetric::RandersMetric(Mat a, Vec drift) : a_(std::move(a)), drift_(std::move(drift)) {
  if (a_.rows() != drift_.size()) throw ConfigError("Randers drift has the wrong dimension");
  Eigen::LLT<Mat> llt(a_);
  if (llt.info() != Eigen::Success) throw DomainError("Randers quadratic part is not positive definite");
  const double b2 = drift_.dot(llt.solve(drift_));
  if (b2 >= 1.0) throw DomainError("Randers drift must have dual norm below 1");
}

double RandersMetric::norm(const Vec&, const Vec& v) const {
  return std::sqrt(std::max(v.dot(a_ * v), 0.0)) + drift_.dot(v);
}

Vec RandersMetric::norm_gradient(const Vec&, const Vec& v) const {
  const double alpha = std::sqrt(std::max(v.dot(a_ * v), 0.0));
  if (alpha == 0.0) throw DomainError("norm gradient at the zero vector");
  return a_ * v / alpha + drift_;
}

FunctionFinslerMetric::FunctionFinslerMetric(int dim, std::function<double(const Vec&, const Vec&)> phi,
                                             bool constant)
    : dim_(dim), phi_(std::move(phi)), constant_(constant) {}

namespace {

std::vector<Vec> sample_directions(int dim) {
  std::vector<Vec> dirs;
  if (dim == 2) {
    for (int i = 0; i < 72; ++i) {
      const double a = 2 * kPi * i / 72;
      dirs.push_back(vec2(std::cos(a), std::sin(a)));
    }
  } else {
    // Fibonacci lattice on the unit sphere.
    const int n = 266;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double r = std::sqrt(1.0 - z * z);
      dirs.push_back(vec3(r * std::cos(golden * i), r * std::sin(golden * i), z));
    }
  }
  return dirs;
}

}  // namespace

void validate_metric(const MetricField& metric, const std::vector<Vec>& base_points) {
  const int n = metric.dim();
  const auto dirs = sample_directions(n == 2 ? 2 : 3);
  for (const Vec& p : base_points) {
    std::vector<Vec> unit;
    for (const Vec& d0 : dirs) {
      Vec d = d0.head(n);
      const double f = metric.norm(p, d);
      if (!(f > 0.0)) throw DomainError("metric is not positive on a nonzero vector");
      for (double lambda : {0.5, 2.0, 7.0}) {
        const double fl = metric.norm(p, lambda * d);
        if (std::abs(fl - lambda * f) > 1e-10 * lambda * f)
          throw DomainError("metric is not positively 1-homogeneous");
      }
      unit.push_back(d / f);
    }
    for (size_t i = 0; i < unit.size(); ++i) {
      for (size_t j = i + 1; j < unit.size(); ++j) {
        const Vec mid = 0.5 * (unit[i] + unit[j]);
        if (mid.norm() < 1e-12) continue;
        if (metric.norm(p, mid) >= 1.0 - 1e-12) throw DomainError("metric indicatrix is not strictly convex");
      }
    }
  }
}

Mat Manifold::tangent_basis(const Vec&) const { return Mat::Identity(dim(), dim()); }

double Manifold::distance(const Vec&, const Vec&) const {
  throw UnsupportedError("no distance oracle for manifold kind " + kind());
}

std::vector<GeodesicLink> Manifold::geodesics_between(const Vec&, const Vec&, double) const {
  throw UnsupportedError("no geodesic oracle for manifold kind " + kind());
}

Vec Manifold::acceleration(const Vec& x, const Vec& v) const {
  if (metric_->is_constant()) return Vec::Zero(x.size());
  if (metric_->kind() == MetricKind::Riemannian) return riemannian_spray(*metric_, x, v);
  return finsler_spray(*metric_, x, v);
}

void Manifold::acceleration_jacobians(const Vec& x, const Vec& v, Mat& ax, Mat& av) const {
  const int n = static_cast<int>(x.size());
  ax.setZero(n, n);
  av.setZero(n, n);
  if (metric_->is_constant()) return;
  const double hx = 1e-6 * (1.0 + x.norm());
  const double hv = 1e-6 * (1.0 + v.norm());
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += hx;
    xm[j] -= hx;
    ax.col(j) = (acceleration(xp, v) - acceleration(xm, v)) / (2 * hx);
    Vec vp = v, vm = v;
    vp[j] += hv;
    vm[j] -= hv;
    av.col(j) = (acceleration(x, vp) - acceleration(x, vm)) / (2 * hv);
  }
}

Vec riemannian_spray(const MetricField& metric, const Vec& x, const Vec& v) {
  const int n = static_cast<int>(x.size());
  const double h = 1e-5 * (1.0 + x.norm());
  std::vector<Mat> dg(n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    dg[k] = (metric.tensor(xp) - metric.tensor(xm)) / (2 * h);
  }
  // Gamma_{l,jk} v^j v^k = (d_j g_lk + d_k g_lj - d_l g_jk) v^j v^k / 2
  Vec lower = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += (dg[j](l, k) + dg[k](l, j) - dg[l](j, k)) * v[j] * v[k];
    lower[l] = 0.5 * s;
  }
  return -metric.tensor(x).ldlt().solve(lower);
}

Vec finsler_spray(const MetricField& metric, const Vec& x, const Vec& v) {
  const int n = static_cast<int>(x.size());
  auto energy = [&](const Vec& xx, const Vec& vv) {
    const double f = metric.norm(xx, vv);
    return f * f;
  };
  const double hv = 1e-4 * (1.0 + v.norm());
  const double hx = 1e-4 * (1.0 + x.norm());
  auto grad_v = [&](const Vec& xx) {
    Vec g(n);
    for (int l = 0; l < n; ++l) {
      Vec vp = v, vm = v;
      vp[l] += hv;
      vm[l] -= hv;
      g[l] = (energy(xx, vp) - energy(xx, vm)) / (2 * hv);
    }
    return g;
  };
  Mat hess(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec vpp = v, vpm = v, vmp = v, vmm = v;
      vpp[i] += hv; vpp[j] += hv;
      vpm[i] += hv; vpm[j] -= hv;
      vmp[i] -= hv; vmp[j] += hv;
      vmm[i] -= hv; vmm[j] -= hv;
      hess(i, j) = (energy(x, vpp) - energy(x, vpm) - energy(x, vmp) + energy(x, vmm)) / (4 * hv * hv);
    }
  }
  Vec rhs = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp[k] += hx;
    xm[k] -= hx;
    rhs += (grad_v(xp) - grad_v(xm)) / (2 * hx) * v[k];
    rhs[k] -= (energy(xp, v) - energy(xm, v)) / (2 * hx);
  }
  // g_ij = hess / 2, G = g^{-1} rhs / 4, acceleration = -2 G.
  return -hess.ldlt().solve(rhs);
}

double finsler_norm(const Manifold& m, const Vec& p, const Vec& v) { return m.metric().norm(p, v); }

Vec dual_one_form(const Manifold& m, const Vec& p, const Vec& v) {
  if (v.norm() == 0.0) throw DomainError("dual one-form of the zero vector");
  return m.metric().norm(p, v) * m.metric().norm_gradient(p, v);
}

Vec vector_from_dual(const Manifold& m, const Vec& p, const Vec& w) {
  if (w.norm() == 0.0) throw DomainError("vector dual to the zero covector");
  const MetricField& metric = m.metric();
  if (metric.kind() == MetricKind::Riemannian) return metric.tensor(p).ldlt().solve(w);
  // Newton on phi(v) grad phi(v) = w, the critical point of phi^2/2 - w(v).
  Vec v = w;
  const int n = static_cast<int>(w.size());
  for (int it = 0; it < 60; ++it) {
    const Vec r = dual_one_form(m, p, v) - w;
    if (r.norm() < 1e-13 * (1.0 + w.norm())) break;
    const double h = 1e-6 * (1.0 + v.norm());
    Mat jac(n, n);
    for (int j = 0; j < n; ++j) {
      Vec vp = v, vm = v;
      vp[j] += h;
      vm[j] -= h;
      jac.col(j) = (dual_one_form(m, p, vp) - dual_one_form(m, p, vm)) / (2 * h);
    }
    Vec step = jac.fullPivLu().solve(r);
    double lam = 1.0;
    while (lam > 1e-6 && (v - lam * step).norm() < 1e-14) lam *= 0.5;
    v -= lam * step;
  }
  return v;
}

Vec v_p(const Manifold& m, const Vec& p, const Vec& q) {
  if (m.displacement(p, q).norm() == 0.0) throw DomainError("v_p(q) is undefined for q == p");
  const auto links = m.geodesics_between(q, p, 0.0);
  if (links.empty()) throw NumericalError("no geodesic found between the points");
  return links.front().arrival;
}

double distance_oracle(const Manifold& m, const Vec& p, const Vec& q) { return m.distance(p, q); }

}  // namespace cutlocus
