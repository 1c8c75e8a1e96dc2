#include "cutlocus/lagrangian_map.hpp"

#include <cmath>

namespace cutlocus {

Vec LagrangianMap::radius_gradient(const Vec& x) const {
  const double h = fd_step();
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (radius(xp) - radius(xm)) / (2 * h);
  }
  return g;
}

Vec LagrangianMap::radial(const Vec& x) const {
  const Vec g = radius_gradient(x);
  return g / g.squaredNorm();
}

double LagrangianMap::image_speed(const Vec& x, const Vec& v) const {
  const double dr = radius_gradient(x).dot(v);
  const Vec w = v - dr * radial(x);
  const Vec dw = jacobian(x) * w;
  return std::sqrt(dr * dr + dw.squaredNorm());
}

Vec LagrangianMap::det_gradient(const Vec& x) const {
  const double h = fd_step();
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (det(xp) - det(xm)) / (2 * h);
  }
  return g;
}

Mat LagrangianMap::det_hessian(const Vec& x) const {
  const double h = 10 * fd_step();
  const int n = static_cast<int>(x.size());
  Mat hess(n, n);
  const double d0 = det(x);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (i == j) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        hess(i, i) = (det(xp) - 2 * d0 + det(xm)) / (h * h);
      } else {
        Vec a = x, b = x, c = x, d = x;
        a[i] += h; a[j] += h;
        b[i] += h; b[j] -= h;
        c[i] -= h; c[j] += h;
        d[i] -= h; d[j] -= h;
        hess(i, j) = hess(j, i) = (det(a) - det(b) - det(c) + det(d)) / (4 * h * h);
      }
    }
  }
  return hess;
}

RayFamilyMap::RayFamilyMap(std::shared_ptr<const RayFamily> family, double t_horizon, double tol)
    : family_(std::move(family)), horizon_(t_horizon), tol_(tol) {}

Vec RayFamilyMap::to_x(double t, const Vec& z) {
  Vec x(z.size() + 1);
  x[0] = t;
  x.tail(z.size()) = z;
  return x;
}

std::shared_ptr<const Ray> RayFamilyMap::ray(const Vec& z) const {
  std::vector<double> key(z.data(), z.data() + z.size());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  FlowOptions opt;
  opt.tol = tol_;
  auto r = std::make_shared<const Ray>(trace_ray(*family_, z, horizon_, opt));
  std::lock_guard<std::mutex> lock(mutex_);
  if (cache_.size() > 4096) cache_.clear();
  cache_.emplace(key, r);
  return r;
}

Vec RayFamilyMap::eval(const Vec& x) const { return ray(x.tail(x.size() - 1))->position(x[0]); }

Mat RayFamilyMap::jacobian(const Vec& x) const {
  const auto r = ray(x.tail(x.size() - 1));
  const JacobiBundle b = r->bundle(x[0]);
  return frame_matrix(family_->manifold(), b.base.position, b.columns);
}

Vec RayFamilyMap::radius_gradient(const Vec& x) const {
  Vec g = Vec::Zero(x.size());
  g[0] = 1.0;
  return g;
}

Vec RayFamilyMap::radial(const Vec& x) const { return radius_gradient(x); }

bool RayFamilyMap::in_domain(const Vec& x) const {
  if (x[0] < 0 || x[0] > horizon_) return false;
  const auto r = ray(x.tail(x.size() - 1));
  return !(r->exited() && x[0] > r->exit_time());
}

double RayFamilyMap::image_speed(const Vec& x, const Vec& v) const {
  const auto r = ray(x.tail(x.size() - 1));
  const JacobiBundle b = r->bundle(x[0]);
  const Vec w = b.columns * v;
  if (w.norm() == 0.0) return 0.0;
  return family_->manifold().metric().norm(b.base.position, w);
}

}  // namespace cutlocus
