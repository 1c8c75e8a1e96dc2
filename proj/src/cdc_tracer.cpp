#include "cutlocus/cdc_tracer.hpp"

#include "cutlocus/io.hpp"
#include "cutlocus/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cutlocus {

std::string to_string(CdcStop s) {
  switch (s) {
    case CdcStop::a3_hit: return "a3_hit";
    case CdcStop::domain_exit: return "domain_exit";
    case CdcStop::max_length: return "max_length";
    case CdcStop::unclassified: return "unclassified";
  }
  return "unclassified";
}

std::string to_string(D4Kind k) { return k == D4Kind::minus ? "minus" : "plus"; }

D4Kind d4_kind_from_string(const std::string& s) {
  if (s == "minus") return D4Kind::minus;
  if (s == "plus") return D4Kind::plus;
  throw ConfigError("unknown D4 kind '" + s + "'");
}

namespace {

// Newton along grad det onto det = 0; returns how far the point moved.
double snap(const LagrangianMap& map, Vec& x, int iters = 8) {
  const Vec x0 = x;
  for (int it = 0; it < iters; ++it) {
    const double d = map.det(x);
    if (d == 0.0) break;
    const Vec g = map.det_gradient(x);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) break;
    const Vec step = (d / g2) * g;
    x -= step;
    if (step.norm() <= 1e-15 * (1.0 + x.norm())) break;
  }
  return (x - x0).norm();
}

enum class Local { ok, order, slack };

struct LocalD {
  Local status = Local::ok;
  ConjugateDirection cd;
  Vec grad;
};

// D at a point already on the conjugate set.
LocalD local_direction(const LagrangianMap& map, const Vec& x, const DistributionOptions& opt) {
  LocalD out;
  out.cd.x = x;
  const Mat J = map.jacobian(x);
  const int n = static_cast<int>(J.rows());
  Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (n >= 2 && sv[n - 2] <= opt.rank_tol * sv[0]) {
    out.status = Local::order;
    return out;
  }
  const Vec k = svd.matrixV().col(n - 1);
  const Vec g = map.det_gradient(x);
  const Vec r = map.radial(x);
  Vec d = g.dot(r) * k - g.dot(k) * r;
  if (d.norm() == 0.0) {
    out.status = Local::slack;
    return out;
  }
  d.normalize();
  if (map.radius_gradient(x).dot(d) > 0) d = -d;
  out.grad = g;
  out.cd.d = d;
  out.cd.kernel = k;
  const double c = std::clamp(d.dot(k), -1.0, 1.0);
  out.cd.slack = std::sqrt(std::max(0.0, 1.0 - c * c));
  Eigen::Matrix<double, Eigen::Dynamic, 2> B(n, 2);
  B.col(0) = r;
  B.col(1) = k;
  const Eigen::Vector2d coef = B.colPivHouseholderQr().solve(d);
  out.cd.a = coef[0];
  out.cd.v = coef[1] * k;
  out.cd.kernel_residual = (J * out.cd.v).norm() / sv[0];
  out.cd.tangent_residual = std::abs(g.dot(d)) / g.norm();
  if (out.cd.slack < opt.slack_threshold) out.status = Local::slack;
  return out;
}

nlohmann::json point_json(const Vec& x) { return vec_to_json(x); }

}  // namespace

ConjugateDirection conjugate_distribution(const LagrangianMap& map, const Vec& x0, const DistributionOptions& opt) {
  if (!map.in_domain(x0)) throw DomainError("point outside the domain of the map");
  Vec x = x0;
  const double moved = snap(map, x);
  if (moved > opt.snap_tol * std::max(1.0, x0.norm()) || !std::isfinite(map.det(x)))
    throw DomainError("not a conjugate point (nearest conjugate point is " + format_number(moved, 6) + " away)");
  const LocalD ld = local_direction(map, x, opt);
  if (ld.status == Local::order)
    throw DegenerateDistribution("conjugate point of order above 1", {{"error", "degenerate_distribution"},
                                                                        {"x", point_json(x)}, {"reason", "order"}});
  if (ld.status == Local::slack)
    throw DegenerateDistribution("slack below threshold", {{"error", "degenerate_distribution"},
                                                           {"x", point_json(x)}, {"slack", ld.cd.slack}});
  return ld.cd;
}

ConjugateDirection conjugate_distribution(const RayFamilyMap& map, const RayCoordinate& x,
                                          const DistributionOptions& opt) {
  if (x.t <= 0.0) throw DomainError("not a conjugate point (t <= 0)");
  return conjugate_distribution(static_cast<const LagrangianMap&>(map), RayFamilyMap::to_x(x.t, x.z), opt);
}

double CDCurve::radius_drop() const {
  return samples.empty() ? 0.0 : samples.front().radius - samples.back().radius;
}

double CDCurve::unbeatable_error() const {
  if (image_length <= 0.0) return 0.0;
  return std::abs(radius_drop() - image_length) / image_length;
}

namespace {

Vec tilt(const Vec& d, const Vec& g, double angle) {
  if (angle == 0.0 || d.size() < 3) return d;
  // A unit vector of the tangent of the conjugate set orthogonal to d.
  const Vec gn = g.normalized();
  Vec w = Vec::Zero(d.size());
  double best = -1.0;
  for (int i = 0; i < d.size(); ++i) {
    Vec e = Vec::Zero(d.size());
    e[i] = 1.0;
    e -= e.dot(gn) * gn;
    e -= e.dot(d) * d;
    if (e.norm() > best) {
      best = e.norm();
      w = e;
    }
  }
  w.normalize();
  return std::cos(angle) * d + std::sin(angle) * w;
}

struct Velocity {
  bool ok = false;
  bool outside = false;
  Local status = Local::ok;
  Vec f;  // dx/ds
  double speed_r = 0.0;  // |dR(d)|
  double slack = 0.0;
};

Velocity velocity(const LagrangianMap& map, const Vec& x0, const TraceOptions& opt) {
  Velocity v;
  Vec x = x0;
  snap(map, x, 3);
  if (!map.in_domain(x)) {
    v.outside = true;
    return v;
  }
  const LocalD ld = local_direction(map, x, opt.distribution);
  v.status = ld.status;
  v.slack = ld.cd.slack;
  if (ld.status != Local::ok) return v;
  const Vec d = tilt(ld.cd.d, ld.grad, opt.cone_c * std::pow(ld.cd.slack, 3) * opt.cone_sign);
  const double dr = map.radius_gradient(x).dot(d);
  if (dr >= 0) return v;
  v.ok = true;
  v.speed_r = -dr;
  v.f = d / (-dr);
  return v;
}

double simpson_length(const LagrangianMap& map, const Vec& a, const Vec& b) {
  const Vec dx = b - a;
  Vec mid = 0.5 * (a + b);
  snap(map, mid, 4);
  return (map.image_speed(a, dx) + 4 * map.image_speed(mid, dx) + map.image_speed(b, dx)) / 6.0;
}

// Walks along the conjugate set from x until <grad det, k> changes sign.
bool refine_a3(const LagrangianMap& map, const Vec& x_start, const Vec& dir, const TraceOptions& opt, Vec& out) {
  DistributionOptions dopt = opt.distribution;
  dopt.slack_threshold = 0.0;
  auto probe = [&](const Vec& x, Vec& k, double& sigma, Vec& u) {
    const LocalD ld = local_direction(map, x, dopt);
    if (ld.status == Local::order || ld.grad.size() == 0) return false;
    if (ld.cd.kernel.dot(k) < 0) k = -ld.cd.kernel;
    else k = ld.cd.kernel;
    sigma = ld.grad.dot(k);
    u = ld.cd.d.dot(u) < 0 ? Vec(-ld.cd.d) : ld.cd.d;
    return true;
  };
  Vec xa = x_start, ka = local_direction(map, xa, dopt).cd.kernel, ua = dir;
  double sa = 0.0;
  if (ka.size() == 0 || !probe(xa, ka, sa, ua)) return false;
  const double scale = 1.0 + xa.norm();
  double h = 1e-7 * scale, walked = 0.0;
  Vec xb, kb, ub;
  double sb = sa;
  bool found = false;
  for (int it = 0; it < 200 && walked < 0.2 * scale; ++it) {
    xb = xa + h * ua;
    snap(map, xb);
    kb = ka;
    ub = ua;
    if (!map.in_domain(xb) || !probe(xb, kb, sb, ub)) return false;
    if ((sa > 0) != (sb > 0) || sb == 0.0) {
      found = true;
      break;
    }
    walked += h;
    xa = xb;
    ka = kb;
    ua = ub;
    sa = sb;
    h *= 1.5;
  }
  if (!found) return false;
  for (int it = 0; it < 80 && (xb - xa).norm() > 1e-14 * scale; ++it) {
    Vec xm = 0.5 * (xa + xb);
    snap(map, xm);
    Vec km = ka, um = ua;
    double sm;
    if (!probe(xm, km, sm, um)) return false;
    if ((sm > 0) == (sa > 0)) {
      xa = xm;
      ka = km;
      sa = sm;
    } else {
      xb = xm;
    }
  }
  out = 0.5 * (xa + xb);
  snap(map, out);
  return true;
}

}  // namespace

CDCurve trace_cdc(const LagrangianMap& map, const Vec& start, const TraceOptions& opt) {
  const ConjugateDirection cd0 = conjugate_distribution(map, start, opt.distribution);
  CDCurve c;
  Vec x = cd0.x;
  const double r0 = map.radius(x);
  c.samples.push_back({0.0, x, r0, cd0.slack});
  double s = 0.0;
  Vec last_dir = cd0.d;
  for (int step = 0; step < opt.max_steps; ++step) {
    if (s >= opt.max_length) {
      c.stop = CdcStop::max_length;
      return c;
    }
    const Velocity k1 = velocity(map, x, opt);
    if (!k1.ok) {
      c.stop = CdcStop::unclassified;
      return c;
    }
    double h = std::min({opt.step, opt.max_move * k1.speed_r, opt.max_length - s});
    Vec xn;
    Velocity vn;
    bool advanced = false, exited = false;
    for (int tries = 0; tries < 40 && h > 1e-15; ++tries) {
      const Velocity k2 = velocity(map, x + 0.5 * h * k1.f, opt);
      const Velocity k3 = k2.ok ? velocity(map, x + 0.5 * h * k2.f, opt) : Velocity{};
      const Velocity k4 = k3.ok ? velocity(map, x + h * k3.f, opt) : Velocity{};
      if (k2.outside || k3.outside || k4.outside) {
        exited = true;
        break;
      }
      // The descending orientation flips across an A3 point: a reversed stage means the step crossed one.
      if (!(k2.ok && k3.ok && k4.ok) || k2.f.dot(k1.f) <= 0 || k3.f.dot(k1.f) <= 0 || k4.f.dot(k1.f) <= 0) {
        h *= 0.25;
        continue;
      }
      xn = x + (h / 6.0) * (k1.f + 2 * k2.f + 2 * k3.f + k4.f);
      snap(map, xn);
      if (!map.in_domain(xn)) {
        exited = true;
        break;
      }
      vn = velocity(map, xn, opt);
      if (vn.ok && vn.f.dot(k1.f) <= 0) {
        h *= 0.25;
        continue;
      }
      advanced = true;
      break;
    }
    if (exited) {
      c.stop = CdcStop::domain_exit;
      return c;
    }
    if (!advanced) {
      // The distribution degenerates within a vanishing step of x.
      const LocalD here = local_direction(map, x, opt.distribution);
      Vec a3;
      if (here.status != Local::order && refine_a3(map, x, last_dir, opt, a3)) {
        c.image_length += simpson_length(map, x, a3);
        const double ra = map.radius(a3);
        c.samples.push_back({r0 - ra, a3, ra, 0.0});
        c.stop = CdcStop::a3_hit;
      } else {
        c.stop = CdcStop::unclassified;
      }
      return c;
    }
    const LocalD ld = local_direction(map, xn, opt.distribution);
    if (ld.status == Local::order) {
      c.stop = CdcStop::unclassified;
      return c;
    }
    const double rn = map.radius(xn);
    if (rn >= c.samples.back().radius) {
      c.stop = CdcStop::unclassified;
      return c;
    }
    c.image_length += simpson_length(map, x, xn);
    s = r0 - rn;
    c.samples.push_back({s, xn, rn, ld.cd.slack});
    if (ld.status == Local::slack) {
      Vec a3;
      if (refine_a3(map, xn, (xn - x).normalized(), opt, a3)) {
        c.image_length += simpson_length(map, xn, a3);
        const double ra = map.radius(a3);
        c.samples.push_back({r0 - ra, a3, ra, 0.0});
        c.stop = CdcStop::a3_hit;
      } else {
        c.stop = CdcStop::unclassified;
      }
      return c;
    }
    last_dir = (xn - x).normalized();
    x = xn;
  }
  c.stop = CdcStop::max_length;
  return c;
}

namespace {

// Newton on e(y) = target; converges past tol until the step stalls.
bool newton_lift(const LagrangianMap& map, const Vec& target, Vec& y, const RetortOptions& opt) {
  double res = (map.eval(y) - target).norm();
  for (int it = 0; it < opt.max_newton; ++it) {
    if (!std::isfinite(res)) return false;
    const Mat J = map.jacobian(y);
    const Vec step = J.colPivHouseholderQr().solve(map.eval(y) - target);
    if (!step.allFinite()) return false;
    double lam = 1.0;
    Vec yn = y - step;
    double rn = (map.eval(yn) - target).norm();
    while (rn > res && lam > 1e-3) {
      lam *= 0.5;
      yn = y - lam * step;
      rn = (map.eval(yn) - target).norm();
    }
    if (rn > res && res <= opt.newton_tol) break;
    y = yn;
    const bool small = step.norm() * lam <= 1e-15 * (1.0 + y.norm());
    res = rn;
    if (res <= opt.newton_tol && small) break;
    if (res == 0.0) break;
  }
  return res <= opt.newton_tol;
}

// A preimage of e(a) on the other branch near the singular point x0.
bool other_branch(const LagrangianMap& map, const Vec& x0, const Vec& a, const RetortOptions& opt, Vec& y) {
  const double dist = (a - x0).norm();
  for (double lam : {-2.0, -1.0, -3.0, -0.5, -1.5, -4.0, -6.0, -0.25}) {
    Vec cand = x0 + lam * (a - x0);
    if (!newton_lift(map, map.eval(a), cand, opt)) continue;
    if ((cand - a).norm() > 0.25 * dist && (cand - x0).norm() < 20 * dist) {
      y = cand;
      return true;
    }
  }
  return false;
}

}  // namespace

Retort build_retort(const LagrangianMap& map, const CDCurve& alpha, const Vec& start, const RetortOptions& opt) {
  const int n = static_cast<int>(alpha.samples.size());
  if (n < 2) throw DomainError("curve has fewer than two samples");
  const Vec& aend = alpha.samples.back().x;
  const Vec eend = map.eval(aend);
  if ((map.eval(start) - eend).norm() > 1e-6 * (1.0 + eend.norm()))
    throw DomainError("retort start does not map to the end of the curve");
  const bool joined = (start - aend).norm() <= 1e-9 * (1.0 + start.norm());
  Retort rt;
  rt.samples.push_back(start);
  rt.min_abs_det = kInf;
  double det_sign = 0.0;
  for (int j = 1; j < n; ++j) {
    const Vec& a = alpha.samples[n - 1 - j].x;
    const Vec target = map.eval(a);
    Vec y;
    auto fail = [&](const std::string& why) {
      throw RetortFailure("retort " + why, {{"error", "retort_failure"}, {"reason", why}, {"index", j},
                                            {"last_good", point_json(rt.samples.back())}});
    };
    if (j == 1 && joined) {
      if (!other_branch(map, start, a, opt, y)) fail("found no second preimage at the join");
    } else {
      y = rt.samples.back();
      if (j >= 2) y += rt.samples[j - 1] - rt.samples[j - 2];
      if (!newton_lift(map, target, y, opt)) {
        y = rt.samples.back();
        if (!newton_lift(map, target, y, opt)) fail("continuation diverged");
      }
    }
    if (!map.in_domain(y)) fail("left the patch");
    if ((y - a).norm() <= 1e-9 * (1.0 + a.norm())) fail("collapsed onto the curve");
    if (j < n - 1) {
      const Mat J = map.jacobian(y);
      const double dt = J.determinant();
      const double scale = std::pow(std::max(1.0, J.norm()), static_cast<double>(J.rows()));
      if (det_sign == 0.0) det_sign = dt > 0 ? 1.0 : -1.0;
      if (std::abs(dt) <= opt.det_floor * scale || dt * det_sign < 0) {
        rt.hit_conjugate = true;
        break;
      }
      rt.min_abs_det = std::min(rt.min_abs_det, std::abs(dt));
    }
    rt.samples.push_back(y);
  }
  const int m = static_cast<int>(rt.samples.size());
  rt.complete = m == n;
  for (int j = 0; j < m; ++j)
    rt.image_error = std::max(rt.image_error, (map.eval(rt.samples[j]) - map.eval(alpha.samples[n - 1 - j].x)).norm());
  rt.gain = map.radius(rt.samples.back()) - map.radius(rt.samples.front());
  rt.drop = alpha.samples[n - m].radius - alpha.samples.back().radius;
  if (!std::isfinite(rt.min_abs_det)) rt.min_abs_det = 0.0;
  return rt;
}

Retort build_retort(const LagrangianMap& map, const CDCurve& alpha, const RetortOptions& opt) {
  if (alpha.samples.empty()) throw DomainError("empty curve");
  const Vec& aend = alpha.samples.back().x;
  const Vec target = map.eval(aend);
  const int n = static_cast<int>(aend.size());
  // Seeds on a coarse grid of the patch around the curve.
  const double reach = 1.0;
  const int per = n == 2 ? 9 : 5;
  for (int idx = 0; idx < static_cast<int>(std::pow(per, n)); ++idx) {
    Vec seed = aend;
    int rem = idx;
    for (int i = 0; i < n; ++i) {
      seed[i] += reach * (2.0 * (rem % per) / (per - 1) - 1.0);
      rem /= per;
    }
    if (!map.in_domain(seed)) continue;
    Vec y = seed;
    if (!newton_lift(map, target, y, opt) || !map.in_domain(y)) continue;
    if ((y - aend).norm() <= 1e-6 * (1.0 + aend.norm())) continue;
    return build_retort(map, alpha, y, opt);
  }
  throw RetortFailure("no second preimage of the curve end in the patch",
                      {{"error", "retort_failure"}, {"reason", "no_start"}, {"end", point_json(aend)}});
}

A3Type a3_type(const LagrangianMap& map, const Vec& x, double probe) {
  DistributionOptions dopt;
  dopt.slack_threshold = 0.0;
  const LocalD ld = local_direction(map, x, dopt);
  if (ld.status == Local::order) throw DegenerateDistribution("not an A3 point", {{"error", "not_a3"}});
  const double r = map.radius(x);
  double signs[2];
  for (int s = 0; s < 2; ++s) {
    Vec y = x + (s == 0 ? probe : -probe) * ld.cd.kernel;
    snap(map, y);
    signs[s] = map.radius(y) - r;
  }
  if (signs[0] > 0 && signs[1] > 0) return A3Type::I;
  if (signs[0] < 0 && signs[1] < 0) return A3Type::II;
  throw DegenerateDistribution("radius is monotone through the point; not an A3 point",
                               {{"error", "not_a3"}, {"x", point_json(x)}});
}

JoinEvent a3_join(const LagrangianMap& map, const CDCurve& alpha) {
  if (alpha.stop != CdcStop::a3_hit) throw DomainError("curve does not end at an A3 point");
  JoinEvent j;
  j.point = alpha.end();
  j.radius = map.radius(j.point);
  j.type = a3_type(map, j.point);
  if (j.type == A3Type::II) throw DomainError("A3(II) point is not a terminal point of descending flow; no join");
  // Lift two samples of alpha at distances delta and delta / 2 and extrapolate the chord direction.
  const double total = (alpha.samples.front().x - j.point).norm();
  const double delta = std::min(4e-3, 0.5 * total);
  auto sample_at = [&](double dist) {
    int best = 0;
    double bd = kInf;
    for (int i = 0; i + 1 < static_cast<int>(alpha.samples.size()); ++i) {
      const double e = std::abs((alpha.samples[i].x - j.point).norm() - dist);
      if (e < bd) {
        bd = e;
        best = i;
      }
    }
    return alpha.samples[best].x;
  };
  RetortOptions ropt;
  Vec dirs[2];
  double dists[2];
  for (int k = 0; k < 2; ++k) {
    const Vec a = sample_at(k == 0 ? delta : 0.5 * delta);
    Vec y;
    if (!other_branch(map, j.point, a, ropt, y))
      throw RetortFailure("no second preimage near the A3 point", {{"error", "retort_failure"}, {"reason", "join"}});
    dirs[k] = (j.point - y).normalized();
    dists[k] = (a - j.point).norm();
  }
  // Chord direction error is linear in the distance.
  Vec d = dirs[1];
  if (dists[0] > dists[1] * 1.2) d = dirs[1] + (dirs[1] - dirs[0]) * (dists[1] / (dists[0] - dists[1]));
  j.direction = d.normalized();
  j.retort_direction = -j.direction;
  return j;
}

double tree_formed_error(const LagrangianMap& map, const CDCurve& alpha, const Retort& beta) {
  const int n = static_cast<int>(alpha.samples.size());
  double worst = 0.0;
  for (int j = 0; j < static_cast<int>(beta.samples.size()); ++j)
    worst = std::max(worst, (map.eval(alpha.samples[n - 1 - j].x) - map.eval(beta.samples[j])).norm());
  return worst;
}

std::vector<VertexCdc> vertex_cdcs(const ModelMap& map, double eps, int samples, const TraceOptions& opt) {
  if (map.dim() != 3) throw UnsupportedError("vertex CDCs are computed for three dimensional models");
  const Vec rhat = map.radial_at_origin().normalized();
  Vec u = Vec::Zero(3);
  u[std::abs(rhat[0]) < 0.9 ? 0 : 1] = 1.0;
  u -= u.dot(rhat) * rhat;
  u.normalize();
  Vec w(3);
  w << rhat[1] * u[2] - rhat[2] * u[1], rhat[2] * u[0] - rhat[0] * u[2], rhat[0] * u[1] - rhat[1] * u[0];
  // The first conjugate point on the radial line through the circle point at angle phi.
  auto sheet = [&](double phi, Vec& p) {
    const Vec q = eps * (std::cos(phi) * u + std::sin(phi) * w);
    auto f = [&](double s) { return map.det(q + s * rhat); };
    const int scan = 200;
    const double lo = -8 * eps, hi = 8 * eps;
    double sa = lo, fa = f(sa);
    for (int i = 1; i <= scan; ++i) {
      const double sb = lo + (hi - lo) * i / scan, fb = f(sb);
      if ((fa > 0) != (fb > 0) || fb == 0.0) {
        const double s = bracketed_root(f, sa, sb, fa, fb, 1e-15 * eps);
        p = q + s * rhat;
        return true;
      }
      sa = sb;
      fa = fb;
    }
    return false;
  };
  struct Probe {
    bool ok = false;
    double f = 0.0;
    Vec p, d;
  };
  auto probe = [&](double phi) {
    Probe pr;
    if (!sheet(phi, pr.p)) return pr;
    const LocalD ld = local_direction(map, pr.p, opt.distribution);
    if (ld.status != Local::ok) return pr;
    pr.ok = true;
    pr.d = ld.cd.d;
    // Zero exactly when d is along the generatrix, both lying in the tangent plane.
    Mat frame(3, 3);
    frame << pr.p.normalized(), pr.d, ld.grad.normalized();
    pr.f = frame.determinant();
    return pr;
  };
  std::vector<VertexCdc> out;
  // Offset so that symmetric roots do not sit on the sample grid.
  const double phi0 = 0.3183 * 2 * kPi / samples;
  Probe prev = probe(phi0);
  double prev_phi = phi0;
  for (int i = 1; i <= samples; ++i) {
    const double phi = phi0 + 2 * kPi * i / samples;
    const Probe cur = probe(phi);
    if (prev.ok && cur.ok && (prev.f > 0) != (cur.f > 0)) {
      double a = prev_phi, b = phi, fa = prev.f;
      bool good = true;
      for (int it = 0; it < 50 && good; ++it) {
        const double m = 0.5 * (a + b);
        const Probe pm = probe(m);
        if (!pm.ok) {
          good = false;
          break;
        }
        if ((pm.f > 0) == (fa > 0)) {
          a = m;
          fa = pm.f;
        } else {
          b = m;
        }
      }
      const Probe root = good ? probe(0.5 * (a + b)) : Probe{};
      if (root.ok) {
        const Vec G = root.p.normalized();
        const double c = root.d.dot(G);
        // A jump of the descending orientation across an A3 line is not an alignment.
        if (std::sqrt(std::max(0.0, 1.0 - c * c)) < 1e-5) {
          VertexCdc v;
          v.angle = std::fmod(0.5 * (a + b), 2 * kPi);
          v.start = root.p;
          v.leaving = c > 0;
          if (v.leaving) v.curve = trace_cdc(map, v.start, opt);
          out.push_back(std::move(v));
        }
      }
    }
    if (cur.ok || !prev.ok) {
      prev = cur;
      prev_phi = phi;
    }
  }
  return out;
}

D4Roots d4_root_analysis(double a, double b, D4Kind kind) {
  D4Roots r;
  r.kind = kind;
  r.a = a;
  r.b = b;
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("non-finite parameters");
  if (kind == D4Kind::minus) {
    if (a * a + b * b >= 1.0) throw DomainError("D4- needs a^2 + b^2 < 1");
    r.coefficients = {-0.5 * (a - 1), 0.5 * b, -0.5 * (a + 3), 0.5 * b};
    r.chamber = "disk";
  } else {
    if (a * b <= 1.0) throw DomainError("D4+ needs a b > 1");
    r.coefficients = {-1.0, -b, a, 1.0};
    r.chamber = a > 0 ? "type I" : "type II";
  }
  const auto& c = r.coefficients;
  Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
  comp(0, 0) = -c[1] / c[0];
  comp(0, 1) = -c[2] / c[0];
  comp(0, 2) = -c[3] / c[0];
  comp(1, 0) = 1.0;
  comp(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(comp);
  auto p = [&](double x) { return ((c[0] * x + c[1]) * x + c[2]) * x + c[3]; };
  auto dp = [&](double x) { return (3 * c[0] * x + 2 * c[1]) * x + c[2]; };
  for (int i = 0; i < 3; ++i) {
    const auto z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 4; ++it) {
      const double d = dp(x);
      if (d == 0.0) break;
      x -= p(x) / d;
    }
    r.roots.push_back(x == 0.0 ? 0.0 : x);
  }
  std::sort(r.roots.begin(), r.roots.end());
  const auto& x = r.roots;
  if (kind == D4Kind::minus) {
    const double s = 1.0 / std::sqrt(3.0);
    r.placement_ok = x.size() == 3 && x[0] < -s && x[1] > -s && x[1] < s && x[2] > s;
  } else if (r.chamber == "type I") {
    r.placement_ok = x.size() == 3 && x[0] < -1.0 && x[1] > -1.0 && x[1] < 0.0 && x[2] > 0.0;
  } else {
    r.placement_ok = !x.empty() && x.front() > 0.0;
  }
  return r;
}

std::string cdc_csv(const LagrangianMap& map, const CDCurve& c) {
  std::ostringstream os;
  const bool rays = dynamic_cast<const RayFamilyMap*>(&map) != nullptr;
  const int n = c.samples.empty() ? map.dim() : static_cast<int>(c.samples.front().x.size());
  os << "s";
  if (rays) {
    os << ",t";
    for (int i = 1; i < n; ++i) os << (n == 2 ? std::string(",z") : ",z" + std::to_string(i));
  } else {
    for (int i = 0; i < n; ++i) os << ",x" << i + 1;
  }
  os << ",R,slack\n";
  for (const auto& s : c.samples) {
    os << format_number(s.s);
    for (int i = 0; i < n; ++i) os << ',' << format_number(s.x[i]);
    os << ',' << format_number(s.radius) << ',' << format_number(s.slack) << '\n';
  }
  return os.str();
}

std::string retort_image_csv(const LagrangianMap& map, const CDCurve& alpha, const Retort& beta) {
  std::ostringstream os;
  const int n = static_cast<int>(alpha.samples.size());
  const int dim = map.dim();
  os << "i";
  for (const char* name : {"alpha", "beta", "e_alpha", "e_beta"})
    for (int k = 0; k < dim; ++k) os << ',' << name << k + 1;
  os << ",error\n";
  for (int j = 0; j < static_cast<int>(beta.samples.size()); ++j) {
    const Vec& a = alpha.samples[n - 1 - j].x;
    const Vec& b = beta.samples[j];
    const Vec ea = map.eval(a), eb = map.eval(b);
    os << n - 1 - j;
    for (const Vec* v : {&a, &b, &ea, &eb})
      for (int k = 0; k < dim; ++k) os << ',' << format_number((*v)[k]);
    os << ',' << format_number((ea - eb).norm()) << '\n';
  }
  return os.str();
}

nlohmann::json join_to_json(const JoinEvent& j) {
  return {{"point", vec_to_json(j.point)},
          {"type", j.type == A3Type::I ? "A3_I" : "A3_II"},
          {"direction", vec_to_json(j.direction)},
          {"retort_direction", vec_to_json(j.retort_direction)},
          {"radius", j.radius}};
}

nlohmann::json d4_roots_to_json(const D4Roots& r) {
  return {{"kind", to_string(r.kind)}, {"a", r.a}, {"b", r.b}, {"coefficients", r.coefficients},
          {"roots", r.roots}, {"chamber", r.chamber}, {"placement_ok", r.placement_ok}};
}

}  // namespace cutlocus
