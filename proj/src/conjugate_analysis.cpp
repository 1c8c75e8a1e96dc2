#include "cutlocus/conjugate_analysis.hpp"

#include "cutlocus/numerics.hpp"
#include "cutlocus/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace cutlocus {

std::string to_string(SingularityClass c) {
  switch (c) {
    case SingularityClass::A2: return "A2";
    case SingularityClass::A3_I: return "A3_I";
    case SingularityClass::A3_II: return "A3_II";
    case SingularityClass::A4: return "A4";
    case SingularityClass::D4_plus_I: return "D4_plus_I";
    case SingularityClass::D4_plus_II: return "D4_plus_II";
    case SingularityClass::D4_minus: return "D4_minus";
    case SingularityClass::UNCLASSIFIED: return "UNCLASSIFIED";
  }
  return "UNCLASSIFIED";
}

SingularityClass singularity_class_from_string(const std::string& s) {
  for (auto c : {SingularityClass::A2, SingularityClass::A3_I, SingularityClass::A3_II, SingularityClass::A4,
                 SingularityClass::D4_plus_I, SingularityClass::D4_plus_II, SingularityClass::D4_minus,
                 SingularityClass::UNCLASSIFIED})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown singularity class '" + s + "'");
}

Mat kernel_of(const Mat& jac, double rank_tol) {
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv[0];
  int k = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= rank_tol * top) ++k;
  return svd.matrixV().rightCols(k);
}

namespace {

// det relative to the largest singular value: scale free, signed.
double relative_det(const Mat& j) {
  Eigen::JacobiSVD<Mat> svd(j);
  const double top = svd.singularValues()[0];
  if (top == 0.0) return 0.0;
  return j.determinant() / std::pow(top, static_cast<double>(j.rows()));
}

double smallest_ratio(const Mat& j) {
  Eigen::JacobiSVD<Mat> svd(j);
  const auto& sv = svd.singularValues();
  return sv[0] == 0.0 ? 0.0 : sv[sv.size() - 1] / sv[0];
}

using JacFn = std::function<Mat(double)>;

// Roots of det along a parametrized scan: sign changes plus same-sign touchdowns.
std::vector<std::pair<double, Mat>> scan_roots(const std::vector<double>& s, const JacFn& exact, const JacFn& dense,
                                               const DetectOptions& opt) {
  const size_t n = s.size();
  std::vector<double> q(n);
  for (size_t i = 0; i < n; ++i) q[i] = relative_det(dense(s[i]));

  size_t run = 0;
  for (size_t i = 0; i < n; ++i) {
    run = std::abs(q[i]) < opt.degenerate_tol ? run + 1 : 0;
    if (run >= 5) {
      size_t a = i + 1 - run;
      nlohmann::json d = {{"error", "degenerate_ray"}, {"interval", {s[a], s[i]}}};
      throw NumericalError("det dF vanishes on an interval", d.dump());
    }
  }

  auto f = [&](double t) { return relative_det(exact(t)); };
  std::vector<double> roots;
  for (size_t i = 0; i + 1 < n; ++i) {
    if (q[i] == 0.0) {
      roots.push_back(s[i]);
      continue;
    }
    if (q[i] * q[i + 1] < 0) {
      const double fa = f(s[i]), fb = f(s[i + 1]);
      if (fa * fb <= 0) {
        roots.push_back(bracketed_root(f, s[i], s[i + 1], fa, fb, opt.root_tol * 1e-2));
        continue;
      }
    }
    if (i > 0 && q[i - 1] * q[i] > 0 && q[i] * q[i + 1] > 0 && std::abs(q[i]) < std::abs(q[i - 1]) &&
        std::abs(q[i]) <= std::abs(q[i + 1])) {
      auto g = [&](double t) { return smallest_ratio(exact(t)); };
      const auto [tm, gm] = local_minimum(g, s[i - 1], s[i + 1], 52);
      if (gm < opt.rank_tol) roots.push_back(tm);
    }
  }
  if (q[n - 1] == 0.0) roots.push_back(s[n - 1]);
  std::sort(roots.begin(), roots.end());
  std::vector<std::pair<double, Mat>> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(r - out.back().first) < 10 * opt.root_tol) continue;
    out.emplace_back(r, exact(r));
  }
  return out;
}

ConjugateEvent make_event(double t, const Mat& jac, const Vec& x, int component, const Vec& z,
                          const DetectOptions& opt) {
  ConjugateEvent e;
  e.ray = {t, component, z};
  e.x = x;
  e.kernel_basis = kernel_of(jac, opt.rank_tol);
  if (e.kernel_basis.cols() == 0) {
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
    e.kernel_basis = svd.matrixV().rightCols(1);
  }
  e.order = static_cast<int>(e.kernel_basis.cols());
  return e;
}

}  // namespace

std::vector<ConjugateEvent> detect_conjugate_events(const Ray& ray, int component, double t_max,
                                                    const DetectOptions& opt) {
  const auto& tn = ray.dense().t;
  const double t_end = std::min(t_max, ray.t_end());
  const double t_start = component < 0 ? 1e-6 * std::max(1.0, t_end) : 0.0;
  std::vector<double> s;
  for (size_t k = 0; k + 1 < tn.size(); ++k) {
    for (int j = 0; j < 4; ++j) {
      const double t = tn[k] + (tn[k + 1] - tn[k]) * j / 4.0;
      if (t >= t_start && t <= t_end) s.push_back(t);
    }
  }
  if (s.empty() || s.back() < t_end) s.push_back(t_end);
  if (s.size() < 3) return {};
  JacFn exact = [&ray](double t) { return ray.jacobian(t); };
  JacFn dense = [&ray](double t) { return ray.jacobian_dense(t); };
  std::vector<ConjugateEvent> out;
  for (const auto& [t, jac] : scan_roots(s, exact, dense, opt)) {
    if (t <= t_start) continue;
    out.push_back(make_event(t, jac, RayFamilyMap::to_x(t, ray.z()), component, ray.z(), opt));
  }
  return out;
}

std::vector<ConjugateEvent> detect_conjugate_events(const RayFamily& family, const Vec& z, double t_max,
                                                    const DetectOptions& opt) {
  if (!(t_max > 0)) throw DomainError("t_max must be positive");
  FlowOptions fo;
  fo.tol = opt.ray_tol;
  const Ray ray = trace_ray(family, z, t_max, fo);
  return detect_conjugate_events(ray, family.component(), t_max, opt);
}

std::vector<ConjugateEvent> detect_line_events(const LagrangianMap& map, const Vec& x0, const Vec& dir, double s_max,
                                               const DetectOptions& opt) {
  if (!(s_max > 0)) throw DomainError("scan length must be positive");
  const int n = std::max(opt.line_samples, 3);
  std::vector<double> s;
  for (int i = 0; i < n; ++i) {
    const double t = s_max * i / (n - 1);
    if (!map.in_domain(x0 + t * dir)) break;
    s.push_back(t);
  }
  if (s.size() < 3) return {};
  JacFn jf = [&](double t) { return map.jacobian(x0 + t * dir); };
  std::vector<ConjugateEvent> out;
  for (const auto& [t, jac] : scan_roots(s, jf, jf, opt)) {
    if (t <= 0) continue;
    out.push_back(make_event(t, jac, x0 + t * dir, -1, x0, opt));
  }
  return out;
}

namespace {

ExtendedTime kth(const std::vector<ConjugateEvent>& ev, int k) {
  if (k < 1) throw DomainError("k must be at least 1");
  int count = 0;
  for (const auto& e : ev) {
    count += e.order;
    if (count >= k) return ExtendedTime::of(e.ray.t);
  }
  return ExtendedTime::infinite();
}

}  // namespace

ExtendedTime lambda_k(const RayFamily& family, const Vec& z, int k, double t_cap, const DetectOptions& opt) {
  if (k < 1) throw DomainError("k must be at least 1");
  return kth(detect_conjugate_events(family, z, t_cap, opt), k);
}

ExtendedTime lambda_k_line(const LagrangianMap& map, const Vec& x0, const Vec& dir, int k, double s_max,
                           const DetectOptions& opt) {
  if (k < 1) throw DomainError("k must be at least 1");
  return kth(detect_line_events(map, x0, dir, s_max, opt), k);
}

LambdaProfile lambda_profile(const RayFamily& family, const std::vector<Vec>& zs, int k, double t_cap,
                             const DetectOptions& opt, int threads) {
  LambdaProfile p;
  p.k = k;
  p.z = zs;
  p.values.resize(zs.size());
  p.shape[0] = static_cast<int>(zs.size());
  p.periodic = family.periodic() && family.z_dim() == 1;
  p.period = family.period();
  parallel_for(zs.size(), threads, [&](size_t i) { p.values[i] = lambda_k(family, zs[i], k, t_cap, opt); });
  return p;
}

LambdaProfile lambda_profile_lines(const LagrangianMap& map, const std::vector<Vec>& zs, const std::vector<Vec>& x0,
                                   const Vec& dir, int k, double s_max, const DetectOptions& opt) {
  if (zs.size() != x0.size()) throw DomainError("one start point per grid node is required");
  LambdaProfile p;
  p.k = k;
  p.z = zs;
  p.shape[0] = static_cast<int>(zs.size());
  for (size_t i = 0; i < zs.size(); ++i) p.values.push_back(lambda_k_line(map, x0[i], dir, k, s_max, opt));
  return p;
}

double lipschitz_estimate(const LambdaProfile& p) {
  const int n0 = p.shape[0], n1 = std::max(p.shape[1], 1);
  if (static_cast<size_t>(n0) * n1 != p.values.size() || p.z.size() != p.values.size())
    throw DomainError("profile shape does not match its values");
  double best = 0.0;
  auto pair = [&](size_t a, size_t b, bool wrap) {
    if (p.values[a].is_inf() || p.values[b].is_inf()) return;
    Vec dz = p.z[b] - p.z[a];
    if (wrap) dz[0] = periodic_diff(p.z[b][0], p.z[a][0], p.period);
    const double len = dz.norm();
    if (len == 0.0) return;
    best = std::max(best, std::abs(p.values[b].value - p.values[a].value) / len);
  };
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      const size_t a = static_cast<size_t>(i) * n1 + j;
      if (i + 1 < n0) pair(a, a + n1, false);
      else if (p.periodic && n0 > 2) pair(a, static_cast<size_t>(j), true);
      if (j + 1 < n1) pair(a, a + 1, false);
    }
  }
  return best;
}

namespace {

// Signed offset h with det(base + h n) = 0 nearest to h = 0 within [-rho, rho].
bool conjugate_offset(const LagrangianMap& map, const Vec& base, const Vec& n, double rho, double& h) {
  auto f = [&](double s) {
    const Vec y = base + s * n;
    return map.det(y);
  };
  const int m = 40;
  double best = kInf;
  bool found = false;
  double prev_s = -rho, prev_f = f(-rho);
  for (int i = 1; i <= m; ++i) {
    const double s = -rho + 2 * rho * i / m;
    const double fs = f(s);
    if (prev_f == 0.0 || prev_f * fs < 0) {
      const double r = prev_f == 0.0 ? prev_s : bracketed_root(f, prev_s, s, prev_f, fs, 1e-15);
      if (std::abs(r) < std::abs(best)) {
        best = r;
        found = true;
      }
    }
    prev_s = s;
    prev_f = fs;
  }
  h = best;
  return found;
}

struct PolyFit {
  Eigen::VectorXd c;
  double rss = 0.0;
};

PolyFit fit_poly(const std::vector<double>& a, const std::vector<double>& h, int degree, double rho) {
  const int m = static_cast<int>(a.size());
  Eigen::MatrixXd A(m, degree + 1);
  Eigen::VectorXd b(m), w(m);
  for (int i = 0; i < m; ++i) {
    w[i] = 1.0 - 0.5 * (a[i] / rho) * (a[i] / rho);
    for (int d = 0; d <= degree; ++d) A(i, d) = std::pow(a[i], d) * w[i];
    b[i] = h[i] * w[i];
  }
  PolyFit out;
  out.c = A.colPivHouseholderQr().solve(b);
  out.rss = (A * out.c - b).squaredNorm();
  return out;
}

SingularityClass classify_order1(const LagrangianMap& map, const Vec& x, const Vec& kernel, const ClassifyOptions& opt) {
  const Vec grad = map.det_gradient(x);
  if (!(grad.norm() > 0)) return SingularityClass::UNCLASSIFIED;
  const Vec n = grad.normalized();
  const Vec k = kernel.normalized();
  if (std::abs(k.dot(n)) > opt.transversal_tol) return SingularityClass::A2;

  const Vec kt = (k - k.dot(n) * n).normalized();
  const double rho = opt.radius;
  std::vector<double> as, hs;
  for (int i = 0; i < opt.samples; ++i) {
    const double a = rho * (-1.0 + 2.0 * i / (opt.samples - 1));
    double h;
    const Vec base = x + a * kt;
    if (!map.in_domain(base)) continue;
    if (conjugate_offset(map, base, n, rho, h)) {
      as.push_back(a);
      hs.push_back(h);
    }
  }
  if (static_cast<int>(as.size()) < std::min(30, opt.samples)) return SingularityClass::UNCLASSIFIED;
  const PolyFit quad = fit_poly(as, hs, 2, rho);
  const PolyFit cub = fit_poly(as, hs, 3, rho);
  const double m = static_cast<double>(as.size());
  const double floor = std::pow(opt.residual_tol * rho, 2) * m;
  if (cub.rss > floor) return SingularityClass::UNCLASSIFIED;
  const double c2 = cub.c[2], c3 = cub.c[3];
  if (std::abs(c2) * rho > opt.significance) {
    const Vec side = (c2 > 0 ? 1.0 : -1.0) * n;
    return map.radial(x).dot(side) > 0 ? SingularityClass::A3_I : SingularityClass::A3_II;
  }
  const bool cubic_needed = quad.rss > opt.f_ratio * cub.rss || quad.rss <= floor;
  if (std::abs(c3) * rho * rho > opt.significance && cubic_needed) return SingularityClass::A4;
  return SingularityClass::UNCLASSIFIED;
}

SingularityClass classify_order2(const LagrangianMap& map, const Vec& x, const Mat& kernel, const ClassifyOptions& opt) {
  if (map.dim() != 3) return SingularityClass::UNCLASSIFIED;
  const Mat hess = map.det_hessian(x);
  Eigen::SelfAdjointEigenSolver<Mat> es(hess);
  const Vec ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (!(scale > 0) || ev.cwiseAbs().minCoeff() < 1e-3 * scale) return SingularityClass::UNCLASSIFIED;
  const int pos = static_cast<int>((ev.array() > 0).count());
  if (pos == 0 || pos == 3) return SingularityClass::UNCLASSIFIED;

  const Mat hk = kernel.transpose() * hess * kernel;
  Eigen::SelfAdjointEigenSolver<Mat> ek(hk);
  const Vec kv = ek.eigenvalues();
  const double ks = kv.cwiseAbs().maxCoeff();
  if (!(ks > 0) || kv.cwiseAbs().minCoeff() < 1e-3 * ks) return SingularityClass::UNCLASSIFIED;
  if (kv[0] * kv[1] > 0) return SingularityClass::D4_minus;

  // Hyperbolic umbilic: locate the A3 generatrix on the nappe opposite r.
  const Vec r = map.radial(x);
  const int axis_index = pos == 1 ? 2 : 0;  // eigenvalues ascending; the minority sign
  Vec axis = es.eigenvectors().col(axis_index);
  if (axis.dot(r) < 0) axis = -axis;
  const int ib = axis_index == 2 ? 0 : 1, ic = axis_index == 2 ? 1 : 2;
  const double la = ev[axis_index], lb = ev[ib], lc = ev[ic];
  const Vec eb = es.eigenvectors().col(ib), ec = es.eigenvectors().col(ic);
  const double rho = opt.radius;
  auto direction = [&](double phi) {
    const double b = std::cos(phi) / std::sqrt(std::abs(lb)), c = std::sin(phi) / std::sqrt(std::abs(lc));
    const double a = std::sqrt(std::max(0.0, -(lb * b * b + lc * c * c) / la));
    return Vec((-a * axis + b * eb + c * ec).normalized());
  };
  auto tangency = [&](double phi) {
    Vec y = x + rho * direction(phi);
    const Vec g = map.det_gradient(y);
    double h;
    if (conjugate_offset(map, y, g.normalized(), 0.2 * rho, h)) y += h * g.normalized();
    Eigen::JacobiSVD<Mat> svd(map.jacobian(y), Eigen::ComputeFullV);
    const Vec k = svd.matrixV().col(2);
    return std::abs(k.dot(map.det_gradient(y).normalized()));
  };
  const int m = 180;
  int best = 0;
  double best_v = kInf;
  for (int i = 0; i < m; ++i) {
    const double v = tangency(2 * kPi * i / m);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  const double step = 2 * kPi / m;
  const auto [phi, val] = local_minimum(tangency, (best - 1) * step, (best + 1) * step, 30);
  if (val > 0.05) return SingularityClass::UNCLASSIFIED;
  const Vec ell = direction(phi);
  const Eigen::Vector3d k0 = kernel.col(0), k1 = kernel.col(1);
  const Vec nu = k0.cross(k1);
  const double s_ell = ell.dot(nu), s_r = r.dot(nu);
  if (std::abs(s_ell) < 1e-6 || std::abs(s_r) < 1e-6) return SingularityClass::UNCLASSIFIED;
  return (s_ell > 0) != (s_r > 0) ? SingularityClass::D4_plus_I : SingularityClass::D4_plus_II;
}

}  // namespace

SingularityClass classify_singularity(const LagrangianMap& map, const ConjugateEvent& event, const ClassifyOptions& opt) {
  if (event.order != 1 && event.order != 2) return SingularityClass::UNCLASSIFIED;
  const Vec& x = event.x;
  Mat kernel = event.kernel_basis;
  if (kernel.cols() != event.order) {
    Eigen::JacobiSVD<Mat> svd(map.jacobian(x), Eigen::ComputeFullV);
    kernel = svd.matrixV().rightCols(event.order);
  }
  if (event.order == 1) return classify_order1(map, x, kernel.col(0), opt);
  return classify_order2(map, x, kernel, opt);
}

SingularityClass classify_singularity(std::shared_ptr<const RayFamily> family, const ConjugateEvent& event,
                                      const ClassifyOptions& opt) {
  const RayFamilyMap map(std::move(family), event.ray.t + 10 * opt.radius + 1.0);
  ConjugateEvent e = event;
  e.x = RayFamilyMap::to_x(event.ray.t, event.ray.z);
  return classify_singularity(map, e, opt);
}

nlohmann::json event_to_json(const ConjugateEvent& e) {
  nlohmann::json kb = nlohmann::json::array();
  for (int j = 0; j < e.kernel_basis.cols(); ++j) {
    nlohmann::json col = nlohmann::json::array();
    for (int i = 0; i < e.kernel_basis.rows(); ++i) col.push_back(e.kernel_basis(i, j));
    kb.push_back(col);
  }
  nlohmann::json z = nlohmann::json::array();
  for (int i = 0; i < e.ray.z.size(); ++i) z.push_back(e.ray.z[i]);
  return {{"t", e.ray.t}, {"z", z}, {"component", e.ray.component}, {"order", e.order},
          {"class", to_string(e.cls)}, {"kernel_basis", kb}};
}

}  // namespace cutlocus
