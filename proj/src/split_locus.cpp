#include "cutlocus/split_locus.hpp"

#include "cutlocus/manifolds.hpp"
#include "cutlocus/numerics.hpp"
#include "cutlocus/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cutlocus {

double RaySystem::value(const Vec& q) const {
  (void)q;
  throw UnsupportedError("ray system has no value function");
}

std::vector<Arrival> RaySystem::minimal(const Vec& q, double eps) const {
  auto all = arrivals(q);
  double vmin = kInf;
  for (const auto& a : all) vmin = std::min(vmin, a.value);
  std::vector<Arrival> out;
  for (const auto& a : all)
    if (a.value <= vmin + eps) out.push_back(a);
  std::sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) { return a.value < b.value; });
  return out;
}

namespace {

Arrival arrival_from(const HJProblem& pb, const Minimizer& m) {
  Arrival a;
  a.sheet = m.component;
  a.z = m.z;
  a.t = m.length;
  a.value = m.value;
  a.h = pb.is_point_source() ? m.value : m.value - pb.data().off(m.component);
  a.arrival = m.arrival;
  a.initial = m.initial;
  a.start = pb.is_point_source() ? pb.source() : pb.manifold().boundary()[m.component].position(m.z[0]);
  return a;
}

}  // namespace

ProblemRays::ProblemRays(std::shared_ptr<const HJProblem> problem) : pb_(std::move(problem)) {
  straight_ = dynamic_cast<const FlatDomain*>(&pb_->manifold()) != nullptr && pb_->manifold().metric().is_constant();
}

std::vector<Arrival> ProblemRays::arrivals(const Vec& q) const {
  std::vector<Arrival> out;
  for (const auto& m : pb_->local_minimizers(q)) out.push_back(arrival_from(*pb_, m));
  std::sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) { return a.t < b.t; });
  return out;
}

Vec ProblemRays::ray_point(const Arrival& a, double s) const {
  if (straight_) return a.start + s * a.initial;
  FlowOptions fo;
  fo.tol = 1e-9;
  fo.stop_at_boundary = false;
  return exponential_from_boundary(*pb_->family(a.sheet), {s, a.sheet, a.z}, fo);
}

TorusTranslates::TorusTranslates(Vec b, Vec source, int reach)
    : b_(std::move(b)), src_(std::move(source)), reach_(reach), torus_(std::make_shared<FlatTorus>(vec2(1, 1))) {
  if (b_.size() != 2) throw ConfigError("torus parameter b must be a 2-vector");
  // Offsets are compatible iff |<b, k - k'>| < |k - k'| for all lattice pairs.
  if (b_.norm() >= 1.0 - 1e-6) throw CompatibilityError("translate offsets violate compatibility", b_.norm());
}

Vec TorusTranslates::translate(int sheet) const {
  const int w = 2 * reach_ + 1;
  return vec2(sheet / w - reach_, sheet % w - reach_);
}

std::vector<Arrival> TorusTranslates::arrivals(const Vec& q) const {
  const int w = 2 * reach_ + 1;
  std::vector<Arrival> out;
  for (int sheet = 0; sheet < w * w; ++sheet) {
    const Vec k = translate(sheet);
    const Vec d = q - src_ - k;
    const double t = d.norm();
    if (t < 1e-14) continue;
    Arrival a;
    a.sheet = sheet;
    a.t = t;
    a.h = t;
    a.value = t + b_.dot(k);
    a.arrival = d / t;
    a.initial = a.arrival;
    a.start = src_ + k;
    a.z = Vec::Constant(1, std::atan2(d[1], d[0]));
    out.push_back(a);
  }
  std::sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) { return a.t < b.t; });
  return out;
}

Vec TorusTranslates::ray_point(const Arrival& a, double s) const { return torus_->wrap(a.start + s * a.initial); }

double TorusTranslates::value(const Vec& q) const {
  const int w = 2 * reach_ + 1;
  double v = kInf;
  for (int sheet = 0; sheet < w * w; ++sheet) {
    const Vec k = translate(sheet);
    v = std::min(v, (q - src_ - k).norm() + b_.dot(k));
  }
  return v;
}

std::string to_string(PointClass c) {
  switch (c) {
    case PointClass::CLEAVE: return "CLEAVE";
    case PointClass::EDGE: return "EDGE";
    case PointClass::DEGENERATE_CLEAVE: return "DEGENERATE_CLEAVE";
    case PointClass::CROSSING: return "CROSSING";
    case PointClass::REMAINDER: return "REMAINDER";
  }
  return "REMAINDER";
}

std::vector<Vec> SplitLocusModel::positions() const {
  std::vector<Vec> out;
  for (const auto& s : samples) out.push_back(s.p);
  return out;
}

double SplitLocusModel::multi_fraction() const {
  if (samples.empty()) return 0.0;
  int n = 0;
  for (const auto& s : samples)
    if (s.r_count() >= 2 || s.continuum) ++n;
  return static_cast<double>(n) / samples.size();
}

namespace {

double grid_spacing(const GridSpec& g, int n) {
  const double du = (g.u1 - g.u0) / (g.periodic_u ? n : n - 1);
  const double dv = (g.v1 - g.v0) / (g.periodic_v ? n : n - 1);
  return std::max(du, dv);
}

// Proximity cloud; on the torus every point is also entered with its eight
// lattice shifts so that queries near the seams see across them.
PointCloud make_cloud(const Manifold& m, const std::vector<Vec>& pts, double radius) {
  const auto* torus = dynamic_cast<const FlatTorus*>(&m);
  if (!torus) return PointCloud(pts, radius);
  std::vector<Vec> all;
  const Vec& per = torus->periods();
  for (const auto& p : pts)
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) all.push_back(m.wrap(p) + vec2(i * per[0], j * per[1]));
  return PointCloud(std::move(all), radius);
}

// True when the ray of a stays at least fine.radius() away from the cloud on [0, s_end].
bool ray_clear(const RaySystem& rays, const Arrival& a, double s_end, const PointCloud& fine,
               const PointCloud& coarse) {
  const double r = fine.radius(), big = coarse.radius();
  double s = 0.0;
  while (true) {
    const double sc = std::min(s, s_end);
    const Vec x = rays.manifold().wrap(rays.ray_point(a, sc));
    const double d = coarse.distance(x);
    if (d < r) return false;
    if (sc >= s_end) return true;
    s += d < big ? std::max(0.5 * r, d - r) : big - r;
  }
}

void finish_model(SplitLocusModel& model) {
  classify_points(model);
  if (model.manifold().coord_dim() == 2) chain_components(model);
}

}  // namespace

SplitLocusModel build_cut_locus_model(std::shared_ptr<const HJProblem> problem, int grid, int threads) {
  (void)threads;
  const auto sol = lax_oleinik_solve(*problem, grid, grid);
  const auto S = singular_set_extract(*problem, sol);
  SplitLocusModel model;
  model.family = "cut_locus";
  model.rays = std::make_shared<ProblemRays>(problem);
  model.spacing = grid_spacing(sol.grid, grid);
  for (const auto& sp : S.points) {
    // Grid samples enter only when their minimizers tie exactly; near-ties
    // lie up to epsilon_min off the locus.
    if (!sp.from_edge && !sp.continuum) {
      const double spread = sp.minimizers.back().value - sp.minimizers.front().value;
      if (spread > 1e-10) continue;
    }
    SplitSample s;
    s.p = sp.p;
    s.continuum = sp.continuum;
    for (size_t i = 0; i < sp.minimizers.size(); ++i) {
      s.sides.push_back(arrival_from(*problem, sp.minimizers[i]));
      s.conjugate.push_back(i < sp.conjugate.size() && sp.conjugate[i]);
    }
    model.samples.push_back(std::move(s));
  }
  finish_model(model);
  return model;
}

SplitLocusModel build_split_locus_from_constants(std::shared_ptr<const Manifold> m, const BoundaryData& g,
                                                 const std::vector<double>& a, const ConstantsOptions& opt) {
  if (a.size() != m->boundary().size()) throw ConfigError("need one constant per boundary component");
  BoundaryData ga = g;
  ga.offset = a;
  const auto rep = check_compatibility(*m, ga);
  if (!rep.ok) throw CompatibilityError("boundary data g + a is not compatible", rep.k);
  SolveOptions so = opt.solve;
  if (opt.threads) so.threads = opt.threads;
  auto pb = HJProblem::boundary(m, ga, so);
  SplitLocusModel model = build_cut_locus_model(pb, opt.grid, opt.threads);
  model.family = "constants";
  model.parameter = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  return model;
}

SplitLocusModel build_torus_family(const Vec& b, int n, int threads) {
  auto sys = std::make_shared<TorusTranslates>(b);
  const TorusTranslates& T = *sys;
  SplitLocusModel model;
  model.family = "torus";
  model.parameter = b;
  model.rays = sys;
  model.spacing = 1.0 / n;
  const int sheets = 25;
  auto vk = [&](int sheet, const Vec& x) {
    const Vec k = T.translate(sheet);
    return (x - k).norm() + b.dot(k);
  };
  auto at = [&](double u, double v) { return vec2(u / n, v / n); };
  std::vector<int> arg(static_cast<size_t>(n) * n);
  std::vector<double> gap(arg.size());
  parallel_for(arg.size(), threads, [&](size_t idx) {
    const Vec x = at(static_cast<double>(idx / n), static_cast<double>(idx % n));
    double v1 = kInf, v2 = kInf;
    int a1 = 0;
    for (int s = 0; s < sheets; ++s) {
      const double v = vk(s, x);
      if (v < v1) {
        v2 = v1;
        v1 = v;
        a1 = s;
      } else if (v < v2) {
        v2 = v;
      }
    }
    arg[idx] = a1;
    gap[idx] = v2 - v1;
  });
  const double tie = 1e-8;
  auto sample_at = [&](const Vec& x) {
    SplitSample s;
    s.p = T.torus()->wrap(x);
    s.sides = T.minimal(x, tie);
    s.conjugate.assign(s.sides.size(), false);
    return s;
  };
  std::vector<std::vector<SplitSample>> rows(n);
  parallel_for(n, threads, [&](size_t i) {
    for (int j = 0; j < n; ++j) {
      const size_t idx = i * n + j;
      const Vec x = at(static_cast<double>(i), j);
      if (gap[idx] <= 1e-11) rows[i].push_back(sample_at(x));
      for (int dir = 0; dir < 2; ++dir) {
        const int i1 = dir == 0 ? static_cast<int>(i) + 1 : static_cast<int>(i);
        const int j1 = dir == 0 ? j : j + 1;
        const int ka = arg[idx], kb = arg[static_cast<size_t>(i1 % n) * n + (j1 % n)];
        if (ka == kb) continue;
        const Vec x1 = at(i1, j1);
        auto delta = [&](double lam) {
          const Vec y = x + lam * (x1 - x);
          return vk(ka, y) - vk(kb, y);
        };
        const double d0 = delta(0.0), d1 = delta(1.0);
        if (!(d0 < -1e-12 && d1 > 1e-12)) continue;
        const double lam = bracketed_root(delta, 0.0, 1.0, d0, d1, 1e-14);
        const Vec y = x + lam * (x1 - x);
        if (T.value(y) < vk(ka, y) - 1e-9) continue;
        rows[i].push_back(sample_at(y));
      }
    }
  });
  for (auto& r : rows)
    for (auto& s : r) model.samples.push_back(std::move(s));
  // Vertices: cells whose corners see three or more translates.
  std::vector<Vec> vertices;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<int> ks;
      for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj) {
          const int k = arg[static_cast<size_t>((i + di) % n) * n + ((j + dj) % n)];
          if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
        }
      if (ks.size() < 3) continue;
      for (size_t p = 0; p < ks.size(); ++p)
        for (size_t q = p + 1; q < ks.size(); ++q)
          for (size_t r = q + 1; r < ks.size(); ++r) {
            Vec x = at(i + 0.5, j + 0.5);
            bool conv = false;
            for (int it = 0; it < 50; ++it) {
              const Vec ua = (x - T.translate(ks[p])).normalized();
              const Vec ub = (x - T.translate(ks[q])).normalized();
              const Vec uc = (x - T.translate(ks[r])).normalized();
              const Eigen::Vector2d F(vk(ks[p], x) - vk(ks[q], x), vk(ks[p], x) - vk(ks[r], x));
              if (F.norm() < 1e-14) {
                conv = true;
                break;
              }
              Eigen::Matrix2d J;
              J.row(0) = (ua - ub).transpose();
              J.row(1) = (ua - uc).transpose();
              const Eigen::Vector2d d = J.fullPivLu().solve(F);
              if (!d.allFinite()) break;
              x -= Vec(d);
            }
            if (!conv) continue;
            const Vec c = at(i + 0.5, j + 0.5);
            if ((x - c).cwiseAbs().maxCoeff() > 1.5 / n) continue;
            if (T.value(x) < vk(ks[p], x) - 1e-9) continue;
            const Vec w = T.torus()->wrap(x);
            bool dup = false;
            for (const auto& v : vertices)
              if (T.torus()->displacement(v, w).norm() < 0.5 / n) dup = true;
            for (const auto& smp : model.samples)
              if (smp.r_count() >= 3 && T.torus()->displacement(smp.p, w).norm() < 0.5 / n) dup = true;
            if (dup) continue;
            vertices.push_back(w);
            model.samples.push_back(sample_at(x));
          }
    }
  finish_model(model);
  return model;
}

SplitLocusModel build_split_locus_from_set(std::shared_ptr<const RaySystem> rays, std::vector<Vec> points,
                                           double spacing, int threads) {
  SplitLocusModel model;
  model.family = "set";
  model.rays = rays;
  model.spacing = spacing;
  const Manifold& m = rays->manifold();
  const PointCloud fine = make_cloud(m, points, spacing);
  const PointCloud coarse = make_cloud(m, points, 8 * spacing);
  model.samples.resize(points.size());
  parallel_for(points.size(), threads, [&](size_t i) {
    SplitSample& s = model.samples[i];
    s.p = m.wrap(points[i]);
    for (const auto& a : rays->arrivals(points[i])) {
      const double s_end = a.t - 3 * spacing;
      if (s_end <= 0 || ray_clear(*rays, a, s_end, fine, coarse)) {
        s.sides.push_back(a);
        s.conjugate.push_back(false);
      }
    }
  });
  finish_model(model);
  return model;
}

SplitReport verify_splits(const SplitLocusModel& model, int probes_per_axis, int threads) {
  const Manifold& m = model.manifold();
  const auto pts = model.positions();
  const PointCloud fine = make_cloud(m, pts, model.spacing);
  const PointCloud coarse = make_cloud(m, pts, 8 * model.spacing);
  const GridSpec g = m.grid_spec();
  const int n = probes_per_axis;
  std::vector<int> count(static_cast<size_t>(n) * n, -1);
  std::vector<Vec> probe(count.size());
  parallel_for(count.size(), threads, [&](size_t k) {
    const int i = static_cast<int>(k / n), j = static_cast<int>(k % n);
    // Probe nodes sit at cell centres so that they avoid symmetry lines.
    const Vec q = m.grid_point(g.u0 + (g.u1 - g.u0) * (i + 0.5) / n, g.v0 + (g.v1 - g.v0) * (j + 0.5) / n);
    probe[k] = q;
    if (!m.contains(q, 0.0) || m.interior_margin(q) < model.spacing) return;
    if (fine.distance(m.wrap(q)) < 2 * model.spacing) return;
    if (coarse.distance(m.wrap(q)) < 2 * model.spacing) return;
    int c = 0;
    for (const auto& a : model.rays->arrivals(q)) {
      if (ray_clear(*model.rays, a, a.t, fine, coarse)) ++c;
      if (c >= 2) break;
    }
    count[k] = c;
  });
  SplitReport rep;
  rep.probes = static_cast<int>(count.size());
  for (size_t k = 0; k < count.size(); ++k) {
    if (count[k] < 0) continue;
    ++rep.checked;
    if (count[k] != 1) rep.failures.push_back({probe[k], count[k]});
  }
  return rep;
}

namespace {

double angle_between(const Vec& a, const Vec& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

// Indices of the k nearest other samples.
std::vector<int> nearest(const SplitLocusModel& model, int i, int k, double max_dist) {
  const Manifold& m = model.manifold();
  std::vector<std::pair<double, int>> d;
  for (int j = 0; j < static_cast<int>(model.samples.size()); ++j) {
    if (j == i) continue;
    const double r = m.displacement(model.samples[i].p, model.samples[j].p).norm();
    if (r <= max_dist && r > 1e-12) d.push_back({r, j});
  }
  const size_t kk = std::min<size_t>(k, d.size());
  std::partial_sort(d.begin(), d.begin() + kk, d.end());
  std::vector<int> out;
  for (size_t j = 0; j < kk; ++j) out.push_back(d[j].second);
  return out;
}

// Tangent at p of the curve through pts from a quadratic fit in its principal
// frame; empty when the points do not look like one smooth curve. With
// through_p the fit is also pinned at p.
Vec fitted_tangent(const Manifold& m, const Vec& p, const std::vector<Vec>& pts, double spacing,
                   bool through_p = true) {
  if (pts.size() < 3 || p.size() != 2) return Vec();
  std::vector<Eigen::Vector2d> d;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& q : pts) {
    const Vec v = m.displacement(p, q);
    d.push_back(Eigen::Vector2d(v[0], v[1]));
    mean += d.back();
  }
  mean /= static_cast<double>(d.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& x : d) cov += (x - mean) * (x - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  if (es.eigenvalues()[0] > 0.05 * es.eigenvalues()[1]) return Vec();
  const Eigen::Vector2d e1 = es.eigenvectors().col(1), e2 = es.eigenvectors().col(0);
  const size_t rows = d.size() + (through_p ? 1 : 0);
  Eigen::MatrixXd A(rows, 3);
  Eigen::VectorXd y(rows);
  for (size_t i = 0; i < d.size(); ++i) {
    const double s = d[i].dot(e1);
    A.row(i) << 1.0, s, s * s;
    y[i] = d[i].dot(e2);
  }
  if (through_p) {
    A.row(d.size()) << 1.0, 0.0, 0.0;
    y[d.size()] = 0.0;
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
  if ((A * c - y).cwiseAbs().maxCoeff() > 0.02 * spacing) return Vec();
  const Eigen::Vector2d t = (e1 + c[1] * e2).normalized();
  return vec2(t[0], t[1]);
}

int match_side(const std::vector<Arrival>& sides, const Vec& x, double max_angle) {
  int best = -1;
  double ba = max_angle;
  for (int k = 0; k < static_cast<int>(sides.size()); ++k) {
    const double a = angle_between(sides[k].arrival, x);
    if (a <= ba) {
      ba = a;
      best = k;
    }
  }
  return best;
}

// Samples on the same sheet pair: every vector of a has a partner in b.
bool same_sides(const SplitSample& a, const SplitSample& b, double max_angle) {
  if (a.sides.size() != b.sides.size()) return false;
  for (const auto& x : a.sides)
    if (match_side(b.sides, x.arrival, max_angle) < 0) return false;
  return true;
}

}  // namespace

BalanceReport verify_balanced(const SplitLocusModel& model, const BalanceOptions& opt) {
  const Manifold& m = model.manifold();
  BalanceReport rep;
  rep.quotient_error = model.rays->has_value() ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  const int n = static_cast<int>(model.samples.size());
  std::vector<double> defect(n, 0.0), qerr(n, 0.0);
  std::vector<int> approaches(n, 0);
  std::vector<bool> inconclusive(n, false);
  parallel_for(n, 0, [&](size_t ii) {
    const int i = static_cast<int>(ii);
    const SplitSample& s = model.samples[i];
    if (s.sides.empty() || s.continuum) return;
    const auto nb = nearest(model, i, opt.neighbors, 4 * model.spacing);
    if (nb.size() < 2) {
      inconclusive[i] = true;
      return;
    }
    // The limit direction along the locus comes from a fit to the samples of the same sheet pair.
    std::vector<Vec> nbp;
    for (int j : nearest(model, i, 2 * opt.neighbors, 6 * model.spacing))
      if (same_sides(s, model.samples[j], opt.match_angle)) nbp.push_back(model.samples[j].p);
    const Vec tau = s.r_count() == 2 ? fitted_tangent(m, s.p, nbp, model.spacing) : Vec();
    std::vector<Vec> duals;
    for (const auto& a : s.sides) duals.push_back(dual_one_form(m, s.p, a.arrival));
    std::vector<Vec> used;
    const auto wide = nearest(model, i, 4 * opt.neighbors, 6 * model.spacing);
    for (int j : nb) {
      // Sequences converging to p keep their vectors near R_p; other nearby arms are not approaches.
      bool inside = true;
      for (const auto& x : model.samples[j].sides)
        if (match_side(s.sides, x.arrival, opt.match_angle) < 0) inside = false;
      if (!inside) continue;
      const Vec chord = m.displacement(model.samples[j].p, s.p);
      Vec v = chord.normalized();
      if (tau.size() == v.size() && same_sides(s, model.samples[j], opt.match_angle)) {
        v = tau.dot(chord) >= 0 ? tau : Vec(-tau);
      } else if (s.r_count() >= 3) {
        // Into a vertex along one of its edges: extrapolate that edge's fit to p.
        std::vector<Vec> edge;
        for (int k : wide)
          if (same_sides(model.samples[j], model.samples[k], opt.match_angle)) edge.push_back(model.samples[k].p);
        edge.push_back(model.samples[j].p);
        const Vec te = fitted_tangent(m, s.p, edge, model.spacing, false);
        if (te.size() == v.size()) v = te.dot(chord) >= 0 ? te : Vec(-te);
      }
      double wmax = -kInf;
      for (const auto& w : duals) wmax = std::max(wmax, w.dot(v));
      for (const auto& x : model.samples[j].sides) {
        const int k = match_side(s.sides, x.arrival, opt.match_angle);
        defect[i] = std::max(defect[i], wmax - duals[k].dot(v));
        ++approaches[i];
      }
      bool seen = false;
      for (const auto& u : used)
        if (angle_between(u, v) < 0.05) seen = true;
      if (!seen) used.push_back(v);
    }
    if (!model.rays->has_value()) return;
    // d(p) - d(p_n) over |p - p_n| for p_n = p - delta v against w_inf(v).
    const double u0 = model.rays->value(s.p);
    for (const auto& v : used) {
      // No wrapping: with nonzero offsets the value is only defined on the cover.
      const Vec pd = s.p - opt.quotient_step * v;
      const auto mins = model.rays->minimal(pd, 0.0);
      if (mins.empty()) continue;
      const int k = match_side(s.sides, mins.front().arrival, opt.match_angle);
      if (k < 0) continue;
      const double q = (u0 - model.rays->value(pd)) / opt.quotient_step;
      qerr[i] = std::max(qerr[i], std::abs(q - duals[k].dot(v)));
    }
  });
  for (int i = 0; i < n; ++i) {
    if (inconclusive[i]) ++rep.inconclusive;
    rep.approaches += approaches[i];
    if (defect[i] > rep.worst_defect || rep.worst_point.size() == 0) {
      if (defect[i] >= rep.worst_defect) {
        rep.worst_defect = defect[i];
        rep.worst_point = model.samples[i].p;
      }
    }
    if (std::isfinite(rep.quotient_error)) rep.quotient_error = std::max(rep.quotient_error, qerr[i]);
  }
  rep.ok = rep.approaches > 0 && rep.worst_defect <= opt.tol &&
           (!std::isfinite(rep.quotient_error) || rep.quotient_error <= opt.quotient_tol);
  return rep;
}

std::map<std::string, int> classify_points(SplitLocusModel& model) {
  std::map<std::string, int> hist;
  for (auto c : {PointClass::CLEAVE, PointClass::EDGE, PointClass::DEGENERATE_CLEAVE, PointClass::CROSSING,
                 PointClass::REMAINDER})
    hist[to_string(c)] = 0;
  const Manifold& m = model.manifold();
  for (auto& s : model.samples) {
    const int r = s.r_count();
    int conj = 0;
    for (bool c : s.conjugate) conj += c ? 1 : 0;
    if (s.continuum) {
      s.cls = PointClass::REMAINDER;
    } else if (r == 2 && conj == 0) {
      s.cls = PointClass::CLEAVE;
    } else if (r == 1 && conj == 1) {
      s.cls = PointClass::EDGE;
    } else if (r == 2) {
      s.cls = PointClass::DEGENERATE_CLEAVE;
    } else if (r >= 3) {
      std::vector<Vec> w;
      for (const auto& a : s.sides) w.push_back(dual_one_form(m, s.p, a.arrival));
      Eigen::MatrixXd D(w.front().size(), r - 1);
      for (int k = 1; k < r; ++k) D.col(k - 1) = w[k] - w[0];
      Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
      lu.setThreshold(1e-6);
      s.cls = lu.rank() >= 2 ? PointClass::CROSSING : PointClass::REMAINDER;
    } else {
      s.cls = PointClass::REMAINDER;
    }
    ++hist[to_string(s.cls)];
  }
  return hist;
}

void chain_components(SplitLocusModel& model, double gate_degrees) {
  const Manifold& m = model.manifold();
  model.components.clear();
  std::vector<int> cleave;
  for (int i = 0; i < static_cast<int>(model.samples.size()); ++i)
    if (model.samples[i].cls == PointClass::CLEAVE) cleave.push_back(i);
  const double link = 3 * model.spacing;
  const double gate = gate_degrees * kPi / 180.0;
  std::vector<int> vertices;
  for (int i = 0; i < static_cast<int>(model.samples.size()); ++i)
    if (model.samples[i].r_count() >= 3 && !model.samples[i].continuum) vertices.push_back(i);
  const int n = static_cast<int>(cleave.size());
  std::vector<std::vector<int>> nbr(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && m.displacement(model.samples[cleave[a]].p, model.samples[cleave[b]].p).norm() <= link &&
          same_sides(model.samples[cleave[a]], model.samples[cleave[b]], 0.2))
        nbr[a].push_back(b);
  std::vector<Vec> tangent(n);
  for (int a = 0; a < n; ++a) {
    std::vector<Vec> pts;
    for (int b : nbr[a]) pts.push_back(model.samples[cleave[b]].p);
    tangent[a] = fitted_tangent(m, model.samples[cleave[a]].p, pts, model.spacing);
  }
  std::vector<bool> used(n, false);
  auto extend = [&](int start, Vec dir, std::vector<int>& out) {
    int cur = start;
    while (true) {
      int best = -1;
      double bp = kInf;
      for (int b : nbr[cur]) {
        if (used[b]) continue;
        const Vec d = m.displacement(model.samples[cleave[cur]].p, model.samples[cleave[b]].p);
        const double proj = d.dot(dir);
        if (proj <= 0 || angle_between(d, dir) > gate) continue;
        if (proj < bp) {
          bp = proj;
          best = b;
        }
      }
      if (best < 0) return;
      used[best] = true;
      out.push_back(best);
      const Vec d = m.displacement(model.samples[cleave[cur]].p, model.samples[cleave[best]].p).normalized();
      dir = tangent[best].size() == d.size() ? (tangent[best].dot(d) >= 0 ? tangent[best] : Vec(-tangent[best])) : d;
      cur = best;
    }
  };
  for (int s = 0; s < n; ++s) {
    if (used[s]) continue;
    used[s] = true;
    Vec dir = tangent[s];
    if (dir.size() != m.coord_dim() && !nbr[s].empty()) {
      // Too few samples for a fit, as on short edges between close vertices.
      double best = kInf;
      for (int b : nbr[s]) {
        const Vec d = m.displacement(model.samples[cleave[s]].p, model.samples[cleave[b]].p);
        if (d.norm() < best) {
          best = d.norm();
          dir = d.normalized();
        }
      }
    }
    std::vector<int> fwd, bwd;
    if (dir.size() == m.coord_dim()) {
      extend(s, dir, fwd);
      extend(s, -dir, bwd);
    }
    SplitComponent c;
    for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) c.samples.push_back(cleave[*it]);
    c.samples.push_back(cleave[s]);
    for (int f : fwd) c.samples.push_back(cleave[f]);
    // An open chain ends at the vertex its sheets run into.
    auto vertex_near = [&](int end) {
      int best = -1;
      double bd = link;
      for (int v : vertices) {
        bool has = true;
        for (const auto& x : model.samples[end].sides)
          if (match_side(model.samples[v].sides, x.arrival, 0.2) < 0) has = false;
        const double d = m.displacement(model.samples[end].p, model.samples[v].p).norm();
        if (has && d <= bd) {
          bd = d;
          best = v;
        }
      }
      return best;
    };
    const int head = vertex_near(c.samples.front()), tail = vertex_near(c.samples.back());
    if (head >= 0) c.samples.insert(c.samples.begin(), head);
    if (tail >= 0 && (tail != head || c.samples.size() > 2)) c.samples.push_back(tail);
    if (head < 0 && tail < 0 && c.samples.size() >= 4) {
      const double gap = m.displacement(model.samples[c.samples.back()].p, model.samples[c.samples.front()].p).norm();
      c.closed = gap <= link;
    }
    model.components.push_back(std::move(c));
  }
}

std::vector<double> h_jump(const SplitLocusModel& model, const SplitComponent& c) {
  const Manifold& m = model.manifold();
  const int n = static_cast<int>(c.samples.size());
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  if (n < 2) return out;
  for (int i = 0; i < n; ++i) {
    const int a = i > 0 ? i - 1 : (c.closed ? n - 1 : 0);
    const int b = i + 1 < n ? i + 1 : (c.closed ? 0 : n - 1);
    const Vec tau = m.displacement(model.samples[c.samples[a]].p, model.samples[c.samples[b]].p);
    const Vec nu = vec2(-tau[1], tau[0]);
    const auto& s = model.samples[c.samples[i]];
    if (s.r_count() != 2) continue;  // chain ends at vertices
    double hp = std::numeric_limits<double>::quiet_NaN(), hm = hp;
    for (const auto& side : s.sides) {
      const double d = side.arrival.dot(nu);
      if (d < 0) hp = side.h;  // moving towards -nu, so it comes from the +nu side
      else if (d > 0) hm = side.h;
    }
    out[i] = hp - hm;
  }
  return out;
}

std::vector<JumpStats> h_jump_stats(const SplitLocusModel& model) {
  std::vector<JumpStats> out;
  for (const auto& c : model.components) {
    JumpStats st;
    double s = 0, s2 = 0;
    for (double j : h_jump(model, c)) {
      if (!std::isfinite(j)) continue;
      s += j;
      s2 += j * j;
      ++st.n;
    }
    if (st.n > 0) {
      st.mean = s / st.n;
      st.stddev = std::sqrt(std::max(0.0, s2 / st.n - st.mean * st.mean));
    }
    out.push_back(st);
  }
  return out;
}

namespace {

template <class F>
double integrate_chains(const SplitLocusModel& model, F&& seg) {
  if (model.manifold().coord_dim() != 2) throw UnsupportedError("currents are evaluated on surfaces");
  const Manifold& m = model.manifold();
  double total = 0.0;
  for (const auto& c : model.components) {
    const int n = static_cast<int>(c.samples.size());
    if (n < 2) continue;
    const auto jump = h_jump(model, c);
    bool any = false;
    const int segs = c.closed ? n : n - 1;
    for (int i = 0; i < segs; ++i) {
      const int j = (i + 1) % n;
      double h;
      if (std::isfinite(jump[i]) && std::isfinite(jump[j])) h = 0.5 * (jump[i] + jump[j]);
      else if (std::isfinite(jump[i])) h = jump[i];
      else if (std::isfinite(jump[j])) h = jump[j];
      else continue;
      any = true;
      const Vec& a = model.samples[c.samples[i]].p;
      const Vec d = m.displacement(a, model.samples[c.samples[j]].p);
      total += h * seg(a, d);
    }
    if (!any) throw DomainError("cleave component could not be oriented");
  }
  return total;
}

}  // namespace

double current_T_eval(const SplitLocusModel& model, const std::function<Vec(const Vec&)>& phi) {
  return integrate_chains(model, [&](const Vec& a, const Vec& d) { return phi(a + 0.5 * d).dot(d); });
}

double boundary_residual(const SplitLocusModel& model, const std::function<double(const Vec&)>& sigma) {
  return integrate_chains(model, [&](const Vec& a, const Vec& d) { return sigma(a + d) - sigma(a); });
}

double hyperbola_residual(const SplitLocusModel& model) {
  const auto* T = dynamic_cast<const TorusTranslates*>(model.rays.get());
  if (!T) throw DomainError("hyperbola residual needs a torus family model");
  double worst = 0.0;
  for (const auto& s : model.samples) {
    if (s.cls != PointClass::CLEAVE) continue;
    const Vec k1 = T->translate(s.sides[0].sheet), k2 = T->translate(s.sides[1].sheet);
    // Both rays end at the same point of the covering plane.
    const Vec q = s.sides[0].start + s.sides[0].t * s.sides[0].arrival;
    const double r = (q - k1).norm() - (q - k2).norm() - T->b().dot(k2 - k1);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double cloud_hausdorff(const Manifold& m, const std::vector<Vec>& a, const std::vector<Vec>& b, double cap) {
  if (a.empty() || b.empty()) return cap;
  auto directed = [&](const std::vector<Vec>& x, const std::vector<Vec>& y) {
    const PointCloud c = make_cloud(m, y, cap);
    double worst = 0.0;
    for (const auto& p : x) worst = std::max(worst, std::min(cap, c.distance(m.wrap(p))));
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

nlohmann::json model_to_json(const SplitLocusModel& model) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : model.samples) {
    nlohmann::json rp = nlohmann::json::array(), hs = nlohmann::json::array(), cj = nlohmann::json::array();
    for (size_t k = 0; k < s.sides.size(); ++k) {
      rp.push_back(vec_to_json(s.sides[k].arrival));
      hs.push_back(s.sides[k].h);
      cj.push_back(static_cast<bool>(s.conjugate[k]));
    }
    samples.push_back({{"p", vec_to_json(s.p)}, {"class", to_string(s.cls)}, {"R_p", rp}, {"h_sides", hs},
                       {"conjugate", cj}});
  }
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : model.components) comps.push_back({{"samples", c.samples}, {"closed", c.closed}});
  return {{"family", model.family},
          {"parameter", model.parameter.size() ? vec_to_json(model.parameter) : nlohmann::json::array()},
          {"spacing", model.spacing},
          {"samples", samples},
          {"components", comps}};
}

std::string model_svg(const SplitLocusModel& model) {
  const Manifold& m = model.manifold();
  if (m.coord_dim() != 2) throw UnsupportedError("SVG output is for planar charts");
  const GridSpec g = m.grid_spec();
  Vec lo = m.grid_point(g.u0, g.v0), hi = lo;
  for (int i = 0; i <= 8; ++i)
    for (int j = 0; j <= 8; ++j) {
      const Vec p = m.grid_point(g.u0 + (g.u1 - g.u0) * i / 8, g.v0 + (g.v1 - g.v0) * j / 8);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  SvgCanvas svg(lo[0], lo[1], hi[0], hi[1]);
  for (const auto& b : m.boundary()) {
    std::vector<Vec> pts;
    for (int i = 0; i <= 256; ++i) pts.push_back(b.position(b.s_min + (b.s_max - b.s_min) * i / 256));
    svg.polyline(pts, "gray", 1.0, b.periodic);
  }
  for (const auto& s : model.samples) {
    const char* color = "gray";
    switch (s.cls) {
      case PointClass::CLEAVE: color = "steelblue"; break;
      case PointClass::EDGE: color = "red"; break;
      case PointClass::DEGENERATE_CLEAVE: color = "orange"; break;
      case PointClass::CROSSING: color = "black"; break;
      case PointClass::REMAINDER: color = "gray"; break;
    }
    svg.circle(s.p, s.cls == PointClass::CROSSING ? 3.0 : 1.0, color);
  }
  return svg.str();
}

}  // namespace cutlocus
