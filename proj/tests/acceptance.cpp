// Acceptance run: one PASS/FAIL line per criterion.
#include "cutlocus/canonical_forms.hpp"
#include "cutlocus/cdc_tracer.hpp"
#include "cutlocus/conjugate_analysis.hpp"
#include "cutlocus/hjbvp_solver.hpp"
#include "cutlocus/manifolds.hpp"
#include "cutlocus/split_locus.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace cutlocus;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double spacing(const GridSpec& g, int n) {
  return g.periodic_u ? (g.u1 - g.u0) / n : (g.u1 - g.u0) / (n - 1);
}

std::vector<Vec> circle(Vec c, double r, int n) {
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i) {
    const double th = 2 * kPi * i / n;
    pts.push_back(vec2(c[0] + r * std::cos(th), c[1] + r * std::sin(th)));
  }
  return pts;
}

// t_cut of the unit flat torus from the lattice: the nearest bisector of 0 and k.
double lattice_cut(double th) {
  const Vec u = vec2(std::cos(th), std::sin(th));
  double best = kInf;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const double ku = i * u[0] + j * u[1];
      if ((i || j) && ku > 1e-12) best = std::min(best, (i * i + j * j) / (2 * ku));
    }
  return best;
}

double max_abs(const std::vector<Vec>& pts, const std::function<double(const Vec&)>& f) {
  double m = 0.0;
  for (const auto& p : pts) m = std::max(m, std::abs(f(p)));
  return m;
}

std::shared_ptr<FlatDomain> annulus() { return FlatDomain::annulus(vec2(0, 0), 1.0, 2.0); }

const std::vector<double> kOffsets = {-0.6, -0.3, 0.0, 0.3, 0.6};

std::vector<SplitLocusModel>& annulus_models() {
  static std::vector<SplitLocusModel> models;
  if (models.empty())
    for (double a : kOffsets) {
      ConstantsOptions o;
      o.grid = 256;
      models.push_back(build_split_locus_from_constants(annulus(), BoundaryData::zero(2), {a, 0.0}, o));
      classify_points(models.back());
    }
  return models;
}

std::vector<Vec> torus_grid() {
  std::vector<Vec> bs;
  const double v[5] = {-0.14, -0.07, 0.0, 0.07, 0.14};
  for (double x : v)
    for (double y : v) bs.push_back(vec2(x, y));
  return bs;
}

std::vector<SplitLocusModel>& torus_models(int grid) {
  static std::map<int, std::vector<SplitLocusModel>> cache;
  auto& models = cache[grid];
  if (models.empty())
    for (const Vec& b : torus_grid()) models.push_back(build_torus_family(b, grid));
  return models;
}

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto pb = HJProblem::boundary(annulus(), BoundaryData::zero(2));
  const int n = 256;
  const auto sol = lax_oleinik_solve(*pb, n, n);
  const auto S = singular_set_extract(*pb, sol);
  const double secs = seconds_since(t0);
  const double h = spacing(sol.grid, n);
  const double d = cloud_hausdorff(*pb->manifold_ptr(), S.positions(), circle(vec2(0, 0), 1.5, 4096), 1.0);
  v.check(!S.points.empty() && d <= 2 * h, "Hausdorff " + fmt("%.3e", d) + " vs 2h " + fmt("%.3e", 2 * h));
  v.check(secs < 30.0, "runtime " + fmt("%.1f", secs) + " s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  auto& models = annulus_models();
  for (size_t i = 0; i < models.size(); ++i) {
    const double a = kOffsets[i];
    const auto& m = models[i];
    std::vector<Vec> pts = m.positions();
    const double dev = max_abs(pts, [&](const Vec& p) { return p.norm() - (1.5 - a / 2); });
    const SplitReport sr = verify_splits(m);
    const BalanceReport br = verify_balanced(m);
    v.check(!pts.empty() && dev <= 1e-3 && sr.ok() && br.ok && br.worst_defect <= 1e-3,
            "a=" + fmt("%g", a) + " dev " + fmt("%.1e", dev) + " splits " + (sr.ok() ? "ok" : "no") + " defect " +
                fmt("%.1e", br.worst_defect));
  }
  return v;
}

Verdict criterion3() {
  Verdict v;
  auto torus = std::make_shared<FlatTorus>(vec2(1, 1));
  auto pb = HJProblem::point_source(torus, vec2(0, 0));
  const int n = 256;
  const auto sol = lax_oleinik_solve(*pb, n, n);
  const auto S = singular_set_extract(*pb, sol);
  const double h = spacing(sol.grid, n);
  std::vector<Vec> cross;
  for (int i = 0; i < 1024; ++i) {
    cross.push_back(vec2(0.5, (i + 0.5) / 1024));
    cross.push_back(vec2((i + 0.5) / 1024, 0.5));
  }
  const double d = cloud_hausdorff(*torus, S.positions(), cross, 1.0);
  v.check(!S.points.empty() && d <= 2 * h, "cross Hausdorff " + fmt("%.3e", d) + " vs 2h " + fmt("%.3e", 2 * h));

  SplitLocusModel model = build_torus_family(vec2(0, 0), n);
  classify_points(model);
  int crossings = 0;
  double off = kInf;
  for (const auto& s : model.samples)
    if (s.cls == PointClass::CROSSING) {
      ++crossings;
      off = torus->displacement(s.p, vec2(0.5, 0.5)).norm();
    }
  v.check(crossings == 1 && off <= 2 * model.spacing,
          std::to_string(crossings) + " crossing at " + fmt("%.2e", off) + " from (1/2,1/2)");

  double worst = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double th = 2 * kPi * (i + 0.25) / 64;
    const CutRecord r = cut_time(*pb, -1, Vec::Constant(1, th));
    worst = std::max(worst, r.t_cut.is_inf() ? kInf : std::abs(r.t_cut.value - lattice_cut(th)));
  }
  v.check(worst <= 1e-6, "t_cut vs lattice " + fmt("%.1e", worst));
  return v;
}

Verdict criterion4() {
  Verdict v;
  auto& models = torus_models(512);
  double worst_res = 0.0, worst_defect = 0.0, closest = kInf;
  bool balanced = true;
  for (auto& m : models) {
    classify_points(m);
    worst_res = std::max(worst_res, hyperbola_residual(m));
    const BalanceReport br = verify_balanced(m);
    balanced = balanced && br.ok;
    worst_defect = std::max(worst_defect, br.worst_defect);
  }
  const Manifold& torus = models.front().manifold();
  for (size_t i = 0; i < models.size(); ++i)
    for (size_t j = i + 1; j < models.size(); ++j)
      closest = std::min(closest, cloud_hausdorff(torus, models[i].positions(), models[j].positions(), 1.0));
  const double h = models.front().spacing;
  v.check(balanced, "25 loci balanced, worst defect " + fmt("%.1e", worst_defect));
  v.check(closest > 2 * h, "closest pair Hausdorff " + fmt("%.3e", closest) + " vs 2h " + fmt("%.3e", 2 * h));
  v.check(worst_res < 1e-5, "hyperbola residual " + fmt("%.1e", worst_res));
  return v;
}

Verdict criterion5() {
  Verdict v;
  auto sphere = QuadricSurface::sphere();
  auto pb = HJProblem::point_source(sphere, vec3(0, 0, 1));
  auto fam = pb->family(-1);
  double worst = 0.0, cut_gap = 0.0;
  for (int i = 0; i < 256; ++i) {
    const Vec z = Vec::Constant(1, 2 * kPi * i / 256);
    const ExtendedTime l1 = lambda_k(*fam, z, 1, 4.0);
    worst = std::max(worst, l1.is_inf() ? kInf : std::abs(l1.value - kPi));
    if (i % 8 == 0) {
      const CutRecord r = cut_time(*pb, -1, z);
      cut_gap = std::max(cut_gap, r.t_cut.is_inf() || l1.is_inf() ? kInf : std::abs(r.t_cut.value - l1.value));
    }
  }
  v.check(worst <= 1e-6, "sphere |lambda1 - pi| " + fmt("%.1e", worst));
  v.check(cut_gap <= 1e-6, "sphere |t_cut - lambda1| " + fmt("%.1e", cut_gap));

  auto ell = QuadricSurface::ellipsoid(1.0, 1.0, 1.5);
  auto ep = HJProblem::point_source(ell, vec3(1, 0, 0));
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  double slack = kInf;
  int rays = 0;
  for (int i = 0; i < 500; ++i) {
    const CutRecord r = cut_time(*ep, -1, Vec::Constant(1, angle(rng)));
    if (r.lambda1.is_inf()) continue;
    ++rays;
    slack = std::min(slack, r.lambda1.value - r.t_cut.value);
  }
  v.check(rays == 500 && slack >= -1e-8, std::to_string(rays) + " ellipsoid rays, min lambda1 - t_cut " +
                                             fmt("%.2e", slack));
  return v;
}

double rho_lipschitz(const HJProblem& pb, int component, const PointCloud& S, int n) {
  LambdaProfile prof;
  prof.periodic = true;
  prof.period = pb.family(component)->period();
  prof.shape[0] = n;
  for (int i = 0; i < n; ++i) {
    const Vec z = Vec::Constant(1, prof.period * i / n);
    prof.z.push_back(z);
    prof.values.push_back(rho_S(pb, component, z, S));
  }
  return lipschitz_estimate(prof);
}

Verdict criterion6() {
  Verdict v;
  auto ell = QuadricSurface::ellipsoid(1.0, 1.0, 1.5);
  auto fam = std::make_shared<PointRayFamily>(ell, vec3(1, 0, 0));
  double lip[2];
  for (int k = 0; k < 2; ++k) {
    std::vector<Vec> zs;
    const int n = 64 << k;
    for (int i = 0; i < n; ++i) zs.push_back(Vec::Constant(1, 2 * kPi * i / n));
    lip[k] = lipschitz_estimate(lambda_profile(*fam, zs, 1, 8.0));
  }
  const double r1 = lip[1] / lip[0];
  v.check(r1 >= 0.5 && r1 <= 2.0, "lambda1 " + fmt("%.4g", lip[0]) + " -> " + fmt("%.4g", lip[1]));

  auto torus = std::make_shared<FlatTorus>(vec2(1, 1));
  auto tp = HJProblem::point_source(torus, vec2(0, 0));
  for (int k = 0; k < 2; ++k) {
    const SplitLocusModel m = build_torus_family(vec2(0, 0), 128 << k);
    lip[k] = rho_lipschitz(*tp, -1, PointCloud(m.positions(), m.spacing), 64 << k);
  }
  const double r2 = lip[1] / lip[0];
  v.check(r2 >= 0.5 && r2 <= 2.0, "rho_S torus " + fmt("%.4g", lip[0]) + " -> " + fmt("%.4g", lip[1]));

  auto ap = HJProblem::boundary(annulus(), BoundaryData::constants({0.3, 0.0}));
  for (int k = 0; k < 2; ++k) {
    ConstantsOptions o;
    o.grid = 128 << k;
    const SplitLocusModel m = build_split_locus_from_constants(annulus(), BoundaryData::zero(2), {0.3, 0.0}, o);
    lip[k] = rho_lipschitz(*ap, 0, PointCloud(m.positions(), m.spacing), 64 << k);
  }
  // rho_S is constant for concentric data; a vanishing estimate at both resolutions is bounded too.
  const bool flat = std::max(lip[0], lip[1]) <= 1e-6;
  const double r3 = flat ? 1.0 : lip[1] / lip[0];
  v.check(r3 >= 0.5 && r3 <= 2.0,
          "rho_S annulus " + fmt("%.4g", lip[0]) + " -> " + fmt("%.4g", lip[1]) + (flat ? " (constant)" : ""));

  SplitLocusModel g = build_torus_family(vec2(0.1, 0.07), 512);
  auto counts = classify_points(g);
  const double total = static_cast<double>(g.samples.size());
  const double cleave = counts["CLEAVE"] / total, rem = counts["REMAINDER"] / total;
  v.check(cleave >= 0.98 && rem <= 0.005, "512^2 CLEAVE " + fmt("%.4f", cleave) + " REMAINDER " + fmt("%.4f", rem));
  return v;
}

Verdict criterion7() {
  Verdict v;
  auto disk = FlatDomain::disk(vec2(0, 0), 1.0);
  BoundaryData g = BoundaryData::zero(1);
  g.g[0] = [](double s) { return 0.1 * std::sin(s); };
  g.dg[0] = [](double s) { return 0.1 * std::cos(s); };
  auto pb = HJProblem::boundary(disk, g);
  const Reduction r = extend_and_reduce(*pb, 1024, 128);
  v.check(r.identity_error <= 5e-4, "sup |u - d(Lambda, .)| " + fmt("%.2e", r.identity_error));
  return v;
}

const std::function<double(const Vec&)> kForms[3] = {
    [](const Vec& p) { return std::sin(2 * kPi * p[0]); },
    [](const Vec& p) { return std::cos(2 * kPi * p[1]) * std::sin(2 * kPi * p[0]); },
    [](const Vec& p) { return std::cos(2 * kPi * (p[0] + 2 * p[1])); }};

const std::function<double(const Vec&)> kPlanarForms[3] = {
    [](const Vec& p) { return p[0] * p[1]; },
    [](const Vec& p) { return std::sin(p[0]) + p[1] * p[1]; },
    [](const Vec& p) { return std::exp(0.3 * p[0]) * std::cos(p[1]); }};

Verdict criterion8() {
  Verdict v;
  double worst_std = 0.0;
  auto jump_std = [&](const SplitLocusModel& m) {
    for (const auto& s : h_jump_stats(m))
      if (s.n > 3) worst_std = std::max(worst_std, s.stddev);
  };
  for (const auto& m : annulus_models()) jump_std(m);
  auto& coarse = torus_models(512);
  auto& fine = torus_models(1024);
  for (auto& m : coarse) {
    classify_points(m);
    jump_std(m);
  }
  for (auto& m : fine) classify_points(m);
  v.check(worst_std <= 1e-4, "worst jump std " + fmt("%.1e", worst_std));

  // |dT(sigma)| <= C h with C = 1, at spacing h and h/2.
  const double C = 1.0;
  double worst_ratio = 0.0;
  for (size_t i = 0; i < coarse.size(); ++i)
    for (const auto& f : kForms) {
      worst_ratio = std::max(worst_ratio, std::abs(boundary_residual(coarse[i], f)) / (C * coarse[i].spacing));
      worst_ratio = std::max(worst_ratio, std::abs(boundary_residual(fine[i], f)) / (C * fine[i].spacing));
    }
  std::vector<SplitLocusModel> half;
  for (double a : kOffsets) {
    ConstantsOptions o;
    o.grid = 128;
    half.push_back(build_split_locus_from_constants(annulus(), BoundaryData::zero(2), {a, 0.0}, o));
    classify_points(half.back());
  }
  auto& ann = annulus_models();
  for (size_t i = 0; i < ann.size(); ++i)
    for (const auto& f : kPlanarForms) {
      worst_ratio = std::max(worst_ratio, std::abs(boundary_residual(ann[i], f)) / (C * ann[i].spacing));
      worst_ratio = std::max(worst_ratio, std::abs(boundary_residual(half[i], f)) / (C * half[i].spacing));
    }
  v.check(worst_ratio <= 1.0, "max |dT(sigma)| / (C h) " + fmt("%.1e", worst_ratio));

  auto cut = build_cut_locus_model(HJProblem::boundary(annulus(), BoundaryData::zero(2)), 256);
  classify_points(cut);
  SplitLocusModel tcut = build_torus_family(vec2(0, 0), 256);
  classify_points(tcut);
  double worst_t = 0.0;
  for (const SplitLocusModel* m : {&cut, &tcut}) {
    const std::vector<Vec> pts = m->positions();
    const std::function<Vec(const Vec&)> phis[2] = {
        [](const Vec& p) { return vec2(std::cos(3 * p[0]), p[0] * p[1]); },
        [](const Vec& p) { return vec2(1.0, std::sin(2 * kPi * p[1])); }};
    for (const auto& phi : phis) {
      double norm = 0.0;
      for (const auto& p : pts) norm = std::max(norm, phi(p).norm());
      worst_t = std::max(worst_t, std::abs(current_T_eval(*m, phi)) / norm);
    }
  }
  v.check(worst_t <= 1e-6, "cut-locus |T(phi)|/|phi| " + fmt("%.1e", worst_t));
  return v;
}

// Roots of the D4- alignment cubic by bisection on the three intervals cut by +-1/sqrt(3).
bool d4_minus_oracle(double a, double b, const std::vector<double>& got, double& err) {
  auto p = [&](double x) { return -0.5 * (a - 1) * x * x * x + 0.5 * b * x * x - 0.5 * (a + 3) * x + 0.5 * b; };
  const double s = 1.0 / std::sqrt(3.0);
  const double ends[4] = {-100.0, -s, s, 100.0};
  if (got.size() != 3) return false;
  for (int k = 0; k < 3; ++k) {
    double lo = ends[k], hi = ends[k + 1];
    if (p(lo) * p(hi) > 0) return false;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((p(lo) <= 0) == (p(mid) <= 0) ? lo : hi) = mid;
    }
    err = std::max(err, std::abs(got[k] - 0.5 * (lo + hi)));
    if (!(got[k] > ends[k] && got[k] < ends[k + 1])) return false;
  }
  return true;
}

Verdict criterion9() {
  Verdict v;
  auto a3 = canonical_form_map(CanonicalForm::A3);
  const CDCurve c = trace_cdc(*a3, vec2(-0.5, 0.75));
  ModelOptions po;
  po.perturbation = 1e-3;
  TraceOptions to;
  to.distribution.snap_tol = 1e-2;
  const CDCurve cp = trace_cdc(*canonical_form_map(CanonicalForm::A3, po), vec2(-0.5, 0.75), to);
  const double ident = std::max(c.unbeatable_error(), cp.unbeatable_error());
  v.check(ident <= 1e-4, "unbeatable identity " + fmt("%.1e", ident));

  double worst = kInf;
  if (c.stop == CdcStop::a3_hit) {
    const Retort r = build_retort(*a3, c, c.end());
    const int n = static_cast<int>(c.samples.size());
    worst = r.complete ? 0.0 : kInf;
    for (size_t k = 0; k < r.samples.size(); ++k) {
      const double t = c.samples[n - 1 - k].x[0];
      worst = std::max(worst, (r.samples[k] - vec2(-2 * t, 3 * t * t)).norm());
    }
  }
  v.check(worst <= 1e-8, "retort vs (-2t, 3t^2) " + fmt("%.1e", worst));

  const bool terminal = c.stop == CdcStop::a3_hit && c.end().norm() < 1e-6 && a3_type(*a3, c.end()) == A3Type::I;
  ModelOptions o2;
  o2.radial = vec2(0, -1);
  auto a3b = canonical_form_map(CanonicalForm::A3, o2);
  const CDCurve c2 = trace_cdc(*a3b, vec2(0.05, 3 * 0.05 * 0.05));
  const bool passes = c2.stop != CdcStop::a3_hit && c2.end().norm() > 0.1 && a3_type(*a3b, vec2(0, 0)) == A3Type::II;
  v.check(terminal, "A3_I terminal");
  v.check(passes, "A3_II passed through (" + to_string(c2.stop) + ")");

  int admissible = 0, good = 0;
  double err = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double a = -0.95 + 0.1 * i, b = -0.95 + 0.1 * j;
      if (a * a + b * b >= 1.0) continue;
      ++admissible;
      const D4Roots r = d4_root_analysis(a, b, D4Kind::minus);
      if (r.placement_ok && d4_minus_oracle(a, b, r.roots, err)) ++good;
    }
  v.check(good == admissible && err <= 1e-9,
          "D4- roots " + std::to_string(good) + "/" + std::to_string(admissible) + " err " + fmt("%.1e", err));

  int leaving = 0;
  for (const auto& e : vertex_cdcs(*canonical_form_map(CanonicalForm::D4_minus)))
    if (e.leaving) ++leaving;
  v.check(leaving == 3, "D4- vertex emits " + std::to_string(leaving) + " CDCs");
  return v;
}

Verdict criterion10() {
  Verdict v;
  auto pb = HJProblem::boundary(annulus(), BoundaryData::zero(2));
  auto rays = std::make_shared<ProblemRays>(pb);
  const int n = 1024;
  const double h = 2 * kPi * 1.5 / n;
  SplitLocusModel concentric = build_split_locus_from_set(rays, circle(vec2(0, 0), 1.5, n), h);
  SplitLocusModel shifted = build_split_locus_from_set(rays, circle(vec2(0.1, 0), 1.5, n), h);
  classify_points(concentric);
  classify_points(shifted);
  const BalanceReport a = verify_balanced(concentric), b = verify_balanced(shifted);
  v.check(a.ok, "concentric defect " + fmt("%.1e", a.worst_defect));
  v.check(!b.ok && b.worst_defect >= 1e-3, "off-center defect " + fmt("%.2e", b.worst_defect));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::function<Verdict()> criteria[10] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                 criterion6, criterion7, criterion8, criterion9, criterion10};
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (int i = 0; i < 10; ++i) {
    if (only && only != i + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::printf("criterion %d: %s (%s) [%.1f s]\n", i + 1, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                seconds_since(t0));
  }
  return failed ? 1 : 0;
}
