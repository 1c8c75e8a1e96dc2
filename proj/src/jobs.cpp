#include "cutlocus/jobs.hpp"

#include "cutlocus/canonical_forms.hpp"
#include "cutlocus/cdc_tracer.hpp"
#include "cutlocus/conjugate_analysis.hpp"
#include "cutlocus/hjbvp_solver.hpp"
#include "cutlocus/io.hpp"
#include "cutlocus/manifolds.hpp"
#include "cutlocus/parallel.hpp"
#include "cutlocus/split_locus.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <set>

namespace cutlocus {

namespace {

using nlohmann::json;

// Reads command parameters and rejects keys outside the allowed set.
class Params {
 public:
  Params(const json& doc, const std::string& where, std::initializer_list<const char*> allowed) : doc_(doc), where_(where) {
    if (!doc.is_object()) throw ConfigError(where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = doc.begin(); it != doc.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }

  bool has(const char* key) const { return doc_.contains(key); }

  double num(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_number()) throw ConfigError(where_ + "." + key + " must be a number");
    return doc_[key].get<double>();
  }
  double positive(const char* key, double fallback) const {
    const double v = num(key, fallback);
    if (!(v > 0)) throw ConfigError(where_ + "." + key + " must be positive");
    return v;
  }
  int integer(const char* key, int fallback, int lo = 1) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_number_integer()) throw ConfigError(where_ + "." + key + " must be an integer");
    const int v = doc_[key].get<int>();
    if (v < lo) throw ConfigError(where_ + "." + key + " must be at least " + std::to_string(lo));
    return v;
  }
  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_boolean()) throw ConfigError(where_ + "." + key + " must be true or false");
    return doc_[key].get<bool>();
  }
  std::string str(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_string()) throw ConfigError(where_ + "." + key + " must be a string");
    return doc_[key].get<std::string>();
  }
  Vec vec(const char* key) const {
    if (!has(key)) throw ConfigError("missing " + where_ + "." + key);
    return vec_from_json(doc_[key]);
  }
  std::vector<double> list(const char* key) const {
    if (!has(key)) throw ConfigError("missing " + where_ + "." + key);
    const json& a = doc_[key];
    if (!a.is_array()) throw ConfigError(where_ + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& x : a) {
      if (!x.is_number()) throw ConfigError(where_ + "." + key + " must contain numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  const json& raw(const char* key) const { return doc_[key]; }

 private:
  const json& doc_;
  std::string where_;
};

struct Context {
  const JobSpec& job;
  RunSettings settings;
  int threads = 1;
  JobOutcome outcome;

  void write(const std::string& name, const std::string& content) {
    write_text_file((std::filesystem::path(job.out_dir) / name).string(), content);
    outcome.artifacts.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  double tol(double fallback) const { return settings.tol > 0 ? settings.tol : fallback; }
};

std::shared_ptr<Manifold> need_manifold(const JobSpec& job) {
  if (job.manifold.is_null()) throw ConfigError("command '" + job.command + "' needs a manifold");
  return manifold_from_json(job.manifold);
}

BoundaryData job_data(const JobSpec& job, const Manifold& m) {
  const int nc = static_cast<int>(m.boundary().size());
  if (job.data.is_null()) return BoundaryData::zero(nc);
  return boundary_data_from_json(job.data, nc);
}

SolveOptions solve_options(const Params& p, int threads) {
  SolveOptions o;
  o.boundary_samples = p.integer("boundary_samples", o.boundary_samples, 8);
  o.epsilon_min = p.positive("epsilon_min", o.epsilon_min);
  o.delta_sep = p.positive("delta_sep", o.delta_sep);
  o.threads = threads;
  return o;
}

std::shared_ptr<HJProblem> make_problem(const JobSpec& job, const Params& p, std::shared_ptr<Manifold> m,
                                        int threads) {
  SolveOptions o = solve_options(p, threads);
  if (p.has("source")) return HJProblem::point_source(m, m->project(p.vec("source")), o);
  BoundaryData g = job_data(job, *m);
  return HJProblem::boundary(m, std::move(g), o);
}

// Canvas covering the chart of a planar manifold, with its boundary drawn.
SvgCanvas planar_canvas(const Manifold& m) {
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
  return svg;
}

std::string row(const Vec& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) s += "," + format_number(v[i]);
  return s;
}

std::string header(const char* name, int n) {
  std::string s;
  for (int i = 1; i <= n; ++i) s += "," + std::string(name) + std::to_string(i);
  return s;
}

void cmd_geodesic(Context& ctx) {
  const Params p(ctx.job.params, "params", {"start", "velocity", "t_end", "samples", "tol"});
  auto m = need_manifold(ctx.job);
  PhaseState s0;
  s0.position = m->project(p.vec("start"));
  s0.velocity = p.vec("velocity");
  if (s0.velocity.size() != s0.position.size()) throw ConfigError("velocity and start differ in dimension");
  const double t_end = p.positive("t_end", 1.0);
  const int n = p.integer("samples", 200, 2);
  const GeodesicTrajectory tr = integrate_geodesic(*m, s0, t_end, ctx.tol(p.positive("tol", 1e-10)));
  const double t1 = tr.exited ? tr.exit_time : t_end;
  const int d = static_cast<int>(s0.position.size());
  std::string csv = "t" + header("x", d) + header("v", d) + "\n";
  json states = json::array();
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i) {
    const PhaseState st = tr.at(t1 * i / (n - 1));
    csv += format_number(st.time) + row(st.position) + row(st.velocity) + "\n";
    states.push_back({{"t", st.time}, {"x", vec_to_json(st.position)}, {"v", vec_to_json(st.velocity)}});
    pts.push_back(st.position);
  }
  json out = {{"t_end", t1}, {"exited", tr.exited}, {"states", states}};
  ctx.write_json("geodesic.json", out);
  ctx.write("geodesic.csv", csv);
  if (m->coord_dim() == 2) {
    SvgCanvas svg = planar_canvas(*m);
    svg.polyline(pts, "steelblue", 1.5);
    ctx.write("geodesic.svg", svg.str());
  }
  ctx.outcome.summary = {{"t_end", t1}, {"exited", tr.exited}, {"end", vec_to_json(pts.back())}};
}

void cmd_conjugate_locus(Context& ctx) {
  const Params p(ctx.job.params, "params", {"source", "component", "rays", "k", "t_max", "classify"});
  auto m = need_manifold(ctx.job);
  std::shared_ptr<const RayFamily> fam;
  std::vector<Vec> zs;
  const int n = p.integer("rays", 256, 2);
  if (p.has("source")) {
    fam = std::make_shared<PointRayFamily>(m, m->project(p.vec("source")));
  } else {
    const int c = p.integer("component", 0, 0);
    if (c >= static_cast<int>(m->boundary().size())) throw ConfigError("params.component out of range");
    const BoundaryData g = job_data(ctx.job, *m);
    const auto& comp = m->boundary()[c];
    fam = std::make_shared<BoundaryRayFamily>(m, comp, [g, c](double s) { return g.value(c, s); },
                                              [g, c](double s) { return g.derivative(c, s); });
  }
  const double z0 = fam->z_min(), len = fam->period();
  for (int i = 0; i < n; ++i) {
    Vec z(1);
    z[0] = fam->periodic() ? z0 + len * i / n : z0 + len * i / (n - 1);
    zs.push_back(z);
  }
  const int k = p.integer("k", 1);
  const double t_max = p.positive("t_max", default_horizon(*m));
  DetectOptions det;
  det.root_tol = ctx.tol(det.root_tol);
  const LambdaProfile prof = lambda_profile(*fam, zs, k, t_max, det, ctx.threads);
  std::vector<Vec> pts(zs.size());
  std::vector<bool> have(zs.size(), false);
  parallel_for(zs.size(), ctx.threads, [&](size_t i) {
    if (prof.values[i].is_inf()) return;
    const double t = prof.values[i].value;
    const Ray r = trace_ray(*fam, zs[i], t * (1 + 1e-9) + 1e-9);
    pts[i] = r.position(t);
    have[i] = true;
  });
  json rays = json::array();
  const int d = m->coord_dim();
  std::string csv = "z,lambda" + header("x", d) + "\n";
  std::vector<Vec> drawn;
  for (size_t i = 0; i < zs.size(); ++i) {
    json r = {{"z", vec_to_json(zs[i])}, {"lambda", extended_to_json(prof.values[i])}};
    r["point"] = have[i] ? vec_to_json(pts[i]) : json(nullptr);
    rays.push_back(r);
    if (have[i]) {
      csv += format_number(zs[i][0]) + "," + format_number(prof.values[i].value) + row(pts[i]) + "\n";
      drawn.push_back(pts[i]);
    }
  }
  json out = {{"k", k}, {"t_max", t_max}, {"lipschitz", lipschitz_estimate(prof)}, {"rays", rays}};
  if (p.flag("classify", false)) {
    json cls = json::array();
    for (size_t i = 0; i < zs.size(); ++i) {
      if (!have[i]) continue;
      const auto ev = detect_conjugate_events(*fam, zs[i], prof.values[i].value * (1 + 1e-6), det);
      if (ev.empty()) continue;
      cls.push_back({{"z", vec_to_json(zs[i])}, {"class", to_string(classify_singularity(fam, ev.back()))}});
    }
    out["classes"] = cls;
  }
  ctx.write_json("conjugate_locus.json", out);
  ctx.write("conjugate_locus.csv", csv);
  if (d == 2) {
    SvgCanvas svg = planar_canvas(*m);
    for (const auto& q : drawn) svg.circle(q, 1.0, "crimson");
    ctx.write("conjugate_locus.svg", svg.str());
  }
  ctx.outcome.summary = {{"rays", n}, {"finite", drawn.size()}, {"lipschitz", out["lipschitz"]}};
}

void cmd_cut_locus(Context& ctx) {
  const Params p(ctx.job.params, "params",
                 {"source", "grid", "directions", "boundary_samples", "epsilon_min", "delta_sep", "t_cap"});
  auto m = need_manifold(ctx.job);
  auto pb = make_problem(ctx.job, p, m, ctx.threads);
  const int grid = p.integer("grid", 256, 2);
  const ViscositySolution sol = lax_oleinik_solve(*pb, grid, grid);
  const SingularSet S = singular_set_extract(*pb, sol);
  json out = singular_set_to_json(S);
  out["grid"] = grid;
  if (p.has("directions")) {
    CutOptions co;
    co.predicate_tol = ctx.tol(co.predicate_tol);
    co.t_cap = p.num("t_cap", 0.0);
    const int nd = p.integer("directions", 64);
    json cuts = json::array();
    for (int c = 0; c < pb->families(); ++c) {
      auto fam = pb->family(c);
      std::vector<Vec> zs;
      for (int i = 0; i < nd; ++i) {
        Vec z(1);
        z[0] = fam->z_min() + fam->period() * i / nd;
        zs.push_back(z);
      }
      const int comp = pb->is_point_source() ? -1 : c;
      for (const auto& r : cut_times(*pb, comp, zs, co, ctx.threads))
        cuts.push_back({{"component", r.component},
                        {"z", vec_to_json(r.z)},
                        {"t_cut", extended_to_json(r.t_cut)},
                        {"lambda1", extended_to_json(r.lambda1)},
                        {"reason", to_string(r.reason)}});
    }
    out["cut_times"] = cuts;
  }
  ctx.write_json("cut_locus.json", out);
  if (m->coord_dim() == 2) {
    SvgCanvas svg = planar_canvas(*m);
    for (const auto& q : S.points) svg.circle(q.p, 1.0, "crimson");
    ctx.write("cut_locus.svg", svg.str());
  }
  ctx.outcome.summary = {{"singular_points", S.points.size()}, {"smooth", sol.smooth}};
}

void cmd_solve_hjbvp(Context& ctx) {
  const Params p(ctx.job.params, "params",
                 {"source", "grid", "boundary_samples", "epsilon_min", "delta_sep", "reduce", "reduce_samples", "probe"});
  auto m = need_manifold(ctx.job);
  auto pb = make_problem(ctx.job, p, m, ctx.threads);
  if (!pb->is_point_source()) {
    const CompatibilityReport rep = check_compatibility(*m, pb->data());
    if (!rep.ok) throw CompatibilityError("boundary data violate |g(p) - g(q)| < d(p, q)", rep.k);
  }
  const int grid = p.integer("grid", 128, 2);
  const ViscositySolution sol = lax_oleinik_solve(*pb, grid, grid);
  double lo = kInf, hi = -kInf;
  int inside = 0, multiple = 0;
  for (const auto& s : sol.samples) {
    if (!s.inside || std::isnan(s.u)) continue;
    ++inside;
    if (s.multiple()) ++multiple;
    lo = std::min(lo, s.u);
    hi = std::max(hi, s.u);
  }
  json out = {{"grid", grid}, {"inside", inside}, {"multiple", multiple}, {"smooth", sol.smooth},
              {"u_min", inside ? lo : 0.0}, {"u_max", inside ? hi : 0.0}};
  if (p.flag("reduce", false)) {
    if (pb->is_point_source()) throw ConfigError("reduce needs boundary data");
    const Reduction red = extend_and_reduce(*pb, p.integer("reduce_samples", 1024, 8), p.integer("probe", 64, 2));
    json lam = json::array();
    for (size_t i = 0; i < red.lambda.size(); ++i)
      lam.push_back({{"component", red.component[i]}, {"s", red.s[i]}, {"p", vec_to_json(red.lambda[i])}});
    out["reduction"] = {{"offset", red.offset}, {"depth", red.depth}, {"identity_error", red.identity_error},
                        {"lambda", lam}};
  }
  ctx.write_json("solution.json", out);
  ctx.write("solution.csv", solution_csv(sol));
  if (m->coord_dim() == 2 && inside) {
    SvgCanvas svg = planar_canvas(*m);
    for (const auto& s : sol.samples) {
      if (!s.inside || std::isnan(s.u)) continue;
      const int c = static_cast<int>(std::lround(230 * (hi > lo ? (s.u - lo) / (hi - lo) : 0.0)));
      svg.circle(s.p, 1.0, s.multiple() ? "crimson" : "rgb(" + std::to_string(c) + "," + std::to_string(c) + ",255)");
    }
    ctx.write("solution.svg", svg.str());
  }
  ctx.outcome.summary = out;
  ctx.outcome.summary.erase("reduction");
  if (out.contains("reduction")) ctx.outcome.summary["identity_error"] = out["reduction"]["identity_error"];
}

SplitLocusModel build_model(Context& ctx, const Params& p) {
  const std::string family = p.str("family", "torus");
  if (family == "torus") {
    if (!ctx.job.manifold.is_null()) {
      auto m = manifold_from_json(ctx.job.manifold);
      auto t = std::dynamic_pointer_cast<FlatTorus>(m);
      if (!t || t->periods() != vec2(1, 1)) throw ConfigError("the torus family lives on the unit flat torus");
    }
    return build_torus_family(p.has("b") ? p.vec("b") : vec2(0, 0), p.integer("grid", 512, 8), ctx.threads);
  }
  auto m = need_manifold(ctx.job);
  if (family == "constants") {
    ConstantsOptions o;
    o.grid = p.integer("grid", 256, 8);
    o.solve = solve_options(p, ctx.threads);
    o.threads = ctx.threads;
    return build_split_locus_from_constants(m, job_data(ctx.job, *m), p.list("a"), o);
  }
  if (family == "circle") {
    const Vec c = p.has("center") ? p.vec("center") : vec2(0, 0);
    const double r = p.positive("radius", 1.0);
    const int n = p.integer("samples", 1024, 8);
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) {
      const double th = 2 * kPi * i / n;
      pts.push_back(vec2(c[0] + r * std::cos(th), c[1] + r * std::sin(th)));
    }
    auto pb = HJProblem::boundary(m, job_data(ctx.job, *m), solve_options(p, ctx.threads));
    return build_split_locus_from_set(std::make_shared<ProblemRays>(pb), pts, 2 * kPi * r / n, ctx.threads);
  }
  throw ConfigError("params.family must be torus, constants or circle");
}

json class_counts(SplitLocusModel& model) {
  json counts = json::object();
  for (const auto& [k, v] : classify_points(model)) counts[k] = v;
  return counts;
}

void cmd_split_family(Context& ctx) {
  const Params p(ctx.job.params, "params",
                 {"family", "b", "a", "grid", "center", "radius", "samples", "boundary_samples", "epsilon_min",
                  "delta_sep"});
  SplitLocusModel model = build_model(ctx, p);
  json counts = class_counts(model);
  chain_components(model);
  json out = model_to_json(model);
  out["classes"] = counts;
  json jumps = json::array();
  for (const auto& s : h_jump_stats(model)) jumps.push_back({{"mean", s.mean}, {"stddev", s.stddev}, {"n", s.n}});
  out["h_jump"] = jumps;
  if (model.family == "torus") out["hyperbola_residual"] = hyperbola_residual(model);
  ctx.write_json("split_locus.json", out);
  if (model.manifold().coord_dim() == 2) ctx.write("split_locus.svg", model_svg(model));
  ctx.outcome.summary = {{"samples", model.samples.size()}, {"components", model.components.size()},
                         {"classes", counts}};
}

void cmd_verify_balanced(Context& ctx) {
  const Params p(ctx.job.params, "params",
                 {"family", "b", "a", "grid", "center", "radius", "samples", "boundary_samples", "epsilon_min",
                  "delta_sep", "probes", "neighbors"});
  SplitLocusModel model = build_model(ctx, p);
  classify_points(model);
  const SplitReport sr = verify_splits(model, p.integer("probes", 48, 2), ctx.threads);
  BalanceOptions bo;
  bo.tol = ctx.tol(bo.tol);
  bo.neighbors = p.integer("neighbors", bo.neighbors, 2);
  const BalanceReport br = verify_balanced(model, bo);
  json fails = json::array();
  for (const auto& [q, n] : sr.failures) fails.push_back({{"p", vec_to_json(q)}, {"rays", n}});
  json out = {{"splits", {{"ok", sr.ok()}, {"probes", sr.probes}, {"checked", sr.checked}, {"failures", fails}}},
              {"balanced",
               {{"ok", br.ok},
                {"worst_defect", br.worst_defect},
                {"worst_point", br.worst_point.size() ? vec_to_json(br.worst_point) : json(nullptr)},
                {"approaches", br.approaches},
                {"inconclusive", br.inconclusive},
                {"quotient_error", std::isnan(br.quotient_error) ? json(nullptr) : json(br.quotient_error)},
                {"tol", bo.tol}}}};
  ctx.write_json("balance.json", out);
  if (model.manifold().coord_dim() == 2) ctx.write("balance.svg", model_svg(model));
  ctx.outcome.summary = {{"splits", sr.ok()}, {"balanced", br.ok}, {"worst_defect", br.worst_defect}};
}

void cmd_trace_cdc(Context& ctx) {
  const Params p(ctx.job.params, "params",
                 {"model", "model_options", "start", "step", "max_length", "cone_c", "cone_sign", "slack_threshold",
                  "snap_tol", "retort"});
  if (!ctx.job.manifold.is_null()) throw ConfigError("trace-cdc runs on canonical models; drop the manifold");
  ModelOptions mo;
  if (p.has("model_options")) {
    const Params q(p.raw("model_options"), "params.model_options",
                   {"dim", "a3_sign", "radial", "bend", "perturbation", "patch"});
    mo.dim = q.integer("dim", 0, 0);
    mo.a3_sign = q.integer("a3_sign", mo.a3_sign, -1);
    if (mo.a3_sign != 1 && mo.a3_sign != -1) throw ConfigError("a3_sign must be 1 or -1");
    if (q.has("radial")) mo.radial = q.vec("radial");
    mo.bend = q.num("bend", mo.bend);
    mo.perturbation = q.num("perturbation", 0.0);
    mo.patch = q.positive("patch", mo.patch);
  }
  auto map = canonical_form_map(canonical_form_from_string(p.str("model", "A3")), mo);
  TraceOptions to;
  to.step = p.positive("step", to.step);
  to.max_length = p.positive("max_length", to.max_length);
  to.cone_c = p.num("cone_c", 0.0);
  to.cone_sign = p.num("cone_sign", 1.0) < 0 ? -1 : 1;
  to.distribution.slack_threshold = p.positive("slack_threshold", to.distribution.slack_threshold);
  to.distribution.snap_tol = p.positive("snap_tol", to.distribution.snap_tol);
  const Vec start = p.vec("start");
  if (start.size() != map->dim()) throw ConfigError("params.start must have the model dimension");
  const CDCurve c = trace_cdc(*map, start, to);
  ctx.write("cdc.csv", cdc_csv(*map, c));
  json out = {{"stop", to_string(c.stop)}, {"samples", c.samples.size()}, {"radius_drop", c.radius_drop()},
              {"image_length", c.image_length}, {"unbeatable_error", c.unbeatable_error()},
              {"end", vec_to_json(c.end())}};
  std::vector<Vec> beta;
  if (c.stop == CdcStop::a3_hit) {
    out["a3_type"] = a3_type(*map, c.end()) == A3Type::I ? "A3_I" : "A3_II";
    if (out["a3_type"] == "A3_I") ctx.write_json("join.json", join_to_json(a3_join(*map, c)));
  }
  if (p.flag("retort", c.stop == CdcStop::a3_hit)) {
    RetortOptions ro;
    ro.newton_tol = ctx.tol(ro.newton_tol);
    const Retort r = c.stop == CdcStop::a3_hit ? build_retort(*map, c, c.end(), ro) : build_retort(*map, c, ro);
    ctx.write("retort.csv", retort_image_csv(*map, c, r));
    out["retort"] = {{"complete", r.complete}, {"hit_conjugate", r.hit_conjugate}, {"image_error", r.image_error},
                     {"gain", r.gain}, {"drop", r.drop}, {"tree_error", tree_formed_error(*map, c, r)}};
    beta = r.samples;
  }
  ctx.write_json("cdc.json", out);
  if (map->dim() == 2) {
    const double w = mo.patch;
    SvgCanvas svg(-w, -w, w, w);
    std::vector<Vec> alpha;
    for (const auto& s : c.samples) alpha.push_back(s.x);
    svg.polyline(alpha, "steelblue", 1.5);
    if (!beta.empty()) svg.polyline(beta, "crimson", 1.5);
    ctx.write("cdc.svg", svg.str());
  }
  ctx.outcome.summary = out;
}

void cmd_d4_roots(Context& ctx) {
  const Params p(ctx.job.params, "params", {"kind", "a", "b"});
  const D4Roots r = d4_root_analysis(p.num("a", 0.0), p.num("b", 0.0), d4_kind_from_string(p.str("kind", "minus")));
  const json j = d4_roots_to_json(r);
  ctx.write_json("d4_roots.json", j);
  ctx.outcome.summary = j;
}

}  // namespace

const std::vector<std::string>& job_commands() {
  static const std::vector<std::string> cmds = {"geodesic",      "conjugate-locus", "cut-locus", "solve-hjbvp",
                                                "split-family",  "verify-balanced", "trace-cdc", "d4-roots"};
  return cmds;
}

JobSpec parse_job(const nlohmann::json& doc) {
  const Params p(doc, "job", {"command", "manifold", "data", "params", "out"});
  JobSpec job;
  job.command = p.str("command", "");
  const auto& cmds = job_commands();
  if (std::find(cmds.begin(), cmds.end(), job.command) == cmds.end())
    throw ConfigError("unknown command '" + job.command + "'");
  if (p.has("manifold")) {
    job.manifold = doc["manifold"];
    if (!job.manifold.is_object()) throw ConfigError("job.manifold must be an object");
  }
  if (p.has("data")) job.data = doc["data"];
  if (p.has("params")) {
    job.params = doc["params"];
    if (!job.params.is_object()) throw ConfigError("job.params must be an object");
  }
  job.out_dir = p.str("out", "");
  return job;
}

JobSpec load_job(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("job file is not valid JSON: ") + e.what());
  }
  return parse_job(doc);
}

BoundaryData boundary_data_from_json(const nlohmann::json& doc, int components) {
  const Params p(doc, "data", {"kind", "a", "components"});
  const std::string kind = p.str("kind", "zero");
  if (kind == "zero") return BoundaryData::zero(components);
  if (kind == "constants") {
    const auto a = p.list("a");
    if (static_cast<int>(a.size()) != components)
      throw ConfigError("data.a needs one constant per boundary component (" + std::to_string(components) + ")");
    return BoundaryData::constants(a);
  }
  if (kind != "fourier") throw ConfigError("data.kind must be zero, constants or fourier");
  const auto& comps = p.raw("components");
  if (!comps.is_array() || static_cast<int>(comps.size()) != components)
    throw ConfigError("data.components needs one entry per boundary component");
  BoundaryData b = BoundaryData::zero(components);
  for (int c = 0; c < components; ++c) {
    const Params q(comps[c], "data.components[" + std::to_string(c) + "]", {"mean", "cos", "sin"});
    const double mean = q.num("mean", 0.0);
    const std::vector<double> cs = q.has("cos") ? q.list("cos") : std::vector<double>{};
    const std::vector<double> sn = q.has("sin") ? q.list("sin") : std::vector<double>{};
    b.g[c] = [mean, cs, sn](double s) {
      double v = mean;
      for (size_t k = 0; k < cs.size(); ++k) v += cs[k] * std::cos((k + 1) * s);
      for (size_t k = 0; k < sn.size(); ++k) v += sn[k] * std::sin((k + 1) * s);
      return v;
    };
    b.dg[c] = [cs, sn](double s) {
      double v = 0.0;
      for (size_t k = 0; k < cs.size(); ++k) v -= (k + 1) * cs[k] * std::sin((k + 1) * s);
      for (size_t k = 0; k < sn.size(); ++k) v += (k + 1) * sn[k] * std::cos((k + 1) * s);
      return v;
    };
  }
  return b;
}

JobOutcome run_job(const JobSpec& job, const RunSettings& settings) {
  if (settings.tol < 0) throw ConfigError("tolerance must be positive");
  Context ctx{job, settings, resolve_threads(settings.threads), {}};
  if (!job.out_dir.empty()) std::filesystem::create_directories(job.out_dir);
  const std::string& c = job.command;
  if (c == "geodesic") cmd_geodesic(ctx);
  else if (c == "conjugate-locus") cmd_conjugate_locus(ctx);
  else if (c == "cut-locus") cmd_cut_locus(ctx);
  else if (c == "solve-hjbvp") cmd_solve_hjbvp(ctx);
  else if (c == "split-family") cmd_split_family(ctx);
  else if (c == "verify-balanced") cmd_verify_balanced(ctx);
  else if (c == "trace-cdc") cmd_trace_cdc(ctx);
  else if (c == "d4-roots") cmd_d4_roots(ctx);
  else throw ConfigError("unknown command '" + c + "'");
  return ctx.outcome;
}

int run_job_guarded(const JobSpec& job, const RunSettings& settings, std::ostream& out, std::ostream& err) {
  auto diagnose = [&](const std::string& kind, const std::string& msg, const std::string& diag) {
    nlohmann::json d = {{"error", kind}, {"message", msg}, {"command", job.command}};
    try {
      d["diagnostic"] = nlohmann::json::parse(diag);
    } catch (const nlohmann::json::exception&) {
      d["diagnostic"] = diag;
    }
    try {
      if (!job.out_dir.empty()) std::filesystem::create_directories(job.out_dir);
      write_text_file((std::filesystem::path(job.out_dir) / "diagnostic.json").string(), d.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    err << d.dump() << "\n";
  };
  try {
    const JobOutcome o = run_job(job, settings);
    out << nlohmann::json{{"command", job.command}, {"artifacts", o.artifacts}, {"summary", o.summary}}.dump(2)
        << "\n";
    return 0;
  } catch (const NumericalError& e) {
    diagnose("numerical", e.what(), e.diagnostic);
    return 3;
  } catch (const CompatibilityError& e) {
    err << "configuration error: " << e.what() << " (K = " << format_number(e.constant, 6) << ")\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    diagnose("internal", e.what(), "{}");
    return 3;
  }
}

}  // namespace cutlocus
