#include "cutlocus/hjbvp_solver.hpp"

#include "cutlocus/manifolds.hpp"
#include "cutlocus/numerics.hpp"
#include "cutlocus/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cutlocus {

struct HJProblem::Engine {
  virtual ~Engine() = default;
  virtual std::vector<Minimizer> minimizers(const Vec& p) const = 0;
  virtual std::optional<Minimizer> follow(const Minimizer& m, const Vec& p) const = 0;
  virtual std::vector<Minimizer> local_minimizers(const Vec& p) const { return minimizers(p); }
  virtual bool shooting() const { return false; }
};

namespace {

double param_gap(double a, double b, bool periodic, double period) {
  return periodic ? std::abs(periodic_diff(a, b, period)) : std::abs(a - b);
}

double wrap_param(double s, const BoundaryComponent& b) {
  if (!b.periodic) return std::clamp(s, b.s_min, b.s_max);
  double w = std::fmod(s - b.s_min, b.period());
  if (w < 0) w += b.period();
  return b.s_min + w;
}

// Merges candidate minimizers into clusters separated by more than delta_sep.
std::vector<Minimizer> cluster_minimizers(std::vector<Minimizer> c, double delta_sep, bool periodic, double period) {
  std::sort(c.begin(), c.end(), [](const Minimizer& a, const Minimizer& b) { return a.value < b.value; });
  std::vector<Minimizer> out;
  for (const auto& m : c) {
    bool merged = false;
    for (auto& o : out) {
      if (o.component != m.component) continue;
      if (param_gap(o.z[0], m.z[0], periodic, period) < delta_sep) {
        o.continuum = o.continuum || m.continuum;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(m);
  }
  return out;
}

// u(p) = min_q d(p, q) + g(q) from dense boundary samples with local Brent refinement.
class SampledBoundaryEngine : public HJProblem::Engine {
 public:
  explicit SampledBoundaryEngine(const HJProblem& pb) : pb_(pb) {
    const auto& bd = pb.manifold().boundary();
    const int n = std::max(pb.options().boundary_samples, 8);
    for (const auto& b : bd) {
      Comp c;
      c.b = b;
      for (int i = 0; i < n; ++i) {
        const double s = b.periodic ? b.s_min + b.period() * i / n : b.s_min + (b.s_max - b.s_min) * i / (n - 1);
        c.s.push_back(s);
        c.q.push_back(b.position(s));
        c.g.push_back(pb.data().value(b.id, s));
      }
      c.ds = b.periodic ? b.period() / n : (b.s_max - b.s_min) / (n - 1);
      comps_.push_back(std::move(c));
    }
  }

  std::vector<Minimizer> minimizers(const Vec& p) const override {
    const Manifold& m = pb_.manifold();
    const double eps = pb_.options().epsilon_min;
    const double sep = pb_.options().delta_sep;
    std::vector<std::vector<double>> fs(comps_.size());
    double fmin_sample = kInf;
    for (size_t c = 0; c < comps_.size(); ++c) {
      const Comp& cc = comps_[c];
      fs[c].resize(cc.s.size());
      for (size_t i = 0; i < cc.s.size(); ++i) {
        fs[c][i] = m.distance(p, cc.q[i]) + cc.g[i];
        fmin_sample = std::min(fmin_sample, fs[c][i]);
      }
    }
    struct Cand {
      int c;
      double s, f;
    };
    std::vector<Cand> cands;
    const double window = std::max(0.05, 100 * eps);
    for (size_t c = 0; c < comps_.size(); ++c) {
      const Comp& cc = comps_[c];
      const auto& f = fs[c];
      const int n = static_cast<int>(f.size());
      int arg = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
      for (int i = 0; i < n; ++i) {
        const double fp = cc.b.periodic ? f[(i - 1 + n) % n] : (i > 0 ? f[i - 1] : kInf);
        const double fn = cc.b.periodic ? f[(i + 1) % n] : (i + 1 < n ? f[i + 1] : kInf);
        const bool local = (f[i] <= fp && f[i] < fn) || i == arg;
        if (!local || f[i] > fmin_sample + window) continue;
        double a = cc.s[i] - cc.ds, b = cc.s[i] + cc.ds;
        if (!cc.b.periodic) {
          a = std::max(a, cc.b.s_min);
          b = std::min(b, cc.b.s_max);
        }
        const auto r = local_minimum([&](double s) { return value_at(static_cast<int>(c), s, p); }, a, b);
        Cand cd{static_cast<int>(c), wrap_param(r.first, cc.b), r.second};
        if (f[i] < cd.f) cd = {static_cast<int>(c), cc.s[i], f[i]};
        cands.push_back(cd);
      }
    }
    double fmin = fmin_sample;
    for (const auto& c : cands) fmin = std::min(fmin, c.f);
    // Runs of samples inside the epsilon band; a long run is a continuum of minimizers.
    std::vector<Minimizer> out;
    for (size_t c = 0; c < comps_.size(); ++c) {
      const Comp& cc = comps_[c];
      const int n = static_cast<int>(cc.s.size());
      std::vector<int> run(n, -1);
      std::vector<int> run_len;
      for (int i = 0; i < n; ++i) {
        if (fs[c][i] > fmin + eps || run[i] >= 0) continue;
        const int id = static_cast<int>(run_len.size());
        int len = 0;
        for (int j = i; j < n && fs[c][j] <= fmin + eps; ++j, ++len) run[j] = id;
        if (cc.b.periodic && i == 0) {
          for (int j = n - 1; j > 0 && fs[c][j] <= fmin + eps && run[j] < 0; --j, ++len) run[j] = id;
        }
        run_len.push_back(len);
      }
      std::map<int, Minimizer> by_run;
      std::vector<Minimizer> singles;
      for (const auto& cd : cands) {
        if (cd.c != static_cast<int>(c) || cd.f > fmin + eps) continue;
        const int j = static_cast<int>(std::lround((cd.s - cc.b.s_min) / cc.ds));
        const int jj = cc.b.periodic ? ((j % n) + n) % n : std::clamp(j, 0, n - 1);
        Minimizer mm = make(static_cast<int>(c), cd.s, cd.f, p);
        if (run[jj] >= 0) {
          mm.continuum = run_len[run[jj]] * cc.ds > 20 * sep;
          auto it = by_run.find(run[jj]);
          if (it == by_run.end() || mm.value < it->second.value) by_run[run[jj]] = mm;
        } else {
          singles.push_back(mm);
        }
      }
      for (auto& kv : by_run) singles.push_back(kv.second);
      for (auto& mm : cluster_minimizers(singles, sep, cc.b.periodic, cc.b.period())) out.push_back(mm);
    }
    std::sort(out.begin(), out.end(), [](const Minimizer& a, const Minimizer& b) { return a.value < b.value; });
    return out;
  }

  std::vector<Minimizer> local_minimizers(const Vec& p) const override {
    const Manifold& m = pb_.manifold();
    std::vector<Minimizer> out;
    for (size_t c = 0; c < comps_.size(); ++c) {
      const Comp& cc = comps_[c];
      const int n = static_cast<int>(cc.s.size());
      std::vector<double> f(n);
      for (int i = 0; i < n; ++i) f[i] = m.distance(p, cc.q[i]) + cc.g[i];
      std::vector<Minimizer> cands;
      for (int i = 0; i < n; ++i) {
        const double fp = cc.b.periodic ? f[(i - 1 + n) % n] : (i > 0 ? f[i - 1] : kInf);
        const double fn = cc.b.periodic ? f[(i + 1) % n] : (i + 1 < n ? f[i + 1] : kInf);
        if (!(f[i] <= fp && f[i] < fn)) continue;
        double a = cc.s[i] - cc.ds, b = cc.s[i] + cc.ds;
        if (!cc.b.periodic) {
          a = std::max(a, cc.b.s_min);
          b = std::min(b, cc.b.s_max);
        }
        const auto r = local_minimum([&](double s) { return value_at(static_cast<int>(c), s, p); }, a, b);
        cands.push_back(r.second <= f[i] ? make(static_cast<int>(c), wrap_param(r.first, cc.b), r.second, p)
                                         : make(static_cast<int>(c), cc.s[i], f[i], p));
      }
      for (auto& mm : cluster_minimizers(cands, pb_.options().delta_sep, cc.b.periodic, cc.b.period()))
        out.push_back(mm);
    }
    std::sort(out.begin(), out.end(), [](const Minimizer& a, const Minimizer& b) { return a.value < b.value; });
    return out;
  }

  std::optional<Minimizer> follow(const Minimizer& m, const Vec& p) const override {
    if (m.component < 0 || m.component >= static_cast<int>(comps_.size())) return std::nullopt;
    const Comp& cc = comps_[m.component];
    const double w = 0.1;
    double a = m.z[0] - w, b = m.z[0] + w;
    if (!cc.b.periodic) {
      a = std::max(a, cc.b.s_min);
      b = std::min(b, cc.b.s_max);
    }
    const auto r = local_minimum([&](double s) { return value_at(m.component, s, p); }, a, b);
    return make(m.component, wrap_param(r.first, cc.b), r.second, p);
  }

 private:
  struct Comp {
    BoundaryComponent b;
    std::vector<double> s, g;
    std::vector<Vec> q;
    double ds = 0.0;
  };

  double value_at(int c, double s, const Vec& p) const {
    const BoundaryComponent& b = comps_[c].b;
    return pb_.manifold().distance(p, b.position(s)) + pb_.data().value(c, s);
  }

  Minimizer make(int c, double s, double f, const Vec& p) const {
    const BoundaryComponent& b = comps_[c].b;
    Minimizer mm;
    mm.component = c;
    mm.z = Vec::Constant(1, s);
    mm.value = f;
    mm.length = f - pb_.data().value(c, s);
    const Vec q = b.position(s);
    if (mm.length < 1e-13) {
      mm.initial = mm.arrival = b.inner_normal(s).normalized();
    } else {
      const auto links = pb_.manifold().geodesics_between(q, p, 1e-9 * (1 + mm.length));
      mm.initial = links.front().initial;
      mm.arrival = links.front().arrival;
    }
    return mm;
  }

  const HJProblem& pb_;
  std::vector<Comp> comps_;
};

class PointOracleEngine : public HJProblem::Engine {
 public:
  explicit PointOracleEngine(const HJProblem& pb) : pb_(pb) {}

  std::vector<Minimizer> minimizers(const Vec& p) const override {
    const Manifold& m = pb_.manifold();
    if (m.displacement(pb_.source(), p).norm() < 1e-12) return {};
    const auto links = m.geodesics_between(pb_.source(), p, pb_.options().epsilon_min);
    std::vector<Minimizer> c;
    for (const auto& l : links) c.push_back(make(l));
    return cluster_minimizers(c, pb_.options().delta_sep, true, 2 * kPi);
  }

  std::optional<Minimizer> follow(const Minimizer& mm, const Vec& p) const override {
    const Manifold& m = pb_.manifold();
    if (m.displacement(pb_.source(), p).norm() < 1e-12) return std::nullopt;
    const auto links = m.geodesics_between(pb_.source(), p, 1e6);
    const GeodesicLink* best = nullptr;
    double best_dot = -kInf;
    for (const auto& l : links) {
      const double d = l.initial.dot(mm.initial);
      if (d > best_dot) {
        best_dot = d;
        best = &l;
      }
    }
    if (!best) return std::nullopt;
    return make(*best);
  }

 private:
  Minimizer make(const GeodesicLink& l) const {
    const auto& fam = static_cast<const PointRayFamily&>(*pb_.family(-1));
    Minimizer mm;
    mm.component = -1;
    mm.initial = l.initial;
    mm.arrival = l.arrival;
    mm.length = mm.value = l.length;
    mm.continuum = l.continuum;
    mm.z = fam.direction_parameter(l.initial);
    return mm;
  }

  const HJProblem& pb_;
};

long long cell_key(const Vec& q, double cell, int di, int dj, int dk) {
  const long long i = static_cast<long long>(std::floor(q[0] / cell)) + di;
  const long long j = static_cast<long long>(std::floor(q[1] / cell)) + dj;
  const long long k = q.size() > 2 ? static_cast<long long>(std::floor(q[2] / cell)) + dk : 0;
  return (i * 73856093LL) ^ (j * 19349663LL) ^ (k * 83492791LL);
}

// Minimizers by multi-start Newton on the ray map, seeded from a traced fan.
class ShootingEngine : public HJProblem::Engine {
 public:
  explicit ShootingEngine(const HJProblem& pb) : pb_(pb) {
    const Manifold& m = pb.manifold();
    if (m.dim() != 2) throw UnsupportedError("shooting is implemented for surfaces");
    horizon_ = pb.options().horizon > 0 ? pb.options().horizon : default_horizon(m);
    const int n = std::max(pb.options().fan_rays, 16);
    FlowOptions fo;
    fo.tol = 1e-9;
    for (int c = 0; c < pb.families(); ++c) {
      const auto& fam = *pb.family(pb.is_point_source() ? -1 : c);
      Fan f;
      f.periodic = fam.periodic();
      f.period = fam.period();
      f.z0 = fam.z_min();
      f.dz = f.periodic ? f.period / n : f.period / (n - 1);
      for (int i = 0; i < n; ++i) f.z.push_back(f.z0 + f.dz * i);
      fans_.push_back(std::move(f));
    }
    cell_ = 0.0;
    for (const auto& f : fans_) cell_ = std::max(cell_, 1.5 * horizon_ * f.dz);
    const double dt = cell_ / 3;
    for (int c = 0; c < static_cast<int>(fans_.size()); ++c) {
      const auto& fam = *pb.family(pb.is_point_source() ? -1 : c);
      std::vector<Vec> zs;
      for (double z : fans_[c].z) zs.push_back(Vec::Constant(1, z));
      const auto rays = sweep_rays(fam, zs, horizon_, fo, pb.options().threads);
      for (int r = 0; r < static_cast<int>(rays.size()); ++r) {
        const double tend = rays[r].t_end();
        for (double t = 0.0; t <= tend; t += dt) {
          const VecX y = rays[r].dense().eval(t);
          Sample s;
          s.pos = y.head(m.coord_dim());
          s.t = t;
          s.family = c;
          s.ray = r;
          s.state = y;
          hash_[cell_key(s.pos, cell_, 0, 0, 0)].push_back(static_cast<int>(samples_.size()));
          samples_.push_back(std::move(s));
        }
      }
    }
  }

  bool shooting() const override { return true; }

  std::vector<Minimizer> minimizers(const Vec& p) const override {
    const Manifold& m = pb_.manifold();
    if (pb_.is_point_source() && m.displacement(pb_.source(), p).norm() < 1e-12) return {};
    struct Guess {
      int family;
      double t, z, predicted;
    };
    std::map<std::pair<int, int>, std::pair<double, int>> best;  // (family, ray) -> (distance, sample)
    const int c3 = m.coord_dim() > 2 ? 1 : 0;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -c3; dk <= c3; ++dk) {
          auto it = hash_.find(cell_key(p, cell_, di, dj, dk));
          if (it == hash_.end()) continue;
          for (int idx : it->second) {
            const Sample& s = samples_[idx];
            const double d = (s.pos - p).norm();
            auto key = std::make_pair(s.family, s.ray);
            auto b = best.find(key);
            if (b == best.end() || d < b->second.first) best[key] = {d, idx};
          }
        }
    std::vector<Guess> guesses;
    const int c = m.coord_dim();
    for (const auto& kv : best) {
      const Sample& s = samples_[kv.second.second];
      const Fan& f = fans_[s.family];
      Mat cols(c, 2);
      cols.col(0) = s.state.segment(c, c);
      cols.col(1) = s.state.segment(2 * c, c);
      const Mat e = m.tangent_basis(s.pos);
      const Mat jac = e.transpose() * cols;
      const Vec r = e.transpose() * (p - s.pos);
      const Vec d = jac.colPivHouseholderQr().solve(r);
      if (!d.allFinite() || std::abs(d[1]) > 3 * f.dz) continue;
      const double t = s.t + d[0];
      if (t < -cell_) continue;
      guesses.push_back({s.family, std::max(t, 0.0), f.z[s.ray] + d[1], std::max(t, 0.0) + pb_.g_at(
                                                                             family_component(s.family),
                                                                             Vec::Constant(1, f.z[s.ray] + d[1]))});
    }
    std::sort(guesses.begin(), guesses.end(), [](const Guess& a, const Guess& b) { return a.predicted < b.predicted; });
    // One start per branch: guesses closer than two fan spacings share a branch.
    std::vector<Guess> starts;
    for (const auto& g : guesses) {
      bool dup = false;
      for (const auto& s : starts)
        if (s.family == g.family && param_gap(s.z, g.z, fans_[g.family].periodic, fans_[g.family].period) <
                                        2 * fans_[g.family].dz &&
            std::abs(s.t - g.t) < 2 * cell_)
          dup = true;
      if (!dup) starts.push_back(g);
      if (static_cast<int>(starts.size()) >= pb_.options().shooting_starts) break;
    }
    std::vector<Minimizer> found;
    double vbest = kInf;
    for (const auto& s : starts) {
      if (s.predicted > vbest + 2 * cell_) break;
      auto mm = newton(s.family, s.t, s.z, p);
      if (!mm) continue;
      bool dup = false;
      for (const auto& f : found)
        if (f.component == mm->component && std::abs(f.length - mm->length) < 1e-7 &&
            param_gap(f.z[0], mm->z[0], fans_[s.family].periodic, fans_[s.family].period) < 1e-7)
          dup = true;
      if (dup) continue;
      vbest = std::min(vbest, mm->value);
      found.push_back(*mm);
    }
    std::vector<Minimizer> keep;
    for (const auto& f : found)
      if (f.value <= vbest + pb_.options().epsilon_min) keep.push_back(f);
    if (keep.empty()) {
      nlohmann::json d = {{"error", "shooting_failed"}, {"point", vec_to_json(p)}, {"starts", starts.size()}};
      throw NumericalError("geodesic shooting found no minimizer", d.dump());
    }
    return cluster_minimizers(keep, pb_.options().delta_sep, fans_[0].periodic, fans_[0].period);
  }

  std::optional<Minimizer> follow(const Minimizer& mm, const Vec& p) const override {
    return newton(pb_.is_point_source() ? 0 : mm.component, mm.length, mm.z[0], p);
  }

 private:
  struct Fan {
    std::vector<double> z;
    double z0 = 0.0, dz = 0.0, period = 2 * kPi;
    bool periodic = true;
  };
  struct Sample {
    Vec pos;
    double t = 0.0;
    int family = 0, ray = 0;
    VecX state;
  };

  int family_component(int f) const { return pb_.is_point_source() ? -1 : f; }

  std::optional<Minimizer> newton(int f, double t, double z, const Vec& p) const {
    const Manifold& m = pb_.manifold();
    const int comp = family_component(f);
    const auto& fam = *pb_.family(comp);
    FlowOptions fo;
    fo.tol = pb_.options().ray_tol;
    const double scale = 1.0 + p.norm();
    for (int it = 0; it < 40; ++it) {
      const JacobiBundle b = flow_with_jacobi(fam, {t, comp, Vec::Constant(1, z)}, fo);
      if (b.exited) return std::nullopt;
      const Vec x = b.base.position;
      const Vec err = m.displacement(x, p);
      if (err.norm() < 1e-12 * scale) {
        Minimizer mm;
        mm.component = comp;
        double zw = z;
        if (fans_[f].periodic) {
          zw = std::fmod(z - fans_[f].z0, fans_[f].period);
          if (zw < 0) zw += fans_[f].period;
          zw += fans_[f].z0;
        }
        mm.z = Vec::Constant(1, zw);
        mm.length = t;
        mm.value = t + pb_.g_at(comp, mm.z);
        mm.arrival = b.base.velocity;
        Vec pos, vel;
        Mat dpos, dvel;
        fam.initial(mm.z, pos, vel, dpos, dvel);
        mm.initial = vel;
        return mm;
      }
      const Mat e = m.tangent_basis(x);
      const Mat jac = e.transpose() * b.columns;
      Vec d = jac.colPivHouseholderQr().solve(Vec(e.transpose() * err));
      if (!d.allFinite()) return std::nullopt;
      const double lim = std::max(std::abs(d[0]) / 0.5, std::abs(d[1]) / (4 * fans_[f].dz));
      if (lim > 1) d /= lim;
      t += d[0];
      z += d[1];
      if (t < 0) return std::nullopt;
      if (!fans_[f].periodic && (z < fans_[f].z0 || z > fans_[f].z0 + fans_[f].period)) return std::nullopt;
    }
    return std::nullopt;
  }

  const HJProblem& pb_;
  double horizon_ = 0.0;
  double cell_ = 0.0;
  std::vector<Fan> fans_;
  std::vector<Sample> samples_;
  std::unordered_map<long long, std::vector<int>> hash_;
};

}  // namespace

double default_horizon(const Manifold& m) {
  const GridSpec g = m.grid_spec();
  Vec lo, hi;
  for (int i = 0; i <= 8; ++i)
    for (int j = 0; j <= 8; ++j) {
      const Vec p = m.grid_point(g.u0 + (g.u1 - g.u0) * i / 8, g.v0 + (g.v1 - g.v0) * j / 8);
      if (lo.size() == 0) {
        lo = hi = p;
      } else {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
  return 2.0 * (hi - lo).norm();
}

HJProblem::~HJProblem() = default;

std::shared_ptr<HJProblem> HJProblem::boundary(std::shared_ptr<const Manifold> m, BoundaryData g, SolveOptions opt) {
  if (m->boundary().empty()) throw DomainError("manifold has no boundary");
  if (g.components() > static_cast<int>(m->boundary().size()))
    throw ConfigError("boundary data has more components than the manifold boundary");
  std::shared_ptr<HJProblem> pb(new HJProblem());
  pb->m_ = std::move(m);
  pb->g_ = std::move(g);
  pb->opt_ = opt;
  pb->build();
  return pb;
}

std::shared_ptr<HJProblem> HJProblem::point_source(std::shared_ptr<const Manifold> m, Vec p, SolveOptions opt) {
  if (!m->contains(p)) throw DomainError("source point lies outside the domain");
  std::shared_ptr<HJProblem> pb(new HJProblem());
  pb->m_ = std::move(m);
  pb->source_ = std::move(p);
  pb->opt_ = opt;
  pb->build();
  return pb;
}

void HJProblem::build() {
  if (source_) {
    families_.push_back(std::make_shared<PointRayFamily>(m_, *source_));
    if (m_->has_distance_oracle()) engine_ = std::make_unique<PointOracleEngine>(*this);
    else engine_ = std::make_unique<ShootingEngine>(*this);
    return;
  }
  for (const auto& b : m_->boundary()) {
    const int c = b.id;
    const BoundaryData* data = &g_;
    auto gv = [data, c](double s) { return data->value(c, s); };
    auto dg = [data, c](double s) { return data->derivative(c, s); };
    families_.push_back(std::make_shared<BoundaryRayFamily>(m_, b, gv, dg));
  }
  if (m_->has_distance_oracle()) engine_ = std::make_unique<SampledBoundaryEngine>(*this);
  else engine_ = std::make_unique<ShootingEngine>(*this);
}

std::shared_ptr<const RayFamily> HJProblem::family(int component) const {
  const int i = component < 0 ? 0 : component;
  if (i >= static_cast<int>(families_.size())) throw DomainError("no ray family for component");
  return families_[i];
}

double HJProblem::g_at(int component, const Vec& z) const {
  if (source_ || component < 0) return 0.0;
  return g_.value(component, z[0]);
}

bool HJProblem::uses_shooting() const { return engine_->shooting(); }

std::vector<Minimizer> HJProblem::minimizers(const Vec& p) const { return engine_->minimizers(p); }

double HJProblem::value(const Vec& p) const {
  const auto mins = minimizers(p);
  if (mins.empty()) return source_ ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return mins.front().value;
}

std::vector<Minimizer> HJProblem::local_minimizers(const Vec& p) const { return engine_->local_minimizers(p); }

std::optional<Minimizer> HJProblem::follow(const Minimizer& m, const Vec& p) const { return engine_->follow(m, p); }

CompatibilityReport check_compatibility(const Manifold& m, const BoundaryData& g, int n) {
  struct S {
    int c;
    double s;
    Vec q;
    double g;
  };
  std::vector<S> pts;
  for (const auto& b : m.boundary()) {
    for (int i = 0; i < n; ++i) {
      const double s = b.periodic ? b.s_min + b.period() * i / n : b.s_min + (b.s_max - b.s_min) * i / (n - 1);
      pts.push_back({b.id, s, b.position(s), g.value(b.id, s)});
    }
  }
  CompatibilityReport r;
  auto consider = [&](const S& a, const S& b, double d) {
    if (!(d > 1e-12)) return;
    const double k = std::abs(a.g - b.g) / d;
    if (k > r.k) {
      r.k = k;
      r.component_p = a.c;
      r.component_q = b.c;
      r.s_p = a.s;
      r.s_q = b.s;
    }
  };
  if (m.has_distance_oracle()) {
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j) consider(pts[i], pts[j], m.distance(pts[i].q, pts[j].q));
  } else {
    // Without an oracle only the boundary-tangential slope is available.
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      if (pts[i].c != pts[i + 1].c) continue;
      const Vec d = pts[i + 1].q - pts[i].q;
      consider(pts[i], pts[i + 1], m.metric().norm(pts[i].q, d));
    }
  }
  r.ok = r.k < 1.0 - 1e-6;
  return r;
}

bool SolutionSample::multiple() const {
  if (minimizers.size() >= 2) return true;
  return !minimizers.empty() && minimizers.front().continuum;
}

double ViscositySolution::grid_u(int i) const {
  return grid.periodic_u ? grid.u0 + (grid.u1 - grid.u0) * i / n_u : grid.u0 + (grid.u1 - grid.u0) * i / (n_u - 1);
}

double ViscositySolution::grid_v(int j) const {
  return grid.periodic_v ? grid.v0 + (grid.v1 - grid.v0) * j / n_v : grid.v0 + (grid.v1 - grid.v0) * j / (n_v - 1);
}

ViscositySolution lax_oleinik_solve(const HJProblem& problem, int n_u, int n_v) {
  if (n_u < 2 || n_v < 2) throw ConfigError("grid needs at least 2 x 2 samples");
  ViscositySolution sol;
  sol.grid = problem.manifold().grid_spec();
  sol.n_u = n_u;
  sol.n_v = n_v;
  sol.epsilon_min = problem.options().epsilon_min;
  sol.samples.resize(static_cast<size_t>(n_u) * n_v);
  const Manifold& m = problem.manifold();
  parallel_for(sol.samples.size(), problem.options().threads, [&](size_t k) {
    const int i = static_cast<int>(k / n_v), j = static_cast<int>(k % n_v);
    SolutionSample& s = sol.samples[k];
    s.p = m.grid_point(sol.grid_u(i), sol.grid_v(j));
    s.inside = m.contains(s.p, 1e-12);
    if (!s.inside) return;
    try {
      s.minimizers = problem.minimizers(s.p);
      s.u = s.minimizers.empty() ? (problem.is_point_source() ? 0.0 : s.u) : s.minimizers.front().value;
    } catch (const NumericalError& e) {
      s.diagnostic = e.diagnostic;
    }
  });
  for (const auto& s : sol.samples)
    if (s.inside && s.multiple()) sol.smooth = false;
  return sol;
}

std::string to_string(CutReason r) {
  switch (r) {
    case CutReason::multiple_minimizers: return "multiple_minimizers";
    case CutReason::conjugate: return "conjugate";
    case CutReason::domain_exit: return "domain_exit";
  }
  return "domain_exit";
}

namespace {

bool same_branch(const HJProblem& pb, const Minimizer& a, const Minimizer& b, double tol) {
  if (a.component != b.component) return false;
  const auto fam = pb.family(a.component);
  return param_gap(a.z[0], b.z[0], fam->periodic(), fam->period()) < tol;
}

}  // namespace

CutRecord cut_time(const HJProblem& pb, int component, const Vec& z, const CutOptions& opt) {
  const auto fam = pb.family(component);
  const int comp = fam->component();
  const double cap = opt.t_cap > 0 ? opt.t_cap : default_horizon(pb.manifold());
  FlowOptions fo;
  fo.tol = opt.detect.ray_tol;
  const Ray ray = trace_ray(*fam, z, cap, fo);
  CutRecord rec;
  rec.component = comp;
  rec.z = z;
  const auto events = detect_conjugate_events(ray, comp, ray.t_end(), opt.detect);
  rec.lambda1 = events.empty() ? ExtendedTime::infinite() : ExtendedTime::of(events.front().ray.t);
  const double exit = ray.exited() ? ray.exit_time() : kInf;
  const double t_hi = std::min({rec.lambda1.value, exit, ray.t_end()});
  const double g0 = pb.g_at(comp, z);
  auto gap = [&](double t) { return g0 + t - pb.value(ray.position(t)); };
  auto minimal = [&](double t) { return gap(t) <= opt.predicate_tol; };

  if (minimal(t_hi)) {
    if (rec.lambda1.finite && rec.lambda1.value <= t_hi) {
      rec.t_cut = rec.lambda1;
      rec.reason = CutReason::conjugate;
    } else if (ray.exited()) {
      rec.t_cut = ExtendedTime::of(exit);
      rec.reason = CutReason::domain_exit;
    } else {
      rec.t_cut = ExtendedTime::infinite();
      rec.reason = CutReason::domain_exit;
    }
    return rec;
  }
  double lo = 0.0, hi = t_hi;
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    (minimal(mid) ? lo : hi) = mid;
  }
  // Past the cut point a competing branch is shorter; its crossing with the
  // ray's own value is the cut time.
  std::optional<Minimizer> rival;
  Minimizer own;
  own.component = comp;
  own.z = z;
  for (const auto& m : pb.minimizers(ray.position(hi))) {
    if (!same_branch(pb, m, own, pb.options().delta_sep)) {
      rival = m;
      break;
    }
  }
  bool solved = false;
  if (rival) {
    auto c = [&](double t) {
      const auto f = pb.follow(*rival, ray.position(t));
      return f ? g0 + t - f->value : std::numeric_limits<double>::quiet_NaN();
    };
    const double clo = c(lo), chi = c(hi);
    if (std::isfinite(clo) && std::isfinite(chi) && clo <= 0 && chi > 0) {
      const double r = bracketed_root(c, lo, hi, clo, chi, opt.t_tol);
      if (std::isfinite(r)) {
        lo = hi = r;
        solved = true;
      }
    }
  }
  if (!solved) {
    while (hi - lo > opt.t_tol) {
      const double mid = 0.5 * (lo + hi);
      (minimal(mid) ? lo : hi) = mid;
    }
  }
  rec.t_cut = ExtendedTime::of(0.5 * (lo + hi));
  rec.reason = rec.lambda1.finite && rec.lambda1.value - rec.t_cut.value < 1e-6 ? CutReason::conjugate
                                                                               : CutReason::multiple_minimizers;
  return rec;
}

std::vector<CutRecord> cut_times(const HJProblem& pb, int component, const std::vector<Vec>& zs, const CutOptions& opt,
                                 int threads) {
  std::vector<CutRecord> out(zs.size());
  parallel_for(zs.size(), threads, [&](size_t i) { out[i] = cut_time(pb, component, zs[i], opt); });
  return out;
}

std::vector<CharacteristicSample> characteristics_solution(const HJProblem& pb, int rays, int steps, double depth,
                                                           const CutOptions& opt) {
  std::vector<CharacteristicSample> out;
  FlowOptions fo;
  fo.tol = opt.detect.ray_tol;
  for (int f = 0; f < pb.families(); ++f) {
    const auto fam = pb.family(pb.is_point_source() ? -1 : f);
    const int comp = fam->component();
    std::vector<Vec> zs;
    for (int i = 0; i < rays; ++i) {
      const double z = fam->periodic() ? fam->z_min() + fam->period() * i / rays
                                       : fam->z_min() + fam->period() * (i + 0.5) / rays;
      zs.push_back(Vec::Constant(1, z));
    }
    const auto cuts = cut_times(pb, comp, zs, opt, pb.options().threads);
    for (int i = 0; i < rays; ++i) {
      const double limit = std::min(depth, cuts[i].t_cut.value);
      const Ray ray = trace_ray(*fam, zs[i], depth, fo);
      const double g0 = pb.g_at(comp, zs[i]);
      for (int k = 0; k <= steps; ++k) {
        const double t = depth * k / steps;
        if (t >= limit || t > ray.t_end()) break;
        out.push_back({comp, zs[i], t, ray.position(t), g0 + t});
      }
    }
  }
  return out;
}

bool minimizer_is_conjugate(const HJProblem& pb, const Minimizer& m, double rank_tol) {
  if (m.length <= 1e-9) return false;
  const auto fam = pb.family(m.component);
  FlowOptions fo;
  fo.tol = pb.options().ray_tol;
  const Ray ray = trace_ray(*fam, m.z, m.length, fo);
  const Mat j = ray.jacobian(ray.t_end());
  Eigen::JacobiSVD<Mat> svd(j);
  const auto& sv = svd.singularValues();
  return sv[sv.size() - 1] <= rank_tol * sv[0];
}

std::vector<Vec> SingularSet::positions() const {
  std::vector<Vec> out;
  for (const auto& p : points) out.push_back(p.p);
  return out;
}

SingularSet singular_set_extract(const HJProblem& pb, const ViscositySolution& sol, const ExtractOptions& opt) {
  const Manifold& m = pb.manifold();
  SingularSet out;
  out.delta_sep = pb.options().delta_sep;
  for (const auto& s : sol.samples) {
    if (!s.inside || !s.multiple()) continue;
    SingularPoint sp;
    sp.p = m.wrap(s.p);
    sp.u = s.u;
    sp.minimizers = s.minimizers;
    for (const auto& mm : s.minimizers) sp.continuum = sp.continuum || mm.continuum;
    out.points.push_back(std::move(sp));
  }
  if (opt.bisect_edges) {
    struct Edge {
      int i0, j0, i1, j1;
    };
    std::vector<Edge> edges;
    for (int i = 0; i < sol.n_u; ++i)
      for (int j = 0; j < sol.n_v; ++j) {
        if (i + 1 < sol.n_u || sol.grid.periodic_u) edges.push_back({i, j, i + 1, j});
        if (j + 1 < sol.n_v || sol.grid.periodic_v) edges.push_back({i, j, i, j + 1});
      }
    std::vector<std::optional<SingularPoint>> found(edges.size());
    const double tiny = 1e-10;
    parallel_for(edges.size(), pb.options().threads, [&](size_t k) {
      const Edge& e = edges[k];
      const auto& a = sol.at(e.i0, e.j0);
      const auto& b = sol.at(e.i1 % sol.n_u, e.j1 % sol.n_v);
      if (!a.inside || !b.inside || a.minimizers.empty() || b.minimizers.empty()) return;
      const Minimizer& A = a.minimizers.front();
      const Minimizer& B = b.minimizers.front();
      if (A.continuum || B.continuum) return;
      if (same_branch(pb, A, B, pb.options().delta_sep)) return;
      const double ua = sol.grid_u(e.i0), va = sol.grid_v(e.j0);
      const double ub = sol.grid_u(e.i1), vb = sol.grid_v(e.j1);
      auto point = [&](double lam) { return m.grid_point(ua + lam * (ub - ua), va + lam * (vb - va)); };
      auto delta = [&](double lam) {
        const Vec x = point(lam);
        const auto fa = pb.follow(A, x);
        const auto fb = pb.follow(B, x);
        if (!fa || !fb) return std::numeric_limits<double>::quiet_NaN();
        return fa->value - fb->value;
      };
      try {
        const double d0 = delta(0.0), d1 = delta(1.0);
        if (!(d0 < -tiny && d1 > tiny)) return;
        const double lam = bracketed_root(delta, 0.0, 1.0, d0, d1, 1e-13);
        const Vec x = point(lam);
        if (!m.contains(x, 1e-12)) return;
        auto mins = pb.minimizers(x);
        SingularPoint sp;
        sp.p = m.wrap(x);
        sp.minimizers = mins;
        sp.from_edge = true;
        if (mins.empty()) return;
        sp.u = mins.front().value;
        for (const auto& mm : mins) sp.continuum = sp.continuum || mm.continuum;
        if (mins.size() < 2 && !sp.continuum) return;
        found[k] = std::move(sp);
      } catch (const NumericalError&) {
      }
    });
    for (auto& f : found)
      if (f) out.points.push_back(std::move(*f));
  }
  if (opt.conjugate_flags) {
    parallel_for(out.points.size(), pb.options().threads, [&](size_t k) {
      auto& sp = out.points[k];
      sp.conjugate.assign(sp.minimizers.size(), false);
      for (size_t i = 0; i < sp.minimizers.size(); ++i) {
        try {
          sp.conjugate[i] = minimizer_is_conjugate(pb, sp.minimizers[i], opt.rank_tol);
        } catch (const Error&) {
        }
      }
    });
  } else {
    for (auto& sp : out.points) sp.conjugate.assign(sp.minimizers.size(), false);
  }
  return out;
}

PointCloud::PointCloud(std::vector<Vec> points, double radius)
    : pts_(std::move(points)), radius_(radius), cell_(radius) {
  if (!(radius > 0)) throw DomainError("proximity radius must be positive");
  for (int i = 0; i < static_cast<int>(pts_.size()); ++i) cells_[key(pts_[i], 0, 0, 0)].push_back(i);
}

long long PointCloud::key(const Vec& q, int di, int dj, int dk) const { return cell_key(q, cell_, di, dj, dk); }

double PointCloud::distance(const Vec& q) const {
  double best = kInf;
  const int c3 = q.size() > 2 ? 1 : 0;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -c3; dk <= c3; ++dk) {
        auto it = cells_.find(key(q, di, dj, dk));
        if (it == cells_.end()) continue;
        for (int i : it->second) best = std::min(best, (pts_[i] - q).norm());
      }
  return best;
}

ExtendedTime rho_S(const HJProblem& pb, int component, const Vec& z, const PointCloud& S, const RhoOptions& opt) {
  const auto fam = pb.family(component);
  const int comp = fam->component();
  const Manifold& m = pb.manifold();
  const double cap = opt.t_cap > 0 ? opt.t_cap : default_horizon(m);
  const double step = opt.step > 0 ? opt.step : 0.5 * S.radius();
  FlowOptions fo;
  fo.tol = pb.options().ray_tol;
  const Ray ray = trace_ray(*fam, z, cap, fo);
  double t_enter = kInf;
  for (double t = 0.0; t <= ray.t_end(); t += step) {
    if (S.distance(m.wrap(ray.position(t))) < S.radius()) {
      t_enter = t;
      break;
    }
  }
  if (!std::isfinite(t_enter)) return ExtendedTime::infinite();
  if (!opt.refine) return ExtendedTime::of(t_enter);
  const double g0 = pb.g_at(comp, z);
  auto minimal = [&](double t) { return g0 + t - pb.value(ray.position(t)) <= opt.predicate_tol; };
  double lo = std::max(0.0, t_enter - 2 * S.radius()), hi = std::min(ray.t_end(), t_enter + 4 * S.radius());
  if (!minimal(lo) || minimal(hi)) return ExtendedTime::of(t_enter);
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (minimal(mid) ? lo : hi) = mid;
  }
  return ExtendedTime::of(0.5 * (lo + hi));
}

namespace {

bool segments_cross(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  auto orient = [](const Vec& p, const Vec& q, const Vec& r) {
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

bool euclidean_metric(const MetricField& mf) {
  if (mf.kind() != MetricKind::Riemannian || !mf.is_constant()) return false;
  const Mat t = mf.tensor(Vec::Zero(mf.dim()));
  return (t - Mat::Identity(mf.dim(), mf.dim())).norm() < 1e-14;
}

}  // namespace

double distance_to_polyline(const Manifold& m, const std::vector<Vec>& poly, bool closed, const Vec& p) {
  const MetricField& mf = m.metric();
  const int n = static_cast<int>(poly.size());
  if (n == 0) return kInf;
  const int segs = closed ? n : n - 1;
  if (euclidean_metric(mf)) {
    double best = kInf;
    for (int i = 0; i < std::max(segs, 1); ++i) {
      const Vec& a = poly[i];
      const Vec& b = poly[(i + 1) % n];
      const Vec d = b - a;
      const double l2 = d.squaredNorm();
      const double t = l2 > 0 ? std::clamp((p - a).dot(d) / l2, 0.0, 1.0) : 0.0;
      best = std::min(best, (a + t * d - p).norm());
    }
    return best;
  }
  int bi = 0;
  double best = kInf;
  for (int i = 0; i < n; ++i) {
    const double d = mf.norm(poly[i], p - poly[i]);
    if (d < best) {
      best = d;
      bi = i;
    }
  }
  for (int k : {bi - 1, bi}) {
    if (!closed && (k < 0 || k + 1 >= n)) continue;
    const Vec& a = poly[(k + n) % n];
    const Vec& b = poly[(k + 1 + n) % n];
    auto f = [&](double t) {
      const Vec x = a + t * (b - a);
      return mf.norm(x, p - x);
    };
    best = std::min(best, local_minimum(f, 0.0, 1.0).second);
  }
  return best;
}

Reduction extend_and_reduce(const HJProblem& pb, int samples, int probe) {
  if (pb.is_point_source()) throw DomainError("reduction needs boundary data");
  const Manifold& m = pb.manifold();
  if (!dynamic_cast<const FlatDomain*>(&m)) throw UnsupportedError("reduction is implemented for flat domains");
  Reduction red;
  double gmin = kInf, gmax = -kInf;
  for (const auto& b : m.boundary())
    for (int i = 0; i < samples; ++i) {
      const double s = b.periodic ? b.s_min + b.period() * i / samples
                                  : b.s_min + (b.s_max - b.s_min) * i / (samples - 1);
      const double g = pb.data().value(b.id, s);
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
  red.depth = 1.1 * (gmax - gmin);
  red.offset = gmin < 0 ? gmin - 0.1 * (gmax - gmin) : 0.0;
  std::vector<std::vector<Vec>> polys;
  std::vector<bool> closed;
  for (const auto& b : m.boundary()) {
    const auto& fam = dynamic_cast<const BoundaryRayFamily&>(*pb.family(b.id));
    std::vector<Vec> poly;
    std::vector<double> depths;
    for (int i = 0; i < samples; ++i) {
      const double s = b.periodic ? b.s_min + b.period() * i / samples
                                  : b.s_min + (b.s_max - b.s_min) * i / (samples - 1);
      const double d = pb.data().value(b.id, s) - red.offset;
      const Vec q = b.position(s);
      Vec x = q;
      if (d > 0) {
        const auto traj = integrate_geodesic(m, PhaseState{q, fam.field()(s), 0.0}, -d, 1e-12, false);
        x = traj.states.back().position;
      }
      poly.push_back(x);
      depths.push_back(d);
      red.component.push_back(b.id);
      red.s.push_back(s);
      red.lambda.push_back(x);
    }
    for (int i = 0; i + 1 < samples || (b.periodic && i < samples); ++i) {
      const int j = (i + 1) % samples;
      if (!b.periodic && j == 0) break;
      const Vec chord = poly[j] - poly[i];
      if (chord.dot(b.tangent(red.s[red.s.size() - samples + i])) <= 0) {
        nlohmann::json diag = {{"error", "backward_crossing"}, {"depth", depths[i]}, {"component", b.id}};
        throw NumericalError("backward characteristics cross", diag.dump());
      }
    }
    polys.push_back(std::move(poly));
    closed.push_back(b.periodic);
  }
  for (size_t a = 0; a < polys.size(); ++a)
    for (size_t b = a; b < polys.size(); ++b) {
      const int na = static_cast<int>(polys[a].size()), nb = static_cast<int>(polys[b].size());
      const int sa = closed[a] ? na : na - 1, sb = closed[b] ? nb : nb - 1;
      for (int i = 0; i < sa; ++i)
        for (int j = (a == b ? i + 2 : 0); j < sb; ++j) {
          if (a == b && closed[a] && i == 0 && j == sa - 1) continue;
          if (segments_cross(polys[a][i], polys[a][(i + 1) % na], polys[b][j], polys[b][(j + 1) % nb])) {
            nlohmann::json diag = {{"error", "backward_crossing"}, {"component", static_cast<int>(a)}};
            throw NumericalError("backward characteristics cross", diag.dump());
          }
        }
    }
  const GridSpec g = m.grid_spec();
  std::vector<Vec> probes;
  for (int i = 0; i < probe; ++i)
    for (int j = 0; j < probe; ++j) {
      const Vec p = m.grid_point(g.u0 + (g.u1 - g.u0) * i / (probe - 1), g.v0 + (g.v1 - g.v0) * j / (probe - 1));
      if (m.contains(p, 0.0)) probes.push_back(p);
    }
  std::vector<double> err(probes.size(), 0.0);
  parallel_for(probes.size(), pb.options().threads, [&](size_t k) {
    double d = kInf;
    for (size_t c = 0; c < polys.size(); ++c) d = std::min(d, distance_to_polyline(m, polys[c], closed[c], probes[k]));
    err[k] = std::abs(pb.value(probes[k]) - red.offset - d);
  });
  for (double e : err) red.identity_error = std::max(red.identity_error, e);
  return red;
}

SemiconcavityReport semiconcavity_check(const std::function<double(const Vec&)>& u,
                                        const std::vector<std::pair<Vec, Vec>>& segments, int samples) {
  SemiconcavityReport r;
  const double fr[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (const auto& [x0, y0] : segments) {
    for (int a = 0; a < 5; ++a)
      for (int b = a + 1; b < 5; ++b) {
        const Vec x = x0 + fr[a] * (y0 - x0), y = x0 + fr[b] * (y0 - x0);
        const double ux = u(x), uy = u(y), len2 = (x - y).squaredNorm();
        for (int k = 1; k <= samples; ++k) {
          const double lam = static_cast<double>(k) / (samples + 1);
          const double d = lam * ux + (1 - lam) * uy - u(lam * x + (1 - lam) * y);
          r.max_defect = std::max(r.max_defect, d);
          r.constant = std::max(r.constant, d / (lam * (1 - lam) * len2));
        }
      }
  }
  return r;
}

nlohmann::json minimizer_to_json(const Minimizer& m) {
  return {{"component", m.component}, {"z", vec_to_json(m.z)},           {"length", m.length},
          {"value", m.value},         {"R", vec_to_json(m.arrival)},     {"continuum", m.continuum}};
}

std::string solution_csv(const ViscositySolution& s) {
  std::string out;
  const int dim = s.samples.empty() ? 2 : static_cast<int>(s.samples.front().p.size());
  for (int i = 0; i < dim; ++i) out += "p" + std::to_string(i + 1) + ",";
  out += "u,n_minimizers\n";
  for (const auto& smp : s.samples) {
    if (!smp.inside) continue;
    for (int i = 0; i < dim; ++i) out += format_number(smp.p[i], 12) + ",";
    out += format_number(smp.u, 12) + "," + std::to_string(smp.n_minimizers()) + "\n";
  }
  return out;
}

nlohmann::json singular_set_to_json(const SingularSet& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : s.points) {
    nlohmann::json rp = nlohmann::json::array(), comps = nlohmann::json::array();
    for (const auto& m : p.minimizers) {
      rp.push_back(vec_to_json(m.arrival));
      comps.push_back(m.component);
    }
    nlohmann::json conj = nlohmann::json::array();
    for (bool c : p.conjugate) conj.push_back(c);
    pts.push_back({{"p", vec_to_json(p.p)},
                   {"u", p.u},
                   {"R_p", rp},
                   {"components", comps},
                   {"conjugate", conj},
                   {"continuum", p.continuum}});
  }
  return {{"delta_sep", s.delta_sep}, {"points", pts}};
}

}  // namespace cutlocus
