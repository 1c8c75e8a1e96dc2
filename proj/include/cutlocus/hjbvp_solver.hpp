#pragma once

#include "cutlocus/conjugate_analysis.hpp"
#include "cutlocus/geodesic_flow.hpp"
#include "cutlocus/io.hpp"

#include "json.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cutlocus {

// One minimizing characteristic reaching a point p.
struct Minimizer {
  int component = 0;       // boundary component, -1 for a point source
  Vec z;                   // boundary parameter or direction parameter
  double length = 0.0;     // t
  double value = 0.0;      // g(z) + t
  Vec initial;             // unit velocity at the source end
  Vec arrival;             // unit velocity at p, an element of R_p
  bool continuum = false;  // stands for a whole arc of minimizers
};

struct SolveOptions {
  int boundary_samples = 2048;
  double epsilon_min = 1e-4;
  double delta_sep = 1e-2;
  int shooting_starts = 32;
  int fan_rays = 512;
  double horizon = 0.0;  // shooting horizon; 0 picks one from the domain size
  double ray_tol = 1e-11;
  int threads = 0;
};

// The problem H(p, du) = 1 on M with u = g on the boundary, or u = d(p0, .) for a point source.
class HJProblem {
 public:
  static std::shared_ptr<HJProblem> boundary(std::shared_ptr<const Manifold> m, BoundaryData g,
                                             SolveOptions opt = {});
  static std::shared_ptr<HJProblem> point_source(std::shared_ptr<const Manifold> m, Vec p, SolveOptions opt = {});
  ~HJProblem();

  const Manifold& manifold() const { return *m_; }
  std::shared_ptr<const Manifold> manifold_ptr() const { return m_; }
  const BoundaryData& data() const { return g_; }
  bool is_point_source() const { return source_.has_value(); }
  const Vec& source() const { return *source_; }
  const SolveOptions& options() const { return opt_; }
  SolveOptions& options() { return opt_; }
  // Number of ray families (boundary components, or one for a point source).
  int families() const { return static_cast<int>(families_.size()); }
  std::shared_ptr<const RayFamily> family(int component) const;
  double g_at(int component, const Vec& z) const;
  bool uses_shooting() const;

  // Minimizers of d(p, q) + g(q), one per cluster, sorted by value.
  std::vector<Minimizer> minimizers(const Vec& p) const;
  double value(const Vec& p) const;
  // Every local minimizer per component, not only the global ones.
  std::vector<Minimizer> local_minimizers(const Vec& p) const;
  // The minimizer of the branch through m, followed continuously to p.
  std::optional<Minimizer> follow(const Minimizer& m, const Vec& p) const;

  struct Engine;

 private:
  HJProblem() = default;
  void build();

  std::shared_ptr<const Manifold> m_;
  BoundaryData g_;
  std::optional<Vec> source_;
  SolveOptions opt_;
  std::vector<std::shared_ptr<const RayFamily>> families_;
  std::unique_ptr<Engine> engine_;
};

struct CompatibilityReport {
  bool ok = true;
  double k = 0.0;  // max |g(p) - g(q)| / d(p, q) over sampled pairs
  int component_p = 0, component_q = 0;
  double s_p = 0.0, s_q = 0.0;
};

CompatibilityReport check_compatibility(const Manifold& m, const BoundaryData& g, int samples_per_component = 256);

struct SolutionSample {
  Vec p;
  bool inside = false;
  double u = std::numeric_limits<double>::quiet_NaN();
  std::vector<Minimizer> minimizers;
  std::string diagnostic;

  int n_minimizers() const { return static_cast<int>(minimizers.size()); }
  bool multiple() const;
};

struct ViscositySolution {
  GridSpec grid;
  int n_u = 0, n_v = 0;
  double epsilon_min = 1e-4;
  std::vector<SolutionSample> samples;  // row major in u
  bool smooth = true;

  const SolutionSample& at(int i, int j) const { return samples[static_cast<size_t>(i) * n_v + j]; }
  double grid_u(int i) const;
  double grid_v(int j) const;
};

ViscositySolution lax_oleinik_solve(const HJProblem& problem, int n_u, int n_v);

enum class CutReason { multiple_minimizers, conjugate, domain_exit };
std::string to_string(CutReason r);

struct CutOptions {
  double predicate_tol = 1e-7;
  double t_tol = 1e-10;
  double t_cap = 0.0;  // 0 picks a cap from the domain size
  DetectOptions detect;
};

struct CutRecord {
  int component = 0;
  Vec z;
  ExtendedTime t_cut;
  CutReason reason = CutReason::domain_exit;
  ExtendedTime lambda1;
};

CutRecord cut_time(const HJProblem& problem, int component, const Vec& z, const CutOptions& opt = {});
std::vector<CutRecord> cut_times(const HJProblem& problem, int component, const std::vector<Vec>& zs,
                                 const CutOptions& opt = {}, int threads = 0);

struct CharacteristicSample {
  int component = 0;
  Vec z;
  double t = 0.0;
  Vec p;
  double u = 0.0;
};

// u(F(t, z)) = g(z) + t sampled for t below min(depth, t_cut(z)).
std::vector<CharacteristicSample> characteristics_solution(const HJProblem& problem, int rays_per_component,
                                                           int steps, double depth, const CutOptions& opt = {});

struct SingularPoint {
  Vec p;
  double u = 0.0;
  std::vector<Minimizer> minimizers;
  std::vector<bool> conjugate;  // per minimizer: det dF vanishes at its (t, z)
  bool continuum = false;
  bool from_edge = false;       // located by bisection on a grid edge
};

struct SingularSet {
  std::vector<SingularPoint> points;
  double delta_sep = 1e-2;

  std::vector<Vec> positions() const;
};

struct ExtractOptions {
  bool bisect_edges = true;
  bool conjugate_flags = true;
  double rank_tol = 1e-7;
};

SingularSet singular_set_extract(const HJProblem& problem, const ViscositySolution& solution,
                                 const ExtractOptions& opt = {});
// Conjugacy of the characteristic behind a minimizer.
bool minimizer_is_conjugate(const HJProblem& problem, const Minimizer& m, double rank_tol = 1e-7);

// Points with a proximity radius and a uniform hash for nearest queries.
class PointCloud {
 public:
  PointCloud(std::vector<Vec> points, double radius);

  const std::vector<Vec>& points() const { return pts_; }
  double radius() const { return radius_; }
  double distance(const Vec& q) const;

 private:
  std::vector<Vec> pts_;
  double radius_;
  double cell_;
  std::unordered_map<long long, std::vector<int>> cells_;
  long long key(const Vec& q, int di, int dj, int dk) const;
};

struct RhoOptions {
  double step = 0.0;   // marching step; 0 uses half the cloud radius
  double t_cap = 0.0;  // 0 picks a cap from the domain size
  bool refine = true;  // bisection against the minimality predicate (S is the singular set)
  double predicate_tol = 1e-7;
};

ExtendedTime rho_S(const HJProblem& problem, int component, const Vec& z, const PointCloud& S,
                   const RhoOptions& opt = {});

struct Reduction {
  double offset = 0.0;       // u = offset + d(Lambda, .)
  double depth = 0.0;        // extension depth max g - min g plus 10%
  std::vector<int> component;
  std::vector<double> s;
  std::vector<Vec> lambda;   // Lambda sampled per component, in order of s
  double identity_error = 0.0;  // sup over the probe grid of |u - offset - d(Lambda, .)|
};

// Moves the data to a zero boundary value on the level set Lambda of the
// backward extension. Throws NumericalError when backward characteristics cross.
Reduction extend_and_reduce(const HJProblem& problem, int samples = 1024, int probe = 64);
double distance_to_polyline(const Manifold& m, const std::vector<Vec>& poly, bool closed, const Vec& p);

struct SemiconcavityReport {
  double max_defect = 0.0;  // max of lambda u(x) + (1 - lambda) u(y) - u(lambda x + (1 - lambda) y)
  double constant = 0.0;    // smallest C with defect <= C lambda (1 - lambda) |x - y|^2
};

SemiconcavityReport semiconcavity_check(const std::function<double(const Vec&)>& u,
                                        const std::vector<std::pair<Vec, Vec>>& segments, int samples = 64);

double default_horizon(const Manifold& m);

nlohmann::json minimizer_to_json(const Minimizer& m);
std::string solution_csv(const ViscositySolution& s);
nlohmann::json singular_set_to_json(const SingularSet& s);

}  // namespace cutlocus
