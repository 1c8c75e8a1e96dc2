#pragma once

#include "cutlocus/hjbvp_solver.hpp"
#include "cutlocus/manifolds.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cutlocus {

// A characteristic ray ending at a query point.
struct Arrival {
  int sheet = 0;       // boundary component, or lattice translate index
  Vec z;
  double t = 0.0;
  double h = 0.0;      // g(z) + t
  double value = 0.0;  // h plus the sheet offset
  Vec arrival;         // unit velocity at the end point
  Vec start;           // source point of the ray
  Vec initial;         // unit velocity at the source
};

// The characteristic rays of a problem, enumerated by their end point.
class RaySystem {
 public:
  virtual ~RaySystem() = default;
  virtual const Manifold& manifold() const = 0;
  // Locally minimizing rays of every sheet ending at q, by increasing t.
  virtual std::vector<Arrival> arrivals(const Vec& q) const = 0;
  virtual Vec ray_point(const Arrival& a, double s) const = 0;
  // Viscosity solution of the offset problem, when there is one.
  virtual bool has_value() const { return false; }
  virtual double value(const Vec& q) const;
  // Arrivals whose value is within eps of the smallest.
  std::vector<Arrival> minimal(const Vec& q, double eps) const;
};

// Rays of a boundary problem; the offsets of the data shift value but not h.
class ProblemRays : public RaySystem {
 public:
  explicit ProblemRays(std::shared_ptr<const HJProblem> problem);
  const Manifold& manifold() const override { return pb_->manifold(); }
  std::vector<Arrival> arrivals(const Vec& q) const override;
  Vec ray_point(const Arrival& a, double s) const override;
  bool has_value() const override { return true; }
  double value(const Vec& q) const override { return pb_->value(q); }
  const HJProblem& problem() const { return *pb_; }

 private:
  std::shared_ptr<const HJProblem> pb_;
  bool straight_ = false;
};

// Unit flat torus seen from its covering plane: one ray per translate k of the
// source, carrying the offset <b, k>.
class TorusTranslates : public RaySystem {
 public:
  TorusTranslates(Vec b, Vec source = vec2(0, 0), int reach = 2);
  const Manifold& manifold() const override { return *torus_; }
  std::vector<Arrival> arrivals(const Vec& q) const override;
  Vec ray_point(const Arrival& a, double s) const override;
  bool has_value() const override { return true; }
  double value(const Vec& q) const override;
  const Vec& b() const { return b_; }
  Vec translate(int sheet) const;
  std::shared_ptr<const FlatTorus> torus() const { return torus_; }

 private:
  Vec b_, src_;
  int reach_;
  std::shared_ptr<FlatTorus> torus_;
};

enum class PointClass { CLEAVE, EDGE, DEGENERATE_CLEAVE, CROSSING, REMAINDER };
std::string to_string(PointClass c);

struct SplitSample {
  Vec p;
  std::vector<Arrival> sides;   // one per vector of R_p
  std::vector<bool> conjugate;  // per side
  bool continuum = false;
  PointClass cls = PointClass::REMAINDER;

  int r_count() const { return static_cast<int>(sides.size()); }
};

struct SplitComponent {
  std::vector<int> samples;  // chained in order
  bool closed = false;
};

struct SplitLocusModel {
  std::string family;  // "constants", "torus" or "set"
  Vec parameter;
  std::shared_ptr<const RaySystem> rays;
  std::vector<SplitSample> samples;
  std::vector<SplitComponent> components;
  double spacing = 0.0;  // grid spacing of the construction

  const Manifold& manifold() const { return rays->manifold(); }
  std::vector<Vec> positions() const;
  // Fraction of samples with at least two vectors in R_p.
  double multi_fraction() const;
};

struct ConstantsOptions {
  int grid = 256;
  SolveOptions solve;
  int threads = 0;
};

// Samples of the singular set of a solved problem with R_p and h attached.
SplitLocusModel build_cut_locus_model(std::shared_ptr<const HJProblem> problem, int grid = 256, int threads = 0);
// Singular set of the data g + a, a constant per boundary component.
SplitLocusModel build_split_locus_from_constants(std::shared_ptr<const Manifold> m, const BoundaryData& g,
                                                 const std::vector<double>& a, const ConstantsOptions& opt = {});
// Split locus of the unit torus with the translate offsets <b, k>.
SplitLocusModel build_torus_family(const Vec& b, int grid = 512, int threads = 0);
// A prescribed set S with R_p from the rays that reach p without touching S.
SplitLocusModel build_split_locus_from_set(std::shared_ptr<const RaySystem> rays, std::vector<Vec> points,
                                           double spacing, int threads = 0);

struct SplitReport {
  int probes = 0;
  int checked = 0;
  std::vector<std::pair<Vec, int>> failures;  // probe and the number of rays reaching it
  bool ok() const { return checked > 0 && failures.empty(); }
};

SplitReport verify_splits(const SplitLocusModel& model, int probes_per_axis = 48, int threads = 0);

struct BalanceOptions {
  int neighbors = 8;
  double tol = 1e-3;
  double match_angle = 0.2;  // a neighbour vector farther than this from every R in R_p is not a limit
  double quotient_step = 1e-5;
  double quotient_tol = 5e-3;
};

struct BalanceReport {
  double worst_defect = 0.0;
  Vec worst_point;
  int approaches = 0;
  int inconclusive = 0;
  double quotient_error = 0.0;  // NaN when the model has no value function
  bool ok = false;
};

BalanceReport verify_balanced(const SplitLocusModel& model, const BalanceOptions& opt = {});

// Sets the class of every sample and returns counts by class name.
std::map<std::string, int> classify_points(SplitLocusModel& model);

// Greedy chaining of cleave samples with an angle gate (degrees).
void chain_components(SplitLocusModel& model, double gate_degrees = 30.0);

// h from the left of the chain direction minus h from the right, per chained sample.
std::vector<double> h_jump(const SplitLocusModel& model, const SplitComponent& c);

struct JumpStats {
  double mean = 0.0, stddev = 0.0;
  int n = 0;
};
std::vector<JumpStats> h_jump_stats(const SplitLocusModel& model);

// T(phi) = sum over cleave components of the integral of (h+ - h-) phi.
double current_T_eval(const SplitLocusModel& model, const std::function<Vec(const Vec&)>& phi);
// T(d sigma) with d sigma by finite differences along the chains.
double boundary_residual(const SplitLocusModel& model, const std::function<double(const Vec&)>& sigma);

// Largest |(|q - k| - |q - k'|) - <b, k' - k>| over cleave samples of a torus model.
double hyperbola_residual(const SplitLocusModel& model);

// Hausdorff distance between two sample clouds, capped at cap.
double cloud_hausdorff(const Manifold& m, const std::vector<Vec>& a, const std::vector<Vec>& b, double cap);

nlohmann::json model_to_json(const SplitLocusModel& model);
std::string model_svg(const SplitLocusModel& model);

}  // namespace cutlocus
