#pragma once

#include "cutlocus/canonical_forms.hpp"
#include "cutlocus/conjugate_analysis.hpp"
#include "cutlocus/lagrangian_map.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace cutlocus {

// The distribution D degenerates (slack below threshold, or the kernel is not a line).
class DegenerateDistribution : public NumericalError {
 public:
  DegenerateDistribution(const std::string& msg, const nlohmann::json& diag) : NumericalError(msg, diag.dump()) {}
};

class RetortFailure : public NumericalError {
 public:
  RetortFailure(const std::string& msg, const nlohmann::json& diag) : NumericalError(msg, diag.dump()) {}
};

struct DistributionOptions {
  double slack_threshold = 1e-3;
  double snap_tol = 1e-4;  // largest move onto the conjugate set accepted for the input point
  double rank_tol = 1e-7;
};

struct ConjugateDirection {
  Vec x;                  // the input point, moved onto det de = 0
  Vec d;                  // unit, in D, with dR(d) < 0
  double a = 0.0;         // d = a r + v
  Vec v;
  Vec kernel;             // unit
  double slack = 0.0;     // |sin| of the angle between D and the kernel
  double kernel_residual = 0.0;   // |de v| / |de|
  double tangent_residual = 0.0;  // |<grad det, d>| / |grad det|
};

// D = (ker de + <r>) restricted to the tangent of the conjugate set.
ConjugateDirection conjugate_distribution(const LagrangianMap& map, const Vec& x, const DistributionOptions& opt = {});
ConjugateDirection conjugate_distribution(const RayFamilyMap& map, const RayCoordinate& x,
                                          const DistributionOptions& opt = {});

enum class CdcStop { a3_hit, domain_exit, max_length, unclassified };
std::string to_string(CdcStop s);

struct TraceOptions {
  double step = 1e-2;        // in units of radius
  double max_move = 1e-2;    // largest step in V
  double max_length = 10.0;  // largest radius drop
  int max_steps = 200000;
  DistributionOptions distribution;
  // ACDC mode: tilt the direction inside the tangent of the conjugate set by
  // cone_c * slack^3 radians (surfaces of dimension 3 and up).
  double cone_c = 0.0;
  int cone_sign = 1;
};

struct CdcSample {
  double s = 0.0;  // canonical parameter, s = R(start) - R
  Vec x;
  double radius = 0.0;
  double slack = 0.0;
};

struct CDCurve {
  std::vector<CdcSample> samples;
  CdcStop stop = CdcStop::max_length;
  double image_length = 0.0;

  double radius_drop() const;
  // |radius drop - image length| per unit image length.
  double unbeatable_error() const;
  Vec end() const { return samples.back().x; }
};

// Descending flow of D, parametrized by the radius (dR/ds = -1).
CDCurve trace_cdc(const LagrangianMap& map, const Vec& start, const TraceOptions& opt = {});

struct Retort {
  std::vector<Vec> samples;  // beta(0) ... beta(t1); samples[j] pairs with alpha sample n-1-j
  bool complete = false;
  bool hit_conjugate = false;
  double image_error = 0.0;  // max |e(beta(t1 - t)) - e(alpha(t))|
  double gain = 0.0;         // R(beta(t1)) - R(beta(0))
  double drop = 0.0;         // R(alpha(0)) - R(alpha(t1))
  double min_abs_det = 0.0;  // over interior samples
};

struct RetortOptions {
  double newton_tol = 1e-8;
  int max_newton = 40;
  double det_floor = 1e-13;
};

// Lifts e(alpha) backwards from start through the non-conjugate branch.
Retort build_retort(const LagrangianMap& map, const CDCurve& alpha, const Vec& start, const RetortOptions& opt = {});
// Searches the patch for a second preimage of e(alpha(end)) and lifts from it.
Retort build_retort(const LagrangianMap& map, const CDCurve& alpha, const RetortOptions& opt = {});

enum class A3Type { I, II };

struct JoinEvent {
  Vec point;
  A3Type type = A3Type::I;
  Vec direction;          // d/dt beta(t1 - t) at t = t1: the lift moving with alpha
  Vec retort_direction;   // beta'(0)
  double radius = 0.0;
};

// Type of an A3 point from the radius along the conjugate set through it.
A3Type a3_type(const LagrangianMap& map, const Vec& x, double probe = 1e-3);
// Join data for a CDC that stopped at an A3 point. A3(II) endpoints are refused.
JoinEvent a3_join(const LagrangianMap& map, const CDCurve& alpha);

// max |e(alpha_i) - e(beta_(n-1-i))|: the image of alpha * beta runs forward and back.
double tree_formed_error(const LagrangianMap& map, const CDCurve& alpha, const Retort& beta);

struct VertexCdc {
  double angle = 0.0;  // on the circle around the vertex
  Vec start;           // on the first conjugate sheet at distance ~eps
  bool leaving = false;
  CDCurve curve;       // traced when leaving
};

// CDCs through a D4 vertex at the origin of a model map, from the directions
// where D is a generatrix of the cone of first conjugate points.
std::vector<VertexCdc> vertex_cdcs(const ModelMap& map, double eps = 1e-2, int samples = 720,
                                   const TraceOptions& opt = {});

enum class D4Kind { minus, plus };
D4Kind d4_kind_from_string(const std::string& s);
std::string to_string(D4Kind k);

struct D4Roots {
  D4Kind kind = D4Kind::minus;
  double a = 0.0, b = 0.0;
  std::vector<double> coefficients;  // highest degree first
  std::vector<double> roots;         // real roots, increasing
  std::string chamber;               // "disk", "type I" or "type II"
  bool placement_ok = false;         // minus: one root per interval; plus type I: one positive, two around -1
};

// Real roots of the D4 alignment cubic for r0 = (a, b, 1) r0_3.
D4Roots d4_root_analysis(double a, double b, D4Kind kind);

std::string cdc_csv(const LagrangianMap& map, const CDCurve& c);
std::string retort_image_csv(const LagrangianMap& map, const CDCurve& alpha, const Retort& beta);
nlohmann::json join_to_json(const JoinEvent& j);
nlohmann::json d4_roots_to_json(const D4Roots& r);

}  // namespace cutlocus
