#pragma once

#include "cutlocus/lagrangian_map.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace cutlocus {

enum class SingularityClass { A2, A3_I, A3_II, A4, D4_plus_I, D4_plus_II, D4_minus, UNCLASSIFIED };

std::string to_string(SingularityClass c);
SingularityClass singularity_class_from_string(const std::string& s);

struct ConjugateEvent {
  RayCoordinate ray;  // for line scans of a model map, t is the line parameter
  Vec x;              // the event as a point of V
  int order = 1;
  Mat kernel_basis;   // dim x order, orthonormal in V coordinates
  SingularityClass cls = SingularityClass::UNCLASSIFIED;
};

struct DetectOptions {
  double root_tol = 1e-10;   // bisection tolerance in t
  double rank_tol = 1e-7;    // singular values below rank_tol * |dF| count towards the order
  double ray_tol = 1e-11;    // integrator tolerance for rays
  int line_samples = 2001;   // scan resolution for model maps
  double degenerate_tol = 1e-9;
};

// Zeros of det dF along one ray in (0, t_max]. Throws NumericalError when det dF
// vanishes on a whole interval.
std::vector<ConjugateEvent> detect_conjugate_events(const RayFamily& family, const Vec& z, double t_max,
                                                    const DetectOptions& opt = {});
std::vector<ConjugateEvent> detect_conjugate_events(const Ray& ray, int component, double t_max,
                                                    const DetectOptions& opt = {});
// Zeros of det de along x0 + s dir, s in (0, s_max].
std::vector<ConjugateEvent> detect_line_events(const LagrangianMap& map, const Vec& x0, const Vec& dir,
                                               double s_max, const DetectOptions& opt = {});

// t of the k-th conjugate event counted with multiplicity, or infinity.
ExtendedTime lambda_k(const RayFamily& family, const Vec& z, int k, double t_cap, const DetectOptions& opt = {});
ExtendedTime lambda_k_line(const LagrangianMap& map, const Vec& x0, const Vec& dir, int k, double s_max,
                           const DetectOptions& opt = {});

struct LambdaProfile {
  int k = 1;
  std::vector<Vec> z;
  std::vector<ExtendedTime> values;
  // Grid shape; shape[1] == 1 for a one-parameter family.
  int shape[2] = {0, 1};
  bool periodic = false;
  double period = 2 * kPi;
};

LambdaProfile lambda_profile(const RayFamily& family, const std::vector<Vec>& zs, int k, double t_cap,
                             const DetectOptions& opt = {}, int threads = 0);
// Rays x0(z) + s dir of a model map, x0 given per grid node.
LambdaProfile lambda_profile_lines(const LagrangianMap& map, const std::vector<Vec>& zs, const std::vector<Vec>& x0,
                                   const Vec& dir, int k, double s_max, const DetectOptions& opt = {});

// Largest difference quotient between adjacent finite nodes.
double lipschitz_estimate(const LambdaProfile& profile);

struct ClassifyOptions {
  double radius = 0.05;          // half-width of the local fit
  int samples = 41;              // conjugate points used in the fit (30-80)
  double transversal_tol = 1e-3; // |<k, n>| above this is transversal
  double significance = 1e-4;    // contact terms below this (relative to the fit radius) are absent
  double f_ratio = 10.0;
  double residual_tol = 1e-3;    // rms fit residual relative to the fit radius
};

// Residual-based classification against A2, A3, A4 and D4 normal forms.
SingularityClass classify_singularity(const LagrangianMap& map, const ConjugateEvent& event,
                                      const ClassifyOptions& opt = {});
SingularityClass classify_singularity(std::shared_ptr<const RayFamily> family, const ConjugateEvent& event,
                                      const ClassifyOptions& opt = {});

// Orthonormal kernel of dF at x (singular values below rank_tol * |dF|).
Mat kernel_of(const Mat& jac, double rank_tol = 1e-7);

nlohmann::json event_to_json(const ConjugateEvent& e);

}  // namespace cutlocus
