#pragma once

#include "cutlocus/types.hpp"

#include <functional>
#include <vector>

namespace cutlocus {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_initial = 0.0;  // 0 selects a starting step automatically
  double h_max = kInf;
  double h_min = 1e-13;
  int max_steps = 500000;
};

using OdeRhs = std::function<void(double t, const VecX& y, VecX& dy)>;
// Integration stops when the event function becomes negative.
using OdeEvent = std::function<double(double t, const VecX& y)>;

// Accepted nodes with cubic Hermite interpolation in between.
struct DenseTrajectory {
  std::vector<double> t;
  std::vector<VecX> y;
  std::vector<VecX> dy;

  bool empty() const { return t.empty(); }
  double t_begin() const { return t.front(); }
  double t_end() const { return t.back(); }
  // Index k of the node interval [t_k, t_{k+1}] containing time s.
  size_t segment(double s) const;
  VecX eval(double s) const;
};

struct OdeResult {
  DenseTrajectory trajectory;
  bool event_triggered = false;
  double event_time = 0.0;
  int rejected_steps = 0;
};

// Dormand-Prince 5(4) with error control on max(|y|) scaled by atol + rtol |y|.
// Integrates forward or backward depending on the sign of t1 - t0. Throws
// NumericalError when the step size underflows.
OdeResult integrate_dp45(const OdeRhs& rhs, double t0, const VecX& y0, double t1, const OdeOptions& opt,
                         const OdeEvent& event = {});

// One Dormand-Prince step of size h starting from (t, y) with derivative dy.
VecX dp45_step(const OdeRhs& rhs, double t, const VecX& y, const VecX& dy, double h);

}  // namespace cutlocus
