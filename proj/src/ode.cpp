#include "cutlocus/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cutlocus {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Stage {
  VecX k2, k3, k4, k5, k6, k7, tmp;
};

// Returns the 5th-order solution in y_new and the error estimate in err.
void dp_stages(const OdeRhs& rhs, double t, const VecX& y, const VecX& k1, double h, Stage& s, VecX& y_new,
               VecX& err) {
  const auto n = y.size();
  s.k2.resize(n); s.k3.resize(n); s.k4.resize(n); s.k5.resize(n); s.k6.resize(n); s.k7.resize(n);
  s.tmp = y + h * a21 * k1;
  rhs(t + c2 * h, s.tmp, s.k2);
  s.tmp = y + h * (a31 * k1 + a32 * s.k2);
  rhs(t + c3 * h, s.tmp, s.k3);
  s.tmp = y + h * (a41 * k1 + a42 * s.k2 + a43 * s.k3);
  rhs(t + c4 * h, s.tmp, s.k4);
  s.tmp = y + h * (a51 * k1 + a52 * s.k2 + a53 * s.k3 + a54 * s.k4);
  rhs(t + c5 * h, s.tmp, s.k5);
  s.tmp = y + h * (a61 * k1 + a62 * s.k2 + a63 * s.k3 + a64 * s.k4 + a65 * s.k5);
  rhs(t + h, s.tmp, s.k6);
  y_new = y + h * (b1 * k1 + b3 * s.k3 + b4 * s.k4 + b5 * s.k5 + b6 * s.k6);
  rhs(t + h, y_new, s.k7);
  err = h * (e1 * k1 + e3 * s.k3 + e4 * s.k4 + e5 * s.k5 + e6 * s.k6 + e7 * s.k7);
}

double error_norm(const VecX& err, const VecX& y0, const VecX& y1, const OdeOptions& opt) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    m = std::max(m, std::abs(err[i]) / sc);
  }
  return m;
}

double initial_step(const OdeRhs& rhs, double t0, const VecX& y0, const VecX& f0, double dir, const OdeOptions& opt) {
  VecX sc = (opt.atol + opt.rtol * y0.array().abs()).matrix();
  const double d0 = (y0.array() / sc.array()).matrix().norm() / std::sqrt(double(y0.size()));
  const double d1 = (f0.array() / sc.array()).matrix().norm() / std::sqrt(double(y0.size()));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  VecX y1 = y0 + dir * h0 * f0, f1(y0.size());
  rhs(t0 + dir * h0, y1, f1);
  const double d2 = ((f1 - f0).array() / sc.array()).matrix().norm() / std::sqrt(double(y0.size())) / h0;
  const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min({100 * h0, h1, opt.h_max});
}

}  // namespace

size_t DenseTrajectory::segment(double s) const {
  const bool forward = t.back() >= t.front();
  size_t k;
  if (forward) {
    k = static_cast<size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin());
  } else {
    k = static_cast<size_t>(std::upper_bound(t.begin(), t.end(), s, std::greater<double>()) - t.begin());
  }
  if (k == 0) return 0;
  return std::min(k - 1, t.size() >= 2 ? t.size() - 2 : 0);
}

VecX DenseTrajectory::eval(double s) const {
  if (t.size() == 1) return y.front();
  const size_t k = segment(s);
  const double h = t[k + 1] - t[k];
  const double th = (s - t[k]) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1, h10 = th3 - 2 * th2 + th;
  const double h01 = -2 * th3 + 3 * th2, h11 = th3 - th2;
  return h00 * y[k] + h10 * h * dy[k] + h01 * y[k + 1] + h11 * h * dy[k + 1];
}

VecX dp45_step(const OdeRhs& rhs, double t, const VecX& y, const VecX& dy, double h) {
  if (h == 0.0) return y;
  Stage s;
  VecX y_new, err;
  dp_stages(rhs, t, y, dy, h, s, y_new, err);
  return y_new;
}

OdeResult integrate_dp45(const OdeRhs& rhs, double t0, const VecX& y0, double t1, const OdeOptions& opt,
                         const OdeEvent& event) {
  OdeResult res;
  auto& tr = res.trajectory;
  VecX f0(y0.size());
  rhs(t0, y0, f0);
  tr.t.push_back(t0);
  tr.y.push_back(y0);
  tr.dy.push_back(f0);
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  double h = opt.h_initial > 0 ? opt.h_initial : initial_step(rhs, t0, y0, f0, dir, opt);
  double t = t0;
  VecX y = y0, f = f0, y_new, err;
  Stage st;
  int steps = 0;
  while (dir * (t1 - t) > 0) {
    if (++steps > opt.max_steps) {
      std::ostringstream d;
      d << "{\"reason\":\"max_steps\",\"t\":" << t << "}";
      throw NumericalError("ODE integration exceeded the step budget", d.str());
    }
    h = std::min(h, opt.h_max);
    bool last = false;
    if (dir * (t + dir * h - t1) >= 0) {
      h = dir * (t1 - t);
      last = true;
    }
    dp_stages(rhs, t, y, f, dir * h, st, y_new, err);
    const double en = error_norm(err, y, y_new, opt);
    if (!std::isfinite(en)) {
      h *= 0.25;
      ++res.rejected_steps;
      if (h < opt.h_min) {
        std::ostringstream d;
        d << "{\"reason\":\"non_finite_state\",\"t\":" << t << "}";
        throw NumericalError("ODE right-hand side produced a non-finite value", d.str());
      }
      continue;
    }
    if (en <= 1.0) {
      const double t_new = last ? t1 : t + dir * h;
      if (event && event(t_new, y_new) < 0) {
        // Locate the crossing by bisection on exact re-steps from the last node.
        double lo = 0.0, hi = dir * (t_new - t);
        for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(t)); ++it) {
          const double mid = 0.5 * (lo + hi);
          const VecX ym = dp45_step(rhs, t, y, f, dir * mid);
          if (event(t + dir * mid, ym) < 0) hi = mid;
          else lo = mid;
        }
        const double te = t + dir * hi;
        const VecX ye = dp45_step(rhs, t, y, f, dir * hi);
        VecX fe(ye.size());
        rhs(te, ye, fe);
        tr.t.push_back(te);
        tr.y.push_back(ye);
        tr.dy.push_back(fe);
        res.event_triggered = true;
        res.event_time = te;
        return res;
      }
      t = t_new;
      y = y_new;
      f = st.k7;
      tr.t.push_back(t);
      tr.y.push_back(y);
      tr.dy.push_back(f);
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (!last) h *= fac;
    } else {
      ++res.rejected_steps;
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      if (h < opt.h_min * (1.0 + std::abs(t))) {
        std::ostringstream d;
        d << "{\"reason\":\"step_underflow\",\"t\":" << t << ",\"h\":" << h << "}";
        throw NumericalError("ODE step size underflow", d.str());
      }
    }
  }
  return res;
}

}  // namespace cutlocus
