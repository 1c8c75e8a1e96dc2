#pragma once

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <utility>

namespace cutlocus {

// Root of f in [a, b] given values of opposite sign at the ends.
template <class F>
double bracketed_root(F&& f, double a, double b, double fa, double fb, double xtol = 1e-14) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  std::uintmax_t iters = 200;
  auto tol = [xtol](double lo, double hi) { return std::abs(hi - lo) <= xtol * (1.0 + std::abs(lo)); };
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

// Local minimum of f on [a, b] (Brent), returns (x, f(x)).
template <class F>
std::pair<double, double> local_minimum(F&& f, double a, double b, int bits = 40) {
  std::uintmax_t iters = 200;
  return boost::math::tools::brent_find_minima(f, a, b, bits, iters);
}

}  // namespace cutlocus
