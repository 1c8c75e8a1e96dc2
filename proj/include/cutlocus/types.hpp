#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cutlocus {

// Points and tangent vectors live in at most three coordinates.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the domain of an operation (zero vector, p == q, point outside M).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Boundary data violating |g(p) - g(q)| < d(p, q).
class CompatibilityError : public Error {
 public:
  CompatibilityError(const std::string& msg, double k) : Error(msg), constant(k) {}
  double constant;
};

// Solver breakdown; carries a JSON diagnostic string.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& msg, std::string diag = "{}")
      : Error(msg), diagnostic(std::move(diag)) {}
  std::string diagnostic;
};

// Nonnegative time that may be infinite; serialized with an explicit tag.
struct ExtendedTime {
  double value = 0.0;
  bool finite = true;

  static ExtendedTime infinite() { return {kInf, false}; }
  static ExtendedTime of(double v) { return {v, true}; }
  bool is_inf() const { return !finite; }
};

inline double wrap_angle(double a) {
  a = std::fmod(a, 2 * kPi);
  if (a < 0) a += 2 * kPi;
  return a;
}

// Signed difference a - b on a circle of the given period, in (-period/2, period/2].
inline double periodic_diff(double a, double b, double period) {
  double d = std::fmod(a - b, period);
  if (d > period / 2) d -= period;
  if (d <= -period / 2) d += period;
  return d;
}

}  // namespace cutlocus
