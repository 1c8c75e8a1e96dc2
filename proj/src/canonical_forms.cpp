#include "cutlocus/canonical_forms.hpp"

#include <cmath>

namespace cutlocus {

std::string to_string(CanonicalForm f) {
  switch (f) {
    case CanonicalForm::A2: return "A2";
    case CanonicalForm::A3: return "A3";
    case CanonicalForm::A4: return "A4";
    case CanonicalForm::D4_minus: return "D4_minus";
    case CanonicalForm::D4_plus: return "D4_plus";
  }
  return "A2";
}

CanonicalForm canonical_form_from_string(const std::string& s) {
  if (s == "A2") return CanonicalForm::A2;
  if (s == "A3") return CanonicalForm::A3;
  if (s == "A4") return CanonicalForm::A4;
  if (s == "D4_minus") return CanonicalForm::D4_minus;
  if (s == "D4_plus") return CanonicalForm::D4_plus;
  throw ConfigError("unknown canonical form '" + s + "'");
}

ModelMap::ModelMap(CanonicalForm form, ModelOptions opt) : form_(form), opt_(std::move(opt)) {
  const int min_dim = (form == CanonicalForm::A2 || form == CanonicalForm::A3) ? 2 : 3;
  n_ = opt_.dim == 0 ? min_dim : opt_.dim;
  if (n_ < min_dim || n_ > 3) throw ConfigError("model dimension out of range for " + to_string(form));
  if (opt_.radial.size() == 0) {
    r0_ = Vec::Zero(n_);
    switch (form) {
      case CanonicalForm::A2:
      case CanonicalForm::A3: r0_[1] = 1.0; break;
      case CanonicalForm::A4:
      case CanonicalForm::D4_minus: r0_[2] = 1.0; break;
      case CanonicalForm::D4_plus: r0_ << 2.0, 2.0, 1.0; break;
    }
  } else {
    if (opt_.radial.size() != n_) throw ConfigError("radial vector has the wrong dimension");
    r0_ = opt_.radial;
  }
  if (r0_.norm() == 0.0) throw ConfigError("radial vector must be nonzero");
  // Kernel of de at the origin: x1 for the A series, x1 and x2 for D4.
  const int kernel_dim = (form == CanonicalForm::D4_minus || form == CanonicalForm::D4_plus) ? 2 : 1;
  nu_ = r0_;
  nu_.head(kernel_dim).setZero();
  const double s = nu_.dot(r0_);
  if (std::abs(s) < 1e-12 * r0_.squaredNorm()) throw ConfigError("radial vector lies in the kernel of de at the origin");
  nu_ /= s;
}

Vec ModelMap::source(const Vec& x) const {
  if (opt_.perturbation == 0.0) return x;
  Vec y = x;
  for (int i = 0; i < n_; ++i) {
    const int j = (i + 1) % n_;
    y[i] += opt_.perturbation * (x[j] * x[j] + 0.5 * x[i] * x[j]);
  }
  return y;
}

Mat ModelMap::source_jacobian(const Vec& x) const {
  Mat d = Mat::Identity(n_, n_);
  if (opt_.perturbation == 0.0) return d;
  for (int i = 0; i < n_; ++i) {
    const int j = (i + 1) % n_;
    d(i, j) += opt_.perturbation * (2 * x[j] + 0.5 * x[i]);
    d(i, i) += opt_.perturbation * 0.5 * x[j];
  }
  return d;
}

Vec ModelMap::raw_eval(const Vec& y) const {
  Vec e = y;
  switch (form_) {
    case CanonicalForm::A2:
      e[0] = y[0] * y[0];
      break;
    case CanonicalForm::A3:
      e[0] = y[0] * y[0] * y[0] + opt_.a3_sign * y[0] * y[1];
      break;
    case CanonicalForm::A4:
      e[0] = std::pow(y[0], 4) + y[0] * y[0] * y[1] + y[0] * y[2];
      break;
    case CanonicalForm::D4_minus:
      e[0] = 0.5 * y[0] * y[0] - 0.5 * y[1] * y[1] + y[0] * y[2];
      e[1] = -y[0] * y[1] + y[1] * y[2];
      break;
    case CanonicalForm::D4_plus:
      e[0] = 0.5 * y[0] * y[0] + y[1] * y[2];
      e[1] = 0.5 * y[1] * y[1] + y[0] * y[2];
      break;
  }
  return e;
}

Mat ModelMap::raw_jacobian(const Vec& y) const {
  Mat d = Mat::Identity(n_, n_);
  switch (form_) {
    case CanonicalForm::A2:
      d(0, 0) = 2 * y[0];
      break;
    case CanonicalForm::A3:
      d(0, 0) = 3 * y[0] * y[0] + opt_.a3_sign * y[1];
      d(0, 1) = opt_.a3_sign * y[0];
      break;
    case CanonicalForm::A4:
      d(0, 0) = 4 * std::pow(y[0], 3) + 2 * y[0] * y[1] + y[2];
      d(0, 1) = y[0] * y[0];
      d(0, 2) = y[0];
      break;
    case CanonicalForm::D4_minus:
      d(0, 0) = y[0] + y[2]; d(0, 1) = -y[1]; d(0, 2) = y[0];
      d(1, 0) = -y[1]; d(1, 1) = -y[0] + y[2]; d(1, 2) = y[1];
      break;
    case CanonicalForm::D4_plus:
      d(0, 0) = y[0]; d(0, 1) = y[2]; d(0, 2) = y[1];
      d(1, 0) = y[2]; d(1, 1) = y[1]; d(1, 2) = y[0];
      break;
  }
  return d;
}

Vec ModelMap::eval(const Vec& x) const { return raw_eval(source(x)); }

Mat ModelMap::jacobian(const Vec& x) const { return raw_jacobian(source(x)) * source_jacobian(x); }

double ModelMap::radius(const Vec& x) const {
  const double d = det(x);
  return nu_.dot(x) - opt_.bend * d * d;
}

Vec ModelMap::radius_gradient(const Vec& x) const {
  const double d = det(x);
  if (opt_.bend == 0.0 || d == 0.0) return nu_;
  return nu_ - 2 * opt_.bend * d * det_gradient(x);
}

bool ModelMap::in_domain(const Vec& x) const { return x.cwiseAbs().maxCoeff() <= opt_.patch; }

std::shared_ptr<ModelMap> canonical_form_map(CanonicalForm form, ModelOptions opt) {
  return std::make_shared<ModelMap>(form, std::move(opt));
}

}  // namespace cutlocus
