#pragma once

#include "cutlocus/lagrangian_map.hpp"

#include <string>

namespace cutlocus {

enum class CanonicalForm { A2, A3, A4, D4_minus, D4_plus };

std::string to_string(CanonicalForm f);
CanonicalForm canonical_form_from_string(const std::string& s);

struct ModelOptions {
  int dim = 0;          // 0 picks the smallest dimension carrying the form
  int a3_sign = -1;     // e_1 = x1^3 + a3_sign * x1 x2
  Vec radial;           // radial vector at the origin; empty picks the form's default
  double bend = 0.25;   // R = <nu, x> - bend * det(de)^2 with nu(kernel at 0) = 0, nu(radial) = 1
  double perturbation = 0.0;  // amplitude of a near-identity reparametrization of the source
  double patch = 1.0;   // domain |x|_inf <= patch
};

// Polynomial normal form e with analytic Jacobian, a constant radial field r
// and a radius R with dR(r) = 1 on the conjugate set whose level sets contain
// the kernel of de at the origin.
class ModelMap : public LagrangianMap {
 public:
  ModelMap(CanonicalForm form, ModelOptions opt);

  int dim() const override { return n_; }
  Vec eval(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  double radius(const Vec& x) const override;
  Vec radius_gradient(const Vec& x) const override;
  bool in_domain(const Vec& x) const override;
  Vec radial(const Vec& x) const override { (void)x; return r0_; }
  double fd_step() const override { return 1e-6; }

  CanonicalForm form() const { return form_; }
  const ModelOptions& options() const { return opt_; }
  const Vec& radial_at_origin() const { return r0_; }

 private:
  Vec source(const Vec& x) const;
  Mat source_jacobian(const Vec& x) const;
  Vec raw_eval(const Vec& y) const;
  Mat raw_jacobian(const Vec& y) const;

  CanonicalForm form_;
  ModelOptions opt_;
  int n_;
  Vec r0_, nu_;
};

std::shared_ptr<ModelMap> canonical_form_map(CanonicalForm form, ModelOptions opt = {});

}  // namespace cutlocus
