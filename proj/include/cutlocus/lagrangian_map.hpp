#pragma once

#include "cutlocus/geodesic_flow.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace cutlocus {

// A map e: V -> M together with a radius function R and radial field r on V.
// Exponential maps (x = (t, z), R = t, r = d/dt) and the canonical singularity
// models both implement this interface.
class LagrangianMap {
 public:
  virtual ~LagrangianMap() = default;

  virtual int dim() const = 0;
  virtual Vec eval(const Vec& x) const = 0;
  // Square Jacobian in an orthonormal frame of the target.
  virtual Mat jacobian(const Vec& x) const = 0;
  virtual double radius(const Vec& x) const = 0;
  virtual Vec radius_gradient(const Vec& x) const;
  virtual Vec radial(const Vec& x) const;
  virtual bool in_domain(const Vec& x) const { (void)x; return true; }
  // Length element of e along v: sqrt(dR(v)^2 + |de(v - dR(v) r)|^2).
  virtual double image_speed(const Vec& x, const Vec& v) const;
  virtual double image_distance(const Vec& a, const Vec& b) const { return (a - b).norm(); }
  // Length scale used for finite differences.
  virtual double fd_step() const { return 1e-5; }

  double det(const Vec& x) const { return jacobian(x).determinant(); }
  Vec det_gradient(const Vec& x) const;
  Mat det_hessian(const Vec& x) const;
};

// The exponential map of a ray family, with rays cached per z.
class RayFamilyMap : public LagrangianMap {
 public:
  RayFamilyMap(std::shared_ptr<const RayFamily> family, double t_horizon, double tol = 1e-11);

  int dim() const override { return family_->manifold().dim(); }
  Vec eval(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  double radius(const Vec& x) const override { return x[0]; }
  Vec radius_gradient(const Vec& x) const override;
  Vec radial(const Vec& x) const override;
  bool in_domain(const Vec& x) const override;
  double image_speed(const Vec& x, const Vec& v) const override;
  double fd_step() const override { return 1e-4; }

  const RayFamily& family() const { return *family_; }
  std::shared_ptr<const Ray> ray(const Vec& z) const;
  static Vec to_x(double t, const Vec& z);

 private:
  std::shared_ptr<const RayFamily> family_;
  double horizon_;
  double tol_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<double>, std::shared_ptr<const Ray>> cache_;
};

}  // namespace cutlocus
