#include "cutlocus/geodesic_flow.hpp"
#include "cutlocus/manifolds.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cutlocus;

TEST(Ode, Dp45SolvesHarmonicOscillator) {
  OdeRhs rhs = [](double, const VecX& y, VecX& dy) {
    dy.resize(2);
    dy << y[1], -y[0];
  };
  VecX y0(2);
  y0 << 1, 0;
  const OdeResult r = integrate_dp45(rhs, 0.0, y0, 10.0, OdeOptions{});
  EXPECT_NEAR(r.trajectory.y.back()[0], std::cos(10.0), 1e-8);
  EXPECT_NEAR(r.trajectory.eval(3.3)[0], std::cos(3.3), 1e-6);
}

TEST(Ode, EventStopsIntegration) {
  OdeRhs rhs = [](double, const VecX&, VecX& dy) { dy = VecX::Ones(1); };
  const OdeResult r = integrate_dp45(rhs, 0.0, VecX::Zero(1), 5.0, OdeOptions{},
                                     [](double, const VecX& y) { return 1.5 - y[0]; });
  ASSERT_TRUE(r.event_triggered);
  EXPECT_NEAR(r.event_time, 1.5, 1e-9);
}

TEST(Geodesics, StraightInThePlane) {
  auto plane = FlatDomain::plane();
  const auto tr = integrate_geodesic(*plane, {vec2(0, 0), vec2(0.6, 0.8), 0.0}, 2.0);
  EXPECT_NEAR((tr.at(2.0).position - vec2(1.2, 1.6)).norm(), 0.0, 1e-10);
}

TEST(Geodesics, GreatCircleOnTheSphere) {
  auto s = QuadricSurface::sphere();
  const auto tr = integrate_geodesic(*s, {vec3(1, 0, 0), vec3(0, 1, 0), 0.0}, 2.5);
  EXPECT_NEAR((tr.at(2.5).position - vec3(std::cos(2.5), std::sin(2.5), 0)).norm(), 0.0, 1e-8);
}

TEST(Geodesics, EllipsoidGeodesicStaysOnTheSurface) {
  auto e = QuadricSurface::ellipsoid(1, 1.2, 1.5);
  const Vec p = e->project(vec3(1, 0.2, 0.1));
  const Vec v = e->tangent_basis(p).col(0);
  const auto tr = integrate_geodesic(*e, {p, v, 0.0}, 5.0);
  for (double t : {1.0, 3.0, 5.0}) {
    const auto st = tr.at(t);
    const Vec x = st.position;
    EXPECT_NEAR(x[0] * x[0] + x[1] * x[1] / 1.44 + x[2] * x[2] / 2.25, 1.0, 1e-7);
    EXPECT_NEAR(st.velocity.norm(), 1.0, 1e-7);
  }
}

TEST(Geodesics, AnnulusRayLeavesThroughTheOuterCircle) {
  auto ann = FlatDomain::annulus(vec2(0, 0), 1.0, 2.0);
  const auto tr = integrate_geodesic(*ann, {vec2(1.5, 0), vec2(0, 1), 0.0}, 5.0);
  ASSERT_TRUE(tr.exited);
  EXPECT_NEAR(tr.exit_time, std::sqrt(4 - 2.25), 1e-8);
}

TEST(Characteristics, FieldMatchesBoundaryDerivative) {
  auto disk = FlatDomain::disk(vec2(0, 0), 1.0);
  auto dg = [](double s) { return 0.1 * std::cos(s); };
  const auto X = characteristic_field(disk, disk->boundary()[0], dg);
  for (double s : {0.0, 0.9, 2.0, 4.4}) {
    const Vec x = X(s);
    EXPECT_NEAR(x.norm(), 1.0, 1e-10);
    // unit tangent T = (-sin, cos): <X, T> = dg/ds for the unit circle, inward component positive
    EXPECT_NEAR(x.dot(vec2(-std::sin(s), std::cos(s))), dg(s), 1e-8);
    EXPECT_LT(x.dot(vec2(std::cos(s), std::sin(s))), 0.0);
    EXPECT_LT(X.residual(s), 1e-8);
  }
}

TEST(Jacobi, SphereDeterminantFollowsSine) {
  auto s = QuadricSurface::sphere();
  PointRayFamily fam(s, vec3(0, 0, 1));
  const Ray r = trace_ray(fam, Vec::Constant(1, 0.3), 4.0);
  const double c = r.det(1.0) / std::sin(1.0);
  for (double t : {0.5, 2.0, 3.0}) EXPECT_NEAR(r.det(t), c * std::sin(t), 1e-7);
  EXPECT_NEAR(r.det(kPi), 0.0, 1e-7);
}

TEST(Jacobi, BoundaryRaysOfTheDiskFocusAtTheCentre) {
  auto disk = FlatDomain::disk(vec2(0, 0), 1.0);
  BoundaryRayFamily fam(disk, disk->boundary()[0], nullptr);
  const Ray r = trace_ray(fam, Vec::Constant(1, 0.7), 0.999);
  // dF(d/ds) = (1 - t) T for inward normal rays from the unit circle
  for (double t : {0.2, 0.5, 0.9}) EXPECT_NEAR(std::abs(r.det(t)), 1.0 - t, 1e-8);
}

TEST(Jacobi, SweepIsDeterministicAcrossThreadCounts) {
  auto s = QuadricSurface::ellipsoid(1, 1, 1.3);
  PointRayFamily fam(s, vec3(1, 0, 0));
  std::vector<Vec> zs;
  for (int i = 0; i < 12; ++i) zs.push_back(Vec::Constant(1, 0.5 * i));
  const auto a = sweep_rays(fam, zs, 2.0, {}, 1), b = sweep_rays(fam, zs, 2.0, {}, 3);
  for (size_t i = 0; i < zs.size(); ++i) EXPECT_EQ(a[i].position(1.7), b[i].position(1.7));
}
