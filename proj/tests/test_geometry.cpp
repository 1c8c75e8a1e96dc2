#include "cutlocus/geometry.hpp"
#include "cutlocus/manifolds.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cutlocus;

namespace {

std::shared_ptr<RiemannianMetric> euclid() { return std::make_shared<RiemannianMetric>(Mat::Identity(2, 2)); }

}  // namespace

TEST(Metric, EuclideanNormAndDual) {
  auto plane = FlatDomain::plane(2, euclid());
  const Vec p = vec2(0.3, -0.2), v = vec2(3, 4);
  EXPECT_NEAR(finsler_norm(*plane, p, v), 5.0, 1e-14);
  // phi(v) dphi/dv = v for the Euclidean norm
  const Vec w = dual_one_form(*plane, p, v);
  EXPECT_NEAR((w - v).norm(), 0.0, 1e-12);
  EXPECT_NEAR((vector_from_dual(*plane, p, w) - v).norm(), 0.0, 1e-9);
}

TEST(Metric, RandersIsHomogeneousAndAsymmetric) {
  Vec b = vec2(0.3, 0.1);
  RandersMetric r(Mat::Identity(2, 2), b);
  const Vec p = vec2(0, 0), v = vec2(1, 2);
  EXPECT_NEAR(r.norm(p, 2.5 * v), 2.5 * r.norm(p, v), 1e-13);
  EXPECT_NEAR(r.norm(p, v), std::sqrt(5.0) + 0.5, 1e-13);
  EXPECT_NEAR(r.norm(p, -v), std::sqrt(5.0) - 0.5, 1e-13);
}

TEST(Metric, DualRoundTripRanders) {
  auto m = FlatDomain::plane(2, std::make_shared<RandersMetric>(Mat::Identity(2, 2), vec2(0.2, -0.3)));
  for (double th = 0.1; th < 6.2; th += 0.7) {
    const Vec v = vec2(std::cos(th), std::sin(th));
    const Vec back = vector_from_dual(*m, vec2(0, 0), dual_one_form(*m, vec2(0, 0), v));
    EXPECT_NEAR((back - v).norm(), 0.0, 1e-7) << th;
  }
}

TEST(Metric, ZeroVectorHasNoDual) {
  auto plane = FlatDomain::plane(2, euclid());
  EXPECT_THROW(dual_one_form(*plane, vec2(0, 0), vec2(0, 0)), DomainError);
}

TEST(Metric, ValidationRejectsNonConvexAndNonHomogeneous) {
  FunctionFinslerMetric l_half(2, [](const Vec&, const Vec& v) {
    const double s = std::sqrt(std::abs(v[0])) + std::sqrt(std::abs(v[1]));
    return s * s;
  });
  EXPECT_THROW(validate_metric(l_half, {vec2(0, 0)}), DomainError);
  FunctionFinslerMetric quad(2, [](const Vec&, const Vec& v) { return v.squaredNorm(); });
  EXPECT_THROW(validate_metric(quad, {vec2(0, 0)}), DomainError);
  EXPECT_NO_THROW(validate_metric(*euclid(), {vec2(0, 0), vec2(1, 1)}));
}

TEST(Metric, ArrivalDirectionInThePlane) {
  auto plane = FlatDomain::plane(2, euclid());
  const Vec v = v_p(*plane, vec2(1, 1), vec2(-2, -3));
  EXPECT_NEAR((v - vec2(3, 4) / 5.0).norm(), 0.0, 1e-12);
}

TEST(Manifolds, AnnulusDistanceGoesAroundTheHole) {
  auto ann = FlatDomain::annulus(vec2(0, 0), 1.0, 2.0);
  EXPECT_NEAR(ann->distance(vec2(1.5, 0), vec2(1.5, 0.5)), 0.5, 1e-12);
  // antipodal points on r = 1.5: two tangent segments plus the arc between the tangent points
  const double r = 1.5, a = std::acos(1.0 / r);
  const double expect = 2 * std::sqrt(r * r - 1) + (kPi - 2 * a);
  EXPECT_NEAR(ann->distance(vec2(1.5, 0), vec2(-1.5, 0)), expect, 1e-9);
}

TEST(Manifolds, TorusDistanceUsesTheNearestTranslate) {
  FlatTorus t(vec2(1, 1));
  EXPECT_NEAR(t.distance(vec2(0.05, 0.05), vec2(0.95, 0.95)), std::sqrt(2.0) * 0.1, 1e-12);
  EXPECT_NEAR(t.distance(vec2(0, 0), vec2(0.5, 0.5)), std::sqrt(0.5), 1e-12);
  EXPECT_EQ(t.geodesics_between(vec2(0, 0), vec2(0.5, 0.5), 1e-9).size(), 4u);
  EXPECT_NEAR((t.wrap(vec2(1.25, -0.25)) - vec2(0.25, 0.75)).norm(), 0.0, 1e-15);
}

TEST(Manifolds, EllipsoidProjection) {
  auto e = QuadricSurface::ellipsoid(1, 2, 3);
  const Vec q = e->project(vec3(0.4, -1.1, 2.0));
  EXPECT_NEAR(q[0] * q[0] + q[1] * q[1] / 4 + q[2] * q[2] / 9, 1.0, 1e-12);
  const Mat b = e->tangent_basis(q);
  EXPECT_NEAR((b.transpose() * b - Mat::Identity(2, 2)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((b.transpose() * e->normal(q)).norm(), 0.0, 1e-12);
}

TEST(Manifolds, SphereDistanceOracle) {
  auto s = QuadricSurface::sphere();
  EXPECT_NEAR(s->distance(vec3(0, 0, 1), vec3(1, 0, 0)), kPi / 2, 1e-12);
}

TEST(Manifolds, JsonRejectsUnknownKeys) {
  EXPECT_THROW(manifold_from_json({{"kind", "annulus"}, {"r_inner", 1}, {"r_outr", 2}}), ConfigError);
  EXPECT_THROW(manifold_from_json({{"kind", "klein_bottle"}}), ConfigError);
  auto m = manifold_from_json({{"kind", "annulus"}, {"r_inner", 1}, {"r_outer", 2}});
  EXPECT_EQ(m->boundary().size(), 2u);
  EXPECT_EQ(manifold_to_json(*m)["r_outer"], 2.0);
}

TEST(Manifolds, DiskBoundaryNormalPointsInward) {
  auto d = FlatDomain::disk(vec2(0, 0), 1.0);
  const auto& b = d->boundary().front();
  for (double s : {0.0, 1.0, 4.0}) {
    const Vec p = b.position(s);
    EXPECT_NEAR(p.norm(), 1.0, 1e-14);
    EXPECT_LT(b.inner_normal(s).dot(p), 0.0);
    EXPECT_NEAR(b.tangent(s).dot(p), 0.0, 1e-14);
  }
}
