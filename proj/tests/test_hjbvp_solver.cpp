#include "cutlocus/hjbvp_solver.hpp"
#include "cutlocus/manifolds.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cutlocus;

namespace {

std::shared_ptr<HJProblem> annulus_problem(std::vector<double> a = {0.0, 0.0}) {
  return HJProblem::boundary(FlatDomain::annulus(vec2(0, 0), 1.0, 2.0), BoundaryData::constants(a));
}

// Nearest bisector of 0 and a lattice translate along direction th.
double lattice_cut(double th) {
  const double u0 = std::cos(th), u1 = std::sin(th);
  double best = kInf;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const double ku = i * u0 + j * u1;
      if ((i || j) && ku > 1e-12) best = std::min(best, (i * i + j * j) / (2 * ku));
    }
  return best;
}

}  // namespace

TEST(Value, AnnulusIsDistanceToTheNearerCircle) {
  auto pb = annulus_problem();
  for (double r : {1.1, 1.4, 1.6, 1.95}) {
    const Vec p = vec2(r * std::cos(0.7), r * std::sin(0.7));
    EXPECT_NEAR(pb->value(p), std::min(r - 1, 2 - r), 1e-9) << r;
  }
  EXPECT_EQ(pb->minimizers(vec2(0, 1.5)).size(), 2u);
  EXPECT_EQ(pb->minimizers(vec2(0, 1.3)).size(), 1u);
}

TEST(Value, OffsetsShiftTheSplitRadius) {
  auto pb = annulus_problem({0.3, 0.0});
  // (r - 1) + 0.3 = 2 - r at r = 1.35
  EXPECT_EQ(pb->minimizers(vec2(1.35, 0)).size(), 2u);
  EXPECT_NEAR(pb->value(vec2(1.2, 0)), 0.5, 1e-9);
}

TEST(Value, MinimizerArrivesAlongTheRay) {
  auto pb = annulus_problem();
  const auto m = pb->minimizers(vec2(0, 1.2));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_NEAR((m[0].arrival - vec2(0, 1)).norm(), 0.0, 1e-7);
  EXPECT_NEAR(m[0].length, 0.2, 1e-9);
}

TEST(Compatibility, SteepDataAreRejected) {
  auto disk = FlatDomain::disk(vec2(0, 0), 1.0);
  BoundaryData g = BoundaryData::zero(1);
  g.g[0] = [](double s) { return 1.5 * std::sin(s); };
  EXPECT_FALSE(check_compatibility(*disk, g).ok);
  g.g[0] = [](double s) { return 0.5 * std::sin(s); };
  EXPECT_TRUE(check_compatibility(*disk, g).ok);
  auto ann = FlatDomain::annulus(vec2(0, 0), 1.0, 2.0);
  EXPECT_FALSE(check_compatibility(*ann, BoundaryData::constants({1.2, 0.0})).ok);
}

TEST(LaxOleinik, CoarseAnnulusGrid) {
  auto pb = annulus_problem();
  const auto sol = lax_oleinik_solve(*pb, 33, 33);
  int inside = 0;
  for (const auto& s : sol.samples) {
    if (!s.inside) continue;
    ++inside;
    const double r = s.p.norm();
    EXPECT_NEAR(s.u, std::min(r - 1, 2 - r), 1e-9);
  }
  EXPECT_GT(inside, 300);
  const auto S = singular_set_extract(*pb, sol);
  ASSERT_FALSE(S.points.empty());
  for (const auto& p : S.points) EXPECT_NEAR(p.p.norm(), 1.5, 2 * 4.0 / 32);
}

TEST(CutTime, FlatTorusMatchesTheLattice) {
  auto pb = HJProblem::point_source(std::make_shared<FlatTorus>(vec2(1, 1)), vec2(0, 0));
  for (double th : {0.0, 0.3, kPi / 4, 2.0, 4.0}) {
    const CutRecord r = cut_time(*pb, -1, Vec::Constant(1, th));
    EXPECT_NEAR(r.t_cut.value, lattice_cut(th), 1e-7) << th;
    EXPECT_EQ(r.reason, CutReason::multiple_minimizers);
    EXPECT_TRUE(r.lambda1.is_inf());
  }
}

TEST(CutTime, SphereIsConjugateAtPi) {
  auto pb = HJProblem::point_source(QuadricSurface::sphere(), vec3(0, 0, 1));
  const CutRecord r = cut_time(*pb, -1, Vec::Constant(1, 0.4));
  EXPECT_NEAR(r.t_cut.value, kPi, 1e-7);
  EXPECT_NEAR(r.lambda1.value, kPi, 1e-9);
}

TEST(CutTime, AnnulusBoundaryRays) {
  auto pb = annulus_problem({0.3, 0.0});
  EXPECT_NEAR(cut_time(*pb, 0, Vec::Constant(1, 1.0)).t_cut.value, 0.35, 1e-7);
  EXPECT_NEAR(cut_time(*pb, 1, Vec::Constant(1, 1.0)).t_cut.value, 0.65, 1e-7);
}

TEST(Characteristics, ValuesAlongRays) {
  auto pb = annulus_problem();
  const auto cs = characteristics_solution(*pb, 16, 8, 1.0);
  ASSERT_FALSE(cs.empty());
  for (const auto& c : cs) {
    EXPECT_LE(c.t, 0.5 + 1e-9);
    EXPECT_NEAR(c.u, pb->value(c.p), 1e-8);
  }
}

TEST(Rho, FirstHitOfAConcentricCircle) {
  auto pb = annulus_problem();
  std::vector<Vec> pts;
  for (int i = 0; i < 512; ++i) pts.push_back(vec2(1.5 * std::cos(2 * kPi * i / 512), 1.5 * std::sin(2 * kPi * i / 512)));
  PointCloud S(pts, 0.02);
  EXPECT_NEAR(S.distance(vec2(1.51, 0)), 0.01, 1e-12);
  // queries only look within the proximity radius
  EXPECT_TRUE(std::isinf(S.distance(vec2(1.0, 0))));
  const ExtendedTime r = rho_S(*pb, 0, Vec::Constant(1, 0.2), S);
  EXPECT_NEAR(r.value, 0.5, 1e-7);
}

TEST(Reduction, DiskWithSineData) {
  auto disk = FlatDomain::disk(vec2(0, 0), 1.0);
  BoundaryData g = BoundaryData::zero(1);
  g.g[0] = [](double s) { return 0.1 * std::sin(s); };
  auto pb = HJProblem::boundary(disk, g);
  const Reduction red = extend_and_reduce(*pb, 256, 24);
  EXPECT_NEAR(red.depth, 1.1 * 0.2, 1e-9);
  EXPECT_LT(red.identity_error, 5e-4);
}

TEST(Semiconcavity, DistanceToTheBoundaryOfTheDisk) {
  auto disk = FlatDomain::disk(vec2(0, 0), 1.0);
  auto pb = HJProblem::boundary(disk, BoundaryData::zero(1));
  const auto rep = semiconcavity_check([&](const Vec& p) { return pb->value(p); },
                                       {{vec2(-0.5, 0.1), vec2(0.5, 0.1)}, {vec2(0, -0.6), vec2(0.1, 0.6)}});
  // 1 - |p| is concave: no positive defect
  EXPECT_LE(rep.max_defect, 1e-12);
}

TEST(Polyline, DistanceToASquare) {
  auto plane = FlatDomain::plane();
  const std::vector<Vec> sq = {vec2(0, 0), vec2(1, 0), vec2(1, 1), vec2(0, 1)};
  EXPECT_NEAR(distance_to_polyline(*plane, sq, true, vec2(0.5, 0.4)), 0.4, 1e-12);
  EXPECT_NEAR(distance_to_polyline(*plane, sq, true, vec2(-0.3, 0.5)), 0.3, 1e-12);
  EXPECT_NEAR(distance_to_polyline(*plane, sq, false, vec2(-0.3, 0.5)), std::sqrt(0.34), 1e-12);
}
