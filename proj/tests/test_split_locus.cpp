#include "cutlocus/manifolds.hpp"
#include "cutlocus/split_locus.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace cutlocus;

namespace {

std::shared_ptr<ProblemRays> annulus_rays() {
  return std::make_shared<ProblemRays>(
      HJProblem::boundary(FlatDomain::annulus(vec2(0, 0), 1.0, 2.0), BoundaryData::zero(2)));
}

std::vector<Vec> circle(Vec c, double r, int n) {
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i)
    pts.push_back(vec2(c[0] + r * std::cos(2 * kPi * i / n), c[1] + r * std::sin(2 * kPi * i / n)));
  return pts;
}

// |h1 - h2| across an edge of the torus family is |<b, k - k'>| for neighbouring translates.
std::set<long> jump_oracle(const Vec& b) {
  std::set<long> out;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) out.insert(std::lround(1e9 * std::abs(i * b[0] + j * b[1])));
  return out;
}

}  // namespace

TEST(Torus, CrossForZeroOffsets) {
  SplitLocusModel m = build_torus_family(vec2(0, 0), 128);
  const auto counts = classify_points(m);
  EXPECT_EQ(counts.at("CROSSING"), 1);
  EXPECT_EQ(counts.at("REMAINDER"), 0);
  for (const auto& s : m.samples) {
    const double dx = std::abs(s.p[0] - 0.5), dy = std::abs(s.p[1] - 0.5);
    EXPECT_LT(std::min(dx, dy), 1e-9);
    if (s.cls == PointClass::CROSSING) EXPECT_EQ(s.r_count(), 4);
  }
}

TEST(Torus, CleaveSamplesLieOnHyperbolas) {
  SplitLocusModel m = build_torus_family(vec2(0.1, 0.07), 256);
  classify_points(m);
  EXPECT_LT(hyperbola_residual(m), 1e-9);
  EXPECT_GT(m.multi_fraction(), 0.99);
}

TEST(Torus, JumpsAreLatticeOffsets) {
  const Vec b = vec2(0.1, 0.07);
  SplitLocusModel m = build_torus_family(b, 256);
  classify_points(m);
  const auto oracle = jump_oracle(b);
  const auto stats = h_jump_stats(m);
  ASSERT_FALSE(stats.empty());
  for (const auto& s : stats) {
    if (s.n < 4) continue;
    EXPECT_LT(s.stddev, 1e-6);
    EXPECT_TRUE(oracle.count(std::lround(1e9 * std::abs(s.mean))) ||
                oracle.count(std::lround(1e9 * std::abs(s.mean)) + 1) ||
                oracle.count(std::lround(1e9 * std::abs(s.mean)) - 1))
        << s.mean;
  }
}

TEST(Torus, GenericOffsetsGiveTrivalentVertices) {
  SplitLocusModel m = build_torus_family(vec2(0.1, 0.07), 256);
  const auto counts = classify_points(m);
  EXPECT_EQ(counts.at("CROSSING"), 2);
  for (const auto& s : m.samples)
    if (s.cls == PointClass::CROSSING) EXPECT_EQ(s.r_count(), 3);
}

TEST(Torus, IncompatibleOffsetsThrow) {
  EXPECT_THROW(build_torus_family(vec2(0.8, 0.8), 64), CompatibilityError);
}

TEST(Splits, AnyCircleBetweenTheBoundariesSplits) {
  auto rays = annulus_rays();
  for (Vec c : {vec2(0, 0), vec2(0.1, 0.05)}) {
    SplitLocusModel m = build_split_locus_from_set(rays, circle(c, 1.5, 256), 2 * kPi * 1.5 / 256);
    const SplitReport r = verify_splits(m, 24);
    EXPECT_TRUE(r.ok()) << c.transpose();
  }
}

TEST(Splits, AnArcDoesNotSplit) {
  auto rays = annulus_rays();
  std::vector<Vec> arc;
  for (const auto& p : circle(vec2(0, 0), 1.5, 256))
    if (std::atan2(p[1], p[0]) > -2.0) arc.push_back(p);
  SplitLocusModel m = build_split_locus_from_set(rays, arc, 2 * kPi * 1.5 / 256);
  EXPECT_FALSE(verify_splits(m, 24).ok());
}

TEST(Balanced, ConcentricPassesOffCentreFails) {
  auto rays = annulus_rays();
  const double h = 2 * kPi * 1.5 / 512;
  SplitLocusModel a = build_split_locus_from_set(rays, circle(vec2(0, 0), 1.5, 512), h);
  SplitLocusModel b = build_split_locus_from_set(rays, circle(vec2(0.1, 0), 1.5, 512), h);
  classify_points(a);
  classify_points(b);
  const BalanceReport ra = verify_balanced(a), rb = verify_balanced(b);
  EXPECT_TRUE(ra.ok);
  EXPECT_LT(ra.worst_defect, 1e-4);
  EXPECT_FALSE(rb.ok);
  // the defect of the shifted circle is of the order of the shift
  EXPECT_GT(rb.worst_defect, 0.05);
}

TEST(Currents, ZeroJumpOnTheCutLocusOfTheTorus) {
  SplitLocusModel m = build_torus_family(vec2(0, 0), 128);
  classify_points(m);
  const double t = current_T_eval(m, [](const Vec& p) { return vec2(1.0 + p[0], std::cos(p[1])); });
  EXPECT_LT(std::abs(t), 1e-12);
}

TEST(Currents, StokesOnAClosedCircle) {
  // Constant jump along a closed component: T(d sigma) telescopes to zero.
  auto ann = FlatDomain::annulus(vec2(0, 0), 1.0, 2.0);
  ConstantsOptions o;
  o.grid = 96;
  SplitLocusModel m = build_split_locus_from_constants(ann, BoundaryData::zero(2), {0.3, 0.0}, o);
  classify_points(m);
  for (const auto& s : h_jump_stats(m))
    if (s.n > 3) EXPECT_NEAR(std::abs(s.mean), 0.3, 1e-9);
  EXPECT_LT(std::abs(boundary_residual(m, [](const Vec& p) { return p[0] * p[1] * p[1]; })), 1e-9);
}

TEST(Currents, CirculationAroundTheRing) {
  auto ann = FlatDomain::annulus(vec2(0, 0), 1.0, 2.0);
  ConstantsOptions o;
  o.grid = 96;
  SplitLocusModel m = build_split_locus_from_constants(ann, BoundaryData::zero(2), {0.3, 0.0}, o);
  classify_points(m);
  EXPECT_LT(std::abs(current_T_eval(m, [](const Vec&) { return vec2(1.0, 0.0); })), 1e-6);
  // the unit rotational field integrates to 2 pi r times the jump
  const double t = current_T_eval(m, [](const Vec& p) { return Vec(vec2(-p[1], p[0]) / p.norm()); });
  EXPECT_NEAR(std::abs(t), 2 * kPi * 1.35 * 0.3, 1e-2);
}

TEST(Export, JsonAndSvg) {
  SplitLocusModel m = build_torus_family(vec2(0, 0), 32);
  classify_points(m);
  const auto j = model_to_json(m);
  EXPECT_EQ(j["family"], "torus");
  EXPECT_EQ(j["samples"].size(), m.samples.size());
  const std::string svg = model_svg(m);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
}

TEST(Hausdorff, ShiftedClouds) {
  auto plane = FlatDomain::plane();
  const auto a = circle(vec2(0, 0), 1.0, 200), b = circle(vec2(0.1, 0), 1.0, 200);
  EXPECT_NEAR(cloud_hausdorff(*plane, a, b, 5.0), 0.1, 2e-3);
  EXPECT_EQ(cloud_hausdorff(*plane, a, a, 5.0), 0.0);
}
