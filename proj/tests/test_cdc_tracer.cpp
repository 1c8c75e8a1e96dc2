#include "cutlocus/canonical_forms.hpp"
#include "cutlocus/cdc_tracer.hpp"
#include "cutlocus/manifolds.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cutlocus;

namespace {

std::shared_ptr<ModelMap> a3(Vec radial = Vec()) {
  ModelOptions o;
  o.radial = radial;
  return canonical_form_map(CanonicalForm::A3, o);
}

}  // namespace

TEST(Distribution, TangentToTheFoldCurve) {
  auto m = a3();
  const double x = -0.3;
  const ConjugateDirection cd = conjugate_distribution(*m, vec2(x, 3 * x * x));
  // tangent of x2 = 3 x1^2 is (1, 6 x1)
  const Vec t = vec2(1, 6 * x).normalized();
  EXPECT_NEAR(std::abs(cd.d.dot(t)), 1.0, 1e-10);
  EXPECT_LT(cd.kernel_residual, 1e-12);
  EXPECT_LT(cd.tangent_residual, 1e-12);
  EXPECT_LT(m->radius_gradient(cd.x).dot(cd.d), 0.0);
  // kernel of de at (x, 3x^2) is (1, 0); the slack is |sin| of its angle with D
  EXPECT_NEAR(cd.slack, std::abs(t[1]), 1e-10);
}

TEST(Distribution, RejectsPointsOffTheConjugateSet) {
  auto m = a3();
  EXPECT_THROW(conjugate_distribution(*m, vec2(-0.3, 0.1)), DomainError);
}

TEST(Distribution, DegenerateAtTheCusp) {
  auto m = a3();
  EXPECT_THROW(conjugate_distribution(*m, vec2(0, 0)), DegenerateDistribution);
}

TEST(Distribution, EllipsoidMatchesTheLambdaCurve) {
  auto e = QuadricSurface::ellipsoid(1, 1, 1.05);
  auto fam = std::make_shared<PointRayFamily>(e, e->project(vec3(1, 0, 0.05)));
  RayFamilyMap map(fam, 8.0);
  const double th = 1.0, h = 1e-4;
  const auto ev = detect_conjugate_events(*fam, Vec::Constant(1, th), 6.0);
  ASSERT_FALSE(ev.empty());
  const ConjugateDirection cd = conjugate_distribution(map, ev.front().ray);
  const double lp = lambda_k(*fam, Vec::Constant(1, th + h), 1, 6.0).value;
  const double lm = lambda_k(*fam, Vec::Constant(1, th - h), 1, 6.0).value;
  const Vec tan = vec2((lp - lm) / (2 * h), 1.0).normalized();
  EXPECT_LT(cd.kernel_residual, 1e-6);
  EXPECT_LT(std::abs(tan[0] * cd.d[1] - tan[1] * cd.d[0]), 1e-6);
}

TEST(Trace, A3CurveRunsIntoTheCusp) {
  auto m = a3();
  const CDCurve c = trace_cdc(*m, vec2(-0.5, 0.75));
  ASSERT_EQ(c.stop, CdcStop::a3_hit);
  EXPECT_LT(c.end().norm(), 1e-8);
  // R = x2 on the conjugate set of this model, so the drop is 0.75
  EXPECT_NEAR(c.radius_drop(), 0.75, 1e-9);
  EXPECT_LT(c.unbeatable_error(), 1e-4);
  for (const auto& s : c.samples) EXPECT_NEAR(s.x[1], 3 * s.x[0] * s.x[0], 1e-7);
  for (size_t i = 1; i < c.samples.size(); ++i) EXPECT_LT(c.samples[i].radius, c.samples[i - 1].radius);
}

TEST(Trace, CanonicalParameterIsTheRadiusDrop) {
  auto m = a3();
  const CDCurve c = trace_cdc(*m, vec2(-0.5, 0.75));
  for (const auto& s : c.samples) EXPECT_NEAR(s.s, c.samples.front().radius - s.radius, 1e-9);
}

TEST(Trace, A3SecondKindIsNotTerminal) {
  auto m = a3(vec2(0, -1));
  EXPECT_EQ(a3_type(*m, vec2(0, 0)), A3Type::II);
  const CDCurve c = trace_cdc(*m, vec2(0.05, 0.0075));
  EXPECT_NE(c.stop, CdcStop::a3_hit);
  EXPECT_GT(c.end().norm(), 0.1);
  EXPECT_EQ(a3_type(*a3(), vec2(0, 0)), A3Type::I);
}

TEST(Retort, MatchesTheClosedForm) {
  auto m = a3();
  const CDCurve c = trace_cdc(*m, vec2(-0.5, 0.75));
  const Retort r = build_retort(*m, c, c.end());
  ASSERT_TRUE(r.complete);
  const int n = static_cast<int>(c.samples.size());
  for (size_t k = 0; k < r.samples.size(); ++k) {
    const double t = c.samples[n - 1 - k].x[0];
    EXPECT_NEAR((r.samples[k] - vec2(-2 * t, 3 * t * t)).norm(), 0.0, 1e-8);
  }
  EXPECT_LT(tree_formed_error(*m, c, r), 1e-10);
  // the retort climbs less than alpha descends
  EXPECT_LT(r.gain, r.drop);
}

TEST(Trace, ConeModeStillReachesTheCusp) {
  ModelOptions o;
  o.dim = 3;
  auto m = canonical_form_map(CanonicalForm::A3, o);
  for (int sign : {1, -1}) {
    TraceOptions t;
    t.cone_c = 1e-2;
    t.cone_sign = sign;
    const CDCurve c = trace_cdc(*m, vec3(-0.5, 0.75, 0.1), t);
    EXPECT_EQ(c.stop, CdcStop::a3_hit);
    EXPECT_NEAR(c.radius_drop(), 0.75, 1e-9);
    // the tilt moves the curve along the A3 line x1 = x2 = 0
    EXPECT_GT(sign * (c.end()[2] - 0.1), 0.0);
    EXPECT_TRUE(build_retort(*m, c, c.end()).complete);
  }
}

TEST(Trace, PerturbedCuspIsStillReached) {
  ModelOptions o;
  o.perturbation = 1e-3;
  auto m = canonical_form_map(CanonicalForm::A3, o);
  TraceOptions t;
  t.distribution.snap_tol = 1e-2;
  const CDCurve c = trace_cdc(*m, vec2(-0.5, 0.75), t);
  EXPECT_EQ(c.stop, CdcStop::a3_hit);
  EXPECT_LT(c.unbeatable_error(), 1e-4);
}

TEST(Retort, FoldHasNoSecondPreimage) {
  auto m = canonical_form_map(CanonicalForm::A2);
  const CDCurve c = trace_cdc(*m, vec2(0, 0.5));
  EXPECT_THROW(build_retort(*m, c), RetortFailure);
}

TEST(Join, DirectionAtTheCusp) {
  auto m = a3();
  const CDCurve c = trace_cdc(*m, vec2(-0.5, 0.75));
  const JoinEvent j = a3_join(*m, c);
  EXPECT_EQ(j.type, A3Type::I);
  // (-2, 6t)/|.| at t = 0
  EXPECT_NEAR(std::abs(j.direction[0]), 1.0, 1e-5);
  EXPECT_NEAR(j.direction[1], 0.0, 1e-5);
  const auto js = join_to_json(j);
  EXPECT_EQ(js["type"], "A3_I");
}

TEST(Join, RefusesTheSecondKind) {
  auto m = a3(vec2(0, -1));
  CDCurve fake;
  fake.stop = CdcStop::a3_hit;
  fake.samples.push_back({0.0, vec2(0.01, 0.0003), 0.0, 0.0});
  fake.samples.push_back({0.0, vec2(0, 0), 0.0, 0.0});
  EXPECT_THROW(a3_join(*m, fake), DomainError);
}

TEST(Vertex, D4MinusEmitsThreeCurves) {
  auto m = canonical_form_map(CanonicalForm::D4_minus);
  const auto v = vertex_cdcs(*m);
  int leaving = 0;
  std::vector<double> angles;
  for (const auto& e : v)
    if (e.leaving) {
      ++leaving;
      angles.push_back(e.angle);
    }
  ASSERT_EQ(leaving, 3);
  // generatrices at 0, 120 and 240 degrees
  for (double a : angles) {
    const double k = a / (2 * kPi / 3);
    EXPECT_NEAR(k, std::round(k), 1e-3);
  }
}

TEST(Vertex, D4PlusTypeOneHasOneEnteringCurve) {
  ModelOptions o;
  o.radial = vec3(2, 2, 1);
  const auto v = vertex_cdcs(*canonical_form_map(CanonicalForm::D4_plus, o));
  int leaving = 0, entering = 0;
  for (const auto& e : v) (e.leaving ? leaving : entering)++;
  EXPECT_EQ(leaving, 2);
  EXPECT_EQ(entering, 1);
}

TEST(D4Roots, MinusAtTheCentre) {
  const D4Roots r = d4_root_analysis(0, 0, D4Kind::minus);
  ASSERT_EQ(r.roots.size(), 3u);
  EXPECT_NEAR(r.roots[0], -std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(r.roots[1], 0.0, 1e-12);
  EXPECT_NEAR(r.roots[2], std::sqrt(3.0), 1e-12);
  EXPECT_TRUE(r.placement_ok);
}

TEST(D4Roots, PlusTypeOne) {
  // -x^3 - 2x^2 + 2x + 1 = -(x - 1)(x^2 + 3x + 1)
  const D4Roots r = d4_root_analysis(2, 2, D4Kind::plus);
  ASSERT_EQ(r.roots.size(), 3u);
  EXPECT_NEAR(r.roots[0], (-3 - std::sqrt(5.0)) / 2, 1e-12);
  EXPECT_NEAR(r.roots[1], (-3 + std::sqrt(5.0)) / 2, 1e-12);
  EXPECT_NEAR(r.roots[2], 1.0, 1e-12);
  EXPECT_EQ(r.chamber, "type I");
  EXPECT_TRUE(r.placement_ok);
}

TEST(D4Roots, PlusTypeTwoRootsArePositive) {
  const D4Roots r = d4_root_analysis(-2, -2, D4Kind::plus);
  EXPECT_EQ(r.chamber, "type II");
  for (double x : r.roots) EXPECT_GT(x, 0.0);
}

TEST(D4Roots, OutsideTheChamberThrows) {
  EXPECT_THROW(d4_root_analysis(0.8, 0.8, D4Kind::minus), DomainError);
  EXPECT_THROW(d4_root_analysis(0.5, 1.0, D4Kind::plus), DomainError);
  EXPECT_EQ(d4_kind_from_string("plus"), D4Kind::plus);
  EXPECT_THROW(d4_kind_from_string("zero"), ConfigError);
}

TEST(Export, CdcCsvHeader) {
  auto m = a3();
  const CDCurve c = trace_cdc(*m, vec2(-0.5, 0.75));
  const std::string csv = cdc_csv(*m, c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "s,x1,x2,R,slack");
}
