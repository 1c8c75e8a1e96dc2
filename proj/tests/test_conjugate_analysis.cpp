#include "cutlocus/canonical_forms.hpp"
#include "cutlocus/conjugate_analysis.hpp"
#include "cutlocus/manifolds.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cutlocus;

TEST(Conjugate, SphereFirstConjugatePointIsAntipodal) {
  auto s = QuadricSurface::sphere();
  auto fam = std::make_shared<PointRayFamily>(s, vec3(0, 0, 1));
  const auto ev = detect_conjugate_events(*fam, Vec::Constant(1, 0.3), 5.0);
  ASSERT_FALSE(ev.empty());
  EXPECT_NEAR(ev.front().ray.t, kPi, 1e-9);
  EXPECT_NEAR((exponential_from_boundary(*fam, ev.front().ray) - vec3(0, 0, -1)).norm(), 0.0, 1e-7);
  EXPECT_NEAR(lambda_k(*fam, Vec::Constant(1, 2.0), 1, 4.0).value, kPi, 1e-9);
}

TEST(Conjugate, FlatTorusHasNone) {
  auto t = std::make_shared<FlatTorus>(vec2(1, 1));
  PointRayFamily fam(t, vec2(0, 0));
  EXPECT_TRUE(detect_conjugate_events(fam, Vec::Constant(1, 0.3), 5.0).empty());
  EXPECT_TRUE(lambda_k(fam, Vec::Constant(1, 0.3), 1, 5.0).is_inf());
}

TEST(Conjugate, DiskFocusesAtTheCentre) {
  auto d = FlatDomain::disk(vec2(0, 0), 1.0);
  BoundaryRayFamily fam(d, d->boundary()[0], nullptr);
  EXPECT_NEAR(lambda_k(fam, Vec::Constant(1, 1.1), 1, 1.5).value, 1.0, 1e-9);
}

TEST(Conjugate, EllipsoidFromUmbilicFreePointLiesBeyondPi) {
  // Gaussian curvature of (1, 1, 1.5) is below 1 away from the equator, so lambda1 > pi
  auto e = QuadricSurface::ellipsoid(1, 1, 1.5);
  PointRayFamily fam(e, vec3(0, 0, 1.5));
  const ExtendedTime l = lambda_k(fam, Vec::Constant(1, 0.4), 1, 8.0);
  ASSERT_FALSE(l.is_inf());
  EXPECT_GT(l.value, kPi);
}

TEST(Conjugate, SurfaceEventsHaveOrderOne) {
  auto s = QuadricSurface::sphere();
  PointRayFamily fam(s, vec3(0, 0, 1));
  const auto ev = detect_conjugate_events(fam, Vec::Constant(1, 1.0), 4.0);
  ASSERT_EQ(ev.size(), 1u);
  // a surface has a one-dimensional ray space here: the kernel is one direction
  EXPECT_EQ(ev.front().order, 1);
}

TEST(Models, LineScansFindTheNormalFormConjugateSets) {
  // A3: e = (x1^3 - x1 x2, x2); det = 3 x1^2 - x2 vanishes on x2 = 3 x1^2
  auto a3 = canonical_form_map(CanonicalForm::A3);
  const auto ev = detect_line_events(*a3, vec2(0.2, -0.5), vec2(0, 1), 1.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_NEAR(ev.front().x[1], 3 * 0.04, 1e-9);
  EXPECT_EQ(classify_singularity(*a3, ev.front()), SingularityClass::A2);
}

TEST(Models, CuspPointIsA3) {
  auto a3 = canonical_form_map(CanonicalForm::A3);
  const auto ev = detect_line_events(*a3, vec2(0, -0.5), vec2(0, 1), 1.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_NEAR(ev.front().x.norm(), 0.0, 1e-8);
  const auto c = classify_singularity(*a3, ev.front());
  EXPECT_TRUE(c == SingularityClass::A3_I || c == SingularityClass::A3_II) << to_string(c);
}

TEST(Models, D4VertexHasCorank2) {
  for (auto f : {CanonicalForm::D4_minus, CanonicalForm::D4_plus}) {
    auto m = canonical_form_map(f);
    const auto ev = detect_line_events(*m, vec3(0, 0, -0.5), vec3(0, 0, 1), 1.0);
    bool vertex = false;
    for (const auto& e : ev)
      if (e.x.norm() < 1e-6) {
        vertex = true;
        EXPECT_EQ(e.order, 2) << to_string(f);
        EXPECT_EQ(e.kernel_basis.cols(), 2);
      }
    EXPECT_TRUE(vertex) << to_string(f);
  }
}

TEST(Models, RadiusSatisfiesGaussLemmaOnTheConjugateSet) {
  ModelOptions o;
  o.radial = vec3(2, 2, 1);
  auto m = canonical_form_map(CanonicalForm::D4_plus, o);
  EXPECT_NEAR(m->radius_gradient(vec3(0, 0, 0)).dot(o.radial), 1.0, 1e-12);
  const Mat k = kernel_of(m->jacobian(vec3(0, 0, 0)));
  EXPECT_NEAR((m->radius_gradient(vec3(0, 0, 0)).transpose() * k).norm(), 0.0, 1e-12);
}

TEST(Kernel, OfARankOneMatrix) {
  Mat j(2, 2);
  j << 1, 2, 2, 4;
  const Mat k = kernel_of(j);
  ASSERT_EQ(k.cols(), 1);
  EXPECT_NEAR((j * k).norm(), 0.0, 1e-12);
}

TEST(Lipschitz, EstimateOfASampledSine) {
  LambdaProfile p;
  p.periodic = true;
  const int n = 400;
  p.shape[0] = n;
  for (int i = 0; i < n; ++i) {
    const double z = 2 * kPi * i / n;
    p.z.push_back(Vec::Constant(1, z));
    p.values.push_back(ExtendedTime::of(2.0 + 0.3 * std::sin(z)));
  }
  EXPECT_NEAR(lipschitz_estimate(p), 0.3, 1e-4);
}

TEST(Lipschitz, SphereProfileIsFlat) {
  auto s = QuadricSurface::sphere();
  PointRayFamily fam(s, vec3(0, 0, 1));
  std::vector<Vec> zs;
  for (int i = 0; i < 16; ++i) zs.push_back(Vec::Constant(1, 2 * kPi * i / 16));
  const auto prof = lambda_profile(fam, zs, 1, 4.0);
  EXPECT_LT(lipschitz_estimate(prof), 1e-6);
}

TEST(Events, JsonCarriesClassAndOrder) {
  auto a3 = canonical_form_map(CanonicalForm::A3);
  const auto ev = detect_line_events(*a3, vec2(0.2, -0.5), vec2(0, 1), 1.0);
  ASSERT_FALSE(ev.empty());
  const auto j = event_to_json(ev.front());
  EXPECT_EQ(j["order"], 1);
}
