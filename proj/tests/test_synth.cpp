#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gsa/error.hpp"
#include "gsa/synth.hpp"

using namespace gsa;

namespace {

ShapeParams small_shape(std::uint64_t seed = 1) {
  ShapeParams p;
  p.gaussian_count = 400;
  p.marker = AsymmetryMarker{};
  p.seed = seed;
  return p;
}

bool bitwise_equal(const GaussianModel& a, const GaussianModel& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Gaussian& x = a.gaussians[i];
    const Gaussian& y = b.gaussians[i];
    if (x.position != y.position || x.covariance != y.covariance || x.opacity != y.opacity ||
        x.color_dc != y.color_dc || x.feature != y.feature) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(SphericalMapFeature, Poles) {
  EXPECT_EQ(spherical_map_feature(Vec3(1, 0, 0)), Vec3(1, 0.5, 0.5));
  EXPECT_EQ(spherical_map_feature(Vec3(0, 0, -1)), Vec3(0.5, 0.5, 0));
}

TEST(GenerateModel, DeterministicForFixedSeed) {
  EXPECT_TRUE(bitwise_equal(generate_model(small_shape(7)), generate_model(small_shape(7))));
  EXPECT_FALSE(bitwise_equal(generate_model(small_shape(7)), generate_model(small_shape(8))));
}

TEST(GenerateModel, GaussiansAreValidAndFeaturesEncodeDirection) {
  for (ShapeFamily family : {ShapeFamily::superquadric, ShapeFamily::box, ShapeFamily::composite}) {
    ShapeParams p = small_shape(3);
    p.family = family;
    p.surface_noise = 0.01;
    const GaussianModel m = generate_model(p);
    ASSERT_EQ(m.size(), p.gaussian_count);
    EXPECT_NO_THROW(validate_model(m));
    for (const Gaussian& g : m.gaussians) {
      EXPECT_GE(g.opacity, 0.6);
      EXPECT_LE(g.opacity, 1.0);
      EXPECT_LT((g.covariance - g.covariance(0, 0) * Mat3::Identity()).norm(), 1e-15);
      EXPECT_LT((g.feature - spherical_map_feature(g.position.normalized())).norm(), 1e-12);
    }
  }
}

TEST(GenerateModel, FeatureNoiseStaysInRange) {
  ShapeParams p = small_shape(4);
  p.feature_noise = 0.3;
  for (const Gaussian& g : generate_model(p).gaussians) {
    EXPECT_GE(g.feature.minCoeff(), 0.0);
    EXPECT_LE(g.feature.maxCoeff(), 1.0);
  }
}

TEST(GenerateModel, RejectsInvalidParams) {
  ShapeParams p = small_shape();
  p.gaussian_count = 3;
  EXPECT_THROW(validate_shape_params(p), ValidationError);
  p = small_shape();
  p.half_extents = Vec3(1, 0, 1);
  EXPECT_THROW(validate_shape_params(p), ValidationError);
  p = small_shape();
  p.exponent_1 = 5.0;
  EXPECT_THROW(validate_shape_params(p), ValidationError);
}

TEST(RandomSim3, ZeroBoundsGiveIdentity) {
  PerturbBounds b;
  b.max_rotation_deg_per_axis = 0.0;
  const Sim3 t = random_sim3(b);
  EXPECT_EQ(t.scale(), 1.0);
  EXPECT_EQ(t.rotation(), Mat3::Identity());
  EXPECT_EQ(t.translation(), Vec3::Zero());
}

TEST(RandomSim3, LogScaleIsUniform) {
  PerturbBounds b;
  b.scale_lo = 0.1;
  b.scale_hi = 10.0;
  constexpr int n = 10000;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    b.seed = static_cast<std::uint64_t>(i);
    u[i] = (std::log(random_sim3(b).scale()) - std::log(0.1)) / (std::log(10.0) - std::log(0.1));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max({d, (i + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
  }
  // Kolmogorov critical value at the 1% level.
  EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(RandomSim3, RotationCoverageReachesNearHalfTurn) {
  PerturbBounds b;
  b.translation_radius = 2.0;
  double max_angle = 0.0;
  for (int i = 0; i < 10000; ++i) {
    b.seed = static_cast<std::uint64_t>(i) + 100000;
    const Sim3 t = random_sim3(b);
    max_angle = std::max(max_angle, rad_to_deg(rotation_angle_between(Mat3::Identity(), t.rotation())));
    ASSERT_LE(t.translation().norm(), 2.0);
  }
  EXPECT_GT(max_angle, 170.0);
}

TEST(RandomSim3, DeterministicPerSeed) {
  PerturbBounds b;
  b.scale_lo = 0.5;
  b.scale_hi = 2.0;
  b.translation_radius = 1.0;
  b.seed = 42;
  const Sim3 x = random_sim3(b), y = random_sim3(b);
  EXPECT_EQ(x.scale(), y.scale());
  EXPECT_EQ(x.rotation(), y.rotation());
  EXPECT_EQ(x.translation(), y.translation());
}

TEST(MakeScenario, ZeroBoundsSameSeedGivesIdenticalPair) {
  PerturbBounds b;
  b.max_rotation_deg_per_axis = 0.0;
  const Scenario s = make_scenario(ScenarioKind::same_object, small_shape(), small_shape(), b);
  EXPECT_TRUE(bitwise_equal(s.source, s.target));
  EXPECT_EQ(s.ground_truth.rotation(), Mat3::Identity());
  EXPECT_EQ(s.ground_truth.scale(), 1.0);
}

TEST(MakeScenario, GroundTruthInvertsAppliedPerturbation) {
  PerturbBounds b;
  b.scale_lo = 0.1;
  b.scale_hi = 10.0;
  b.translation_radius = 5.0;
  b.seed = 9;
  const Scenario s = make_scenario(ScenarioKind::same_object, small_shape(1), small_shape(2), b);
  const Sim3 expected = random_sim3(b).inverse();
  EXPECT_NEAR(s.ground_truth.scale(), expected.scale(), 1e-12 * expected.scale());
  EXPECT_LT((s.ground_truth.rotation() - expected.rotation()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.ground_truth.translation() - expected.translation()).norm(), 1e-12);
  const Sim3 round = s.ground_truth * s.applied;
  EXPECT_NEAR(round.scale(), 1.0, 1e-12);
  EXPECT_LT(round.translation().norm(), 1e-12);
  // Source Gaussians map back onto the canonical sampling.
  const GaussianModel canonical = generate_model(small_shape(1));
  for (std::size_t i = 0; i < canonical.size(); i += 37) {
    EXPECT_LT((s.ground_truth.apply(s.source.gaussians[i].position) - canonical.gaussians[i].position).norm(),
              1e-9);
  }
}

TEST(MakeScenario, CrossInstanceSharesCanonicalFeatures) {
  ShapeParams a = small_shape(5);
  ShapeParams b = small_shape(6);
  a.exponent_1 = 0.5;
  a.exponent_2 = 1.5;
  b.exponent_1 = 2.0;
  b.exponent_2 = 0.8;
  b.half_extents = Vec3(1.4, 0.5, 0.4);
  const Scenario s = make_scenario(ScenarioKind::cross_instance, a, b, PerturbBounds{});
  for (const GaussianModel* m : {&s.target, &s.source}) {
    for (const Gaussian& g : m->gaussians) {
      const Vec3 d = (m == &s.target ? g.position : s.ground_truth.apply(g.position)).normalized();
      ASSERT_LT((g.feature - spherical_map_feature(d)).norm(), 1e-9);
    }
  }
  // The +x pole of either shape carries the same feature.
  EXPECT_EQ(spherical_map_feature(Vec3::UnitX()), Vec3(1, 0.5, 0.5));
}

TEST(ShapeRadius, MatchesHalfExtentsOnAxes) {
  ShapeParams p;
  p.half_extents = Vec3(1.0, 0.7, 0.5);
  EXPECT_NEAR(shape_radius(p, Vec3::UnitX()), 1.0, 1e-12);
  EXPECT_NEAR(shape_radius(p, Vec3::UnitY()), 0.7, 1e-12);
  EXPECT_NEAR(shape_radius(p, -Vec3::UnitZ()), 0.5, 1e-12);
}
