#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "gsa/coarse.hpp"
#include "gsa/synth.hpp"
#include "support.hpp"

using namespace gsa;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ShapeParams shape(std::uint64_t seed, std::size_t n = 1500) {
  ShapeParams p;
  p.gaussian_count = n;
  p.marker = AsymmetryMarker{};
  p.seed = seed;
  return p;
}

PerturbBounds wide_bounds(std::uint64_t seed) {
  PerturbBounds b;
  b.scale_lo = 0.1;
  b.scale_hi = 10.0;
  b.translation_radius = 5.0;
  b.seed = seed;
  return b;
}

}  // namespace

TEST(FindCorrespondences, SourceEqualsTargetMatchesItself) {
  std::mt19937_64 rng(31);
  const GaussianModel m = gsa::testing::random_cloud(rng, 200);
  const FeatureSpatialIndex index(m);
  const Matches matches = find_correspondences(m.positions(), m.features(), index, 0.01);
  ASSERT_EQ(matches.pairs.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(matches.target_indices[i], i);
  EXPECT_EQ(alignment_residual(Sim3::identity(), matches.pairs), 0.0);
}

TEST(FindCorrespondences, FeaturePruningIsAbsolute) {
  // Two interleaved lattices whose features differ by 0.5.
  std::vector<Vec3> pos, feat;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      pos.push_back(Vec3(i, j, 0));
      feat.push_back(((i + j) % 2 == 0) ? Vec3(0.2, 0.2, 0.2) : Vec3(0.2, 0.7, 0.2));
    }
  }
  const FeatureSpatialIndex index(pos, feat);
  std::mt19937_64 rng(32);
  std::normal_distribution<double> jitter(0.0, 0.3);
  std::vector<Vec3> q;
  for (const Vec3& p : pos) q.push_back(p + Vec3(jitter(rng), jitter(rng), jitter(rng)));
  const Matches m = find_correspondences(q, feat, index, 0.01);
  ASSERT_EQ(m.pairs.size(), pos.size());
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    EXPECT_EQ(feat[m.source_indices[k]], feat[m.target_indices[k]]);
  }
}

TEST(FindCorrespondences, RecoversPlantedPermutation) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.02);
  const std::size_t n = 200;
  std::vector<Vec3> tpos(n), tfeat(n);
  for (std::size_t j = 0; j < n; ++j) {
    tpos[j] = Vec3(u(rng), u(rng), u(rng));
    tfeat[j] = Vec3(u(rng), u(rng), u(rng));
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec3> spos(n), sfeat(n);
  for (std::size_t i = 0; i < n; ++i) {
    spos[i] = tpos[perm[i]] + Vec3(jitter(rng), jitter(rng), jitter(rng));
    sfeat[i] = tfeat[perm[i]];
  }
  const FeatureSpatialIndex index(tpos, tfeat);
  const Matches m = find_correspondences(spos, sfeat, index, 0.01);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    if (m.target_indices[k] == perm[m.source_indices[k]]) ++hits;
  }
  EXPECT_GE(static_cast<double>(hits) / n, 0.99);
}

TEST(FindCorrespondences, InsufficientMatchesReportsSurvivors) {
  const std::vector<Vec3> tpos = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const std::vector<Vec3> tfeat(3, Vec3::Zero());
  const std::vector<Vec3> sfeat = {Vec3::Zero(), Vec3::Zero(), Vec3::Ones(), Vec3::Ones()};
  const std::vector<Vec3> spos = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  const FeatureSpatialIndex index(tpos, tfeat);
  try {
    find_correspondences(spos, sfeat, index, 0.01);
    FAIL() << "expected InsufficientMatchesError";
  } catch (const InsufficientMatchesError& e) {
    EXPECT_EQ(e.survivors(), 2u);
  }
}

TEST(CoarseRegister, SourceEqualsTargetGivesIdentity) {
  const GaussianModel m = generate_model(shape(1, 500));
  const CoarseResult r = coarse_register(m, m, CoarseConfig{});
  ASSERT_GE(r.trace.size(), 1u);
  const Sim3& first = r.trace.front().transform;
  EXPECT_NEAR(first.scale(), 1.0, 1e-9);
  EXPECT_LT(rotation_angle_between(first.rotation(), Mat3::Identity()), 1e-9);
  EXPECT_LT(first.translation().norm(), 1e-9);
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST(CoarseRegister, RecoversLargePerturbationWithExactFeatures) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = make_scenario(ScenarioKind::same_object, shape(seed), shape(seed + 100),
                                     wide_bounds(seed));
    const CoarseResult r = coarse_register(s.source, s.target, CoarseConfig{});
    EXPECT_LT(rad_to_deg(rotation_angle_between(r.transform.rotation(), s.ground_truth.rotation())), 1.0);
    EXPECT_LT(std::abs(r.transform.scale() / s.ground_truth.scale() - 1.0), 0.01);
  }
}

TEST(CoarseRegister, TraceInvariants) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    ShapeParams a = shape(seed), b = shape(seed + 100);
    a.feature_noise = b.feature_noise = 0.02;
    const Scenario s = make_scenario(ScenarioKind::same_object, a, b, wide_bounds(seed));
    CoarseConfig cfg;
    cfg.tau_f = 0.05;
    const CoarseResult r = coarse_register(s.source, s.target, cfg);
    ASSERT_LE(static_cast<int>(r.trace.size()), cfg.max_iterations);
    for (const CoarseIteration& it : r.trace) {
      EXPECT_LE(it.residual_after, it.residual_before * (1.0 + 1e-12)) << "iteration " << it.iteration;
      EXPECT_LE(it.max_feature_distance, cfg.tau_f);
      EXPECT_EQ(it.matched + it.unmatched, s.source.size());
    }
  }
}

TEST(CoarseRegister, EquivariantUnderSourcePrecomposition) {
  const Scenario s =
      make_scenario(ScenarioKind::same_object, shape(20), shape(20), wide_bounds(20));
  CoarseConfig cfg;
  cfg.max_iterations = 30;
  cfg.convergence_eps = 1e-12;
  std::mt19937_64 rng(21);
  const Sim3 p = gsa::testing::random_transform(rng);
  const GaussianModel moved = transform_model(p, s.source);
  const Sim3 t1 = coarse_register(s.source, s.target, cfg).transform;
  const Sim3 t2 = coarse_register(moved, s.target, cfg).transform;
  const double diameter = s.target.diameter();
  for (std::size_t i = 0; i < s.source.size(); ++i) {
    const Vec3 a = t1.apply(s.source.gaussians[i].position);
    const Vec3 b = t2.apply(moved.gaussians[i].position);
    ASSERT_LT((a - b).norm(), 1e-6 * diameter);
  }
}

TEST(CoarseRegister, DeterministicIncludingSubsampling) {
  const Scenario s = make_scenario(ScenarioKind::same_object, shape(30), shape(31), wide_bounds(30));
  CoarseConfig cfg;
  cfg.subsample = 300;
  cfg.seed = 5;
  const CoarseResult a = coarse_register(s.source, s.target, cfg);
  const CoarseResult b = coarse_register(s.source, s.target, cfg);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  EXPECT_EQ(a.transform.quaternion().coeffs(), b.transform.quaternion().coeffs());
  EXPECT_EQ(a.transform.translation(), b.transform.translation());
  EXPECT_EQ(a.transform.scale(), b.transform.scale());
  EXPECT_LE(a.trace.front().matched + a.trace.front().unmatched, 300u);
}

TEST(CoarseRegister, InsufficientMatchesKeepsTrace) {
  GaussianModel src = generate_model(shape(40, 200));
  GaussianModel dst = src;
  for (auto& g : dst.gaussians) g.feature = Vec3::Zero();
  for (auto& g : src.gaussians) g.feature = Vec3::Ones();
  try {
    coarse_register(src, dst, CoarseConfig{});
    FAIL() << "expected InsufficientMatchesError";
  } catch (const InsufficientMatchesError& e) {
    EXPECT_EQ(e.survivors(), 0u);
    EXPECT_TRUE(e.trace().empty());
  }
}

TEST(CoarseRegister, RejectsInvalidConfig) {
  const GaussianModel m = generate_model(shape(1, 100));
  CoarseConfig cfg;
  cfg.tau_f = 0.0;
  EXPECT_THROW(coarse_register(m, m, cfg), ValidationError);
  cfg = CoarseConfig{};
  cfg.max_iterations = 0;
  EXPECT_THROW(coarse_register(m, m, cfg), ValidationError);
  GaussianModel plain = m;
  plain.has_features = false;
  EXPECT_THROW(coarse_register(plain, m, CoarseConfig{}), ValidationError);
}

TEST(CoarseRegister, InfiniteThresholdIsAccepted) {
  const GaussianModel m = generate_model(shape(2, 300));
  CoarseConfig cfg;
  cfg.tau_f = kInf;
  const CoarseResult r = coarse_register(m, m, cfg);
  EXPECT_LT(rotation_angle_between(r.transform.rotation(), Mat3::Identity()), 1e-9);
}
