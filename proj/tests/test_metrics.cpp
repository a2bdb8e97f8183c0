#include <gtest/gtest.h>

#include <random>

#include "gsa/error.hpp"
#include "gsa/metrics.hpp"
#include "support.hpp"

using namespace gsa;

namespace {
Mat3 rz(double deg) { return rotation_from_axis_angle(Vec3::UnitZ() * deg_to_rad(deg)); }
}  // namespace

TEST(Metrics, RelativeRotationError) {
  EXPECT_EQ(rre(Mat3::Identity(), Mat3::Identity()), 0.0);
  EXPECT_NEAR(rre(Mat3::Identity(), rz(90)), 90.0, 1e-12);
  EXPECT_EQ(rre(Mat3::Identity(), rz(180)), 180.0);
  std::mt19937_64 rng(71);
  for (int i = 0; i < 100; ++i) {
    const Mat3 a = gsa::testing::random_rotation(rng);
    const Mat3 b = gsa::testing::random_rotation(rng);
    EXPECT_NEAR(rre(a, b), rre(b, a), 1e-12);
    EXPECT_NEAR(rre(a, a), 0.0, 1e-5);
  }
  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_THROW(rre(reflection, Mat3::Identity()), ValidationError);
}

TEST(Metrics, AbsoluteTranslationError) {
  EXPECT_EQ(ate(Vec3(1, 2, 3), Vec3(1, 2, 3)), 0.0);
  EXPECT_EQ(ate(Vec3(3, 4, 0), Vec3::Zero()), 5.0);
  std::mt19937_64 rng(72);
  const Mat3 q = gsa::testing::random_rotation(rng);
  const Vec3 a(0.3, -1.2, 2.0), b(1.0, 0.5, -0.7);
  EXPECT_NEAR(ate(q * a, q * b), ate(a, b), 1e-12);
}

TEST(Metrics, ScaleError) {
  EXPECT_EQ(scale_error(1.0, 1.0), 0.0);
  EXPECT_NEAR(scale_error(1.02, 1.0), 2.0, 1e-12);
  EXPECT_EQ(scale_error(2.0, 4.0), 50.0);
  EXPECT_THROW(scale_error(1.0, 0.0), ValidationError);
  EXPECT_THROW(scale_error(1.0, -2.0), ValidationError);
}

TEST(Metrics, AllZeroIffTransformsAgree) {
  std::mt19937_64 rng(73);
  const Sim3 t = gsa::testing::random_transform(rng);
  const MetricSet same = compute_metrics(t, t);
  EXPECT_NEAR(same.rre_deg, 0.0, 1e-5);
  EXPECT_EQ(same.ate, 0.0);
  EXPECT_EQ(same.scale_error_pct, 0.0);
  const MetricSet off = compute_metrics(Sim3(t.scale() * 1.1, t.rotation(), t.translation()), t);
  EXPECT_GT(off.scale_error_pct, 0.0);
  EXPECT_NEAR(off.scale_error_pct, 10.0, 1e-9);
}
