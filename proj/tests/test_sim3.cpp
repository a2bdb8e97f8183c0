#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gsa/sim3.hpp"
#include "support.hpp"

using namespace gsa;
using gsa::testing::random_rotation;
using gsa::testing::random_transform;

namespace {

Mat3 rz(double deg) { return rotation_from_axis_angle(Vec3::UnitZ() * deg_to_rad(deg)); }

void expect_sim3_near(const Sim3& a, const Sim3& b, double tol) {
  EXPECT_NEAR(a.scale(), b.scale(), tol);
  EXPECT_LE((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((a.translation() - b.translation()).cwiseAbs().maxCoeff(), tol);
}

}  // namespace

TEST(Sim3, ComposeIdentityWithIdentity) {
  expect_sim3_near(sim3_compose(Sim3::identity(), Sim3::identity()), Sim3::identity(), 0.0);
}

TEST(Sim3, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Sim3 t = random_transform(rng);
    expect_sim3_near(sim3_compose(t, sim3_inverse(t)), Sim3::identity(), 1e-9);
    expect_sim3_near(sim3_compose(sim3_inverse(t), t), Sim3::identity(), 1e-9);
  }
}

TEST(Sim3, ComposeMatchesSequentialApplication) {
  const Sim3 a(2.0, rz(90.0), Vec3(1, 0, 0));
  const Sim3 b(3.0, Mat3::Identity(), Vec3(0, 1, 0));
  const Vec3 p(1, 1, 1);
  const Vec3 seq = sim3_apply_point(a, sim3_apply_point(b, p));
  EXPECT_LT((sim3_apply_point(sim3_compose(a, b), p) - seq).norm(), 1e-12);
  const Sim3 ab = a * b;
  EXPECT_DOUBLE_EQ(ab.scale(), 6.0);
  EXPECT_LT((ab.translation() - (2.0 * rz(90.0) * Vec3(0, 1, 0) + Vec3(1, 0, 0))).norm(), 1e-12);
}

TEST(Sim3, CompositionIsAssociative) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Sim3 a = random_transform(rng);
    const Sim3 b = random_transform(rng);
    const Sim3 c = random_transform(rng);
    expect_sim3_near((a * b) * c, a * (b * c), 1e-9 * std::max(1.0, (a * b * c).translation().norm()));
  }
}

TEST(Sim3, IdentityIsTwoSidedNeutral) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Sim3 t = random_transform(rng);
    expect_sim3_near(Sim3::identity() * t, t, 1e-12);
    expect_sim3_near(t * Sim3::identity(), t, 1e-12);
  }
}

TEST(Sim3, InverseExamples) {
  expect_sim3_near(sim3_inverse(Sim3::identity()), Sim3::identity(), 0.0);
  const Sim3 inv = sim3_inverse(Sim3(2.0, Mat3::Identity(), Vec3(4, 0, 0)));
  expect_sim3_near(inv, Sim3(0.5, Mat3::Identity(), Vec3(-2, 0, 0)), 1e-15);
}

TEST(Sim3, InverseOfInverseAndPointRoundTrip) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Sim3 t = random_transform(rng);
    expect_sim3_near(t.inverse().inverse(), t, 1e-12);
    for (int k = 0; k < 100; ++k) {
      const Vec3 p(n(rng), n(rng), n(rng));
      EXPECT_LT((t.inverse().apply(t.apply(p)) - p).norm(), 1e-12);
    }
  }
}

TEST(Sim3, ApplyExamples) {
  EXPECT_EQ(sim3_apply_point(Sim3::identity(), Vec3(1, 2, 3)), Vec3(1, 2, 3));
  EXPECT_EQ(sim3_apply_point(Sim3(2.0, Mat3::Identity(), Vec3(1, 1, 1)), Vec3(1, 0, 0)), Vec3(3, 1, 1));
  const Vec3 r = sim3_apply_point(Sim3(1.0, rz(90.0), Vec3::Zero()), Vec3(1, 0, 0));
  EXPECT_LT((r - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(Sim3, RotationStaysProperUnderComposition) {
  std::mt19937_64 rng(5);
  Sim3 acc;
  for (int i = 0; i < 500; ++i) {
    acc = random_transform(rng, 0.01, 0.1) * acc;
    ASSERT_TRUE(is_proper_rotation(acc.rotation(), 1e-9));
    ASSERT_GT(acc.scale(), 0.0);
  }
}

TEST(Sim3, QuaternionMatrixRoundTrip) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    const Sim3 t(1.0, r, Vec3::Zero());
    EXPECT_LT((t.quaternion().toRotationMatrix() - r).norm(), 1e-9);
    EXPECT_GE(t.quaternion().w(), 0.0);
  }
}

TEST(Sim3, CanonicalQuaternionSign) {
  const Quat q = canonical_quaternion(Quat(-0.5, 0.5, -0.5, 0.5));
  EXPECT_GE(q.w(), 0.0);
  EXPECT_DOUBLE_EQ(q.w(), 0.5);
  const Quat half = canonical_quaternion(Quat(0.0, 0.0, -1.0, 0.0));
  EXPECT_DOUBLE_EQ(half.y(), 1.0);
  // Both signs describe the same rotation, so they construct equal transforms.
  const Sim3 a(1.0, Quat(0.3, -0.2, 0.5, 0.1).normalized(), Vec3::Zero());
  const Sim3 b(1.0, Quat(-0.3, 0.2, -0.5, -0.1).normalized(), Vec3::Zero());
  EXPECT_EQ(a.quaternion().coeffs(), b.quaternion().coeffs());
}

TEST(Sim3, AxisAngleRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const Mat3 r = random_rotation(rng);
    const Vec3 w = axis_angle_from_rotation(r);
    EXPECT_LE(w.norm(), std::numbers::pi + 1e-12);
    EXPECT_LT((rotation_from_axis_angle(w) - r).norm(), 1e-9);
  }
  const Vec3 tiny(1e-14, -2e-14, 3e-14);
  EXPECT_LT((axis_angle_from_rotation(rotation_from_axis_angle(tiny)) - tiny).norm(), 1e-20);
  const Mat3 flip = rz(180.0);
  EXPECT_NEAR(axis_angle_from_rotation(flip).norm(), std::numbers::pi, 1e-9);
}

TEST(Sim3, RotationAngleBetweenKeepsSmallAngles) {
  const Mat3 r = rotation_from_axis_angle(Vec3(1, 2, 2).normalized() * 1e-11);
  EXPECT_NEAR(rotation_angle_between(Mat3::Identity(), r), 1e-11, 1e-20);
  EXPECT_NEAR(rad_to_deg(rotation_angle_between(Mat3::Identity(), rz(180.0))), 180.0, 1e-9);
}

TEST(Sim3, EulerCompositionOrder) {
  const double rx = 0.3, ry = -0.7, rz_ = 1.1;
  const Mat3 expected = rotation_from_axis_angle(Vec3::UnitZ() * rz_) *
                        rotation_from_axis_angle(Vec3::UnitY() * ry) *
                        rotation_from_axis_angle(Vec3::UnitX() * rx);
  EXPECT_LT((rotation_from_euler_xyz(rx, ry, rz_) - expected).norm(), 1e-14);
}

TEST(Sim3, DistanceFromIdentity) {
  EXPECT_EQ(sim3_distance_from_identity(Sim3::identity(), 1.0), 0.0);
  EXPECT_NEAR(sim3_distance_from_identity(Sim3(std::exp(0.2), Mat3::Identity(), Vec3::Zero()), 1.0), 0.2,
              1e-15);
  EXPECT_NEAR(sim3_distance_from_identity(Sim3(1.0, Mat3::Identity(), Vec3(3, 4, 0)), 10.0), 0.5, 1e-15);
}
