#pragma once

#include <span>
#include <vector>

#include "gsa/sim3.hpp"

namespace gsa {

/// Paired point sets: source_points[i] corresponds to target_points[i].
struct CorrespondenceSet {
  std::vector<Vec3> source_points;
  std::vector<Vec3> target_points;

  std::size_t size() const { return source_points.size(); }
};

struct OrientationResult {
  Sim3 transform;
  /// Set when the two smallest singular values of the cross-covariance are
  /// within 1e-12 of the largest; the rotation is then not unique.
  bool degenerate_rotation = false;
};

/// Closed-form Sim(3) fit of source onto target.
///
/// Rotation and translation follow Kabsch-Umeyama (SVD of the centred
/// cross-covariance with a determinant correction so the result is always a
/// proper rotation). Scale is the symmetric ratio of spreads,
/// s = sqrt(sum |y_i - ybar|^2 / sum |x_i - xbar|^2), which treats both sets
/// alike and is exact on noiseless data.
///
/// Throws DegenerateInputError when N < 3, the sizes differ, or the centred
/// source has rank < 2.
OrientationResult solve_absolute_orientation(const CorrespondenceSet& c);

/// Weighted variant; weights must be non-negative with a positive sum.
OrientationResult solve_absolute_orientation(const CorrespondenceSet& c,
                                             std::span<const double> weights);

/// sum_i |t(x_i) - y_i|^2
double alignment_residual(const Sim3& t, const CorrespondenceSet& c);

}  // namespace gsa
