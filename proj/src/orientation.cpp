#include "gsa/orientation.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "gsa/error.hpp"

namespace gsa {

namespace {

void check_shape(const CorrespondenceSet& c) {
  if (c.source_points.size() != c.target_points.size()) {
    throw DegenerateInputError("correspondence sets differ in size (" +
                               std::to_string(c.source_points.size()) + " vs " +
                               std::to_string(c.target_points.size()) + ")");
  }
  if (c.size() < 3) {
    throw DegenerateInputError("absolute orientation needs at least 3 correspondences, got " +
                               std::to_string(c.size()));
  }
}

}  // namespace

OrientationResult solve_absolute_orientation(const CorrespondenceSet& c,
                                             std::span<const double> weights) {
  check_shape(c);
  const std::size_t n = c.size();
  if (weights.size() != n) throw DegenerateInputError("weight count does not match correspondences");

  double wsum = 0.0;
  Vec3 xbar = Vec3::Zero();
  Vec3 ybar = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0)) throw DegenerateInputError("negative or NaN correspondence weight");
    wsum += weights[i];
    xbar += weights[i] * c.source_points[i];
    ybar += weights[i] * c.target_points[i];
  }
  if (wsum <= 0.0) throw DegenerateInputError("correspondence weights sum to zero");
  xbar /= wsum;
  ybar /= wsum;

  Mat3 h = Mat3::Zero();
  Mat3 xx = Mat3::Zero();
  double x_spread = 0.0;
  double y_spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 xc = c.source_points[i] - xbar;
    const Vec3 yc = c.target_points[i] - ybar;
    h += weights[i] * xc * yc.transpose();
    xx += weights[i] * xc * xc.transpose();
    x_spread += weights[i] * xc.squaredNorm();
    y_spread += weights[i] * yc.squaredNorm();
  }

  const Eigen::JacobiSVD<Mat3> source_svd(xx);
  const Vec3 sv = source_svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    throw DegenerateInputError("source points are collinear or coincident");
  }

  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  const double d = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * Vec3(1.0, 1.0, d).asDiagonal() * u.transpose();

  const double s = std::sqrt(y_spread / x_spread);
  const Vec3 t = ybar - s * (r * xbar);

  OrientationResult out;
  out.transform = Sim3(s, r, t);
  const Vec3 hs = svd.singularValues();
  out.degenerate_rotation = (hs[1] - hs[2]) <= 1e-12 * hs[0];
  return out;
}

OrientationResult solve_absolute_orientation(const CorrespondenceSet& c) {
  check_shape(c);
  const std::vector<double> uniform(c.size(), 1.0);
  return solve_absolute_orientation(c, uniform);
}

double alignment_residual(const Sim3& t, const CorrespondenceSet& c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum += (t.apply(c.source_points[i]) - c.target_points[i]).squaredNorm();
  }
  return sum;
}

}  // namespace gsa
