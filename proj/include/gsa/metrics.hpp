#pragma once

#include "gsa/sim3.hpp"

namespace gsa {

struct MetricSet {
  double rre_deg = 0.0;
  double ate = 0.0;
  double scale_error_pct = 0.0;
};

/// Geodesic angle in degrees, arccos((tr(R_gt^T R_est) - 1) / 2) with the
/// argument clamped to [-1, 1].
double rre(const Mat3& r_est, const Mat3& r_gt);

/// Euclidean distance between translations.
double ate(const Vec3& t_est, const Vec3& t_gt);

/// |s_est - s_gt| / s_gt * 100. Throws ValidationError unless s_gt > 0.
double scale_error(double s_est, double s_gt);

MetricSet compute_metrics(const Sim3& estimate, const Sim3& ground_truth);

}  // namespace gsa
