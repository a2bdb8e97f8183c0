#include "gsa/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gsa/error.hpp"

namespace gsa {

double rre(const Mat3& r_est, const Mat3& r_gt) {
  if (!is_proper_rotation(r_est, 1e-6) || !is_proper_rotation(r_gt, 1e-6)) {
    throw ValidationError("rre needs proper rotations");
  }
  const double c = std::clamp(((r_gt.transpose() * r_est).trace() - 1.0) / 2.0, -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

double ate(const Vec3& t_est, const Vec3& t_gt) { return (t_est - t_gt).norm(); }

double scale_error(double s_est, double s_gt) {
  if (!(s_gt > 0.0)) throw ValidationError("ground-truth scale must be positive");
  return std::abs(s_est - s_gt) / s_gt * 100.0;
}

MetricSet compute_metrics(const Sim3& estimate, const Sim3& ground_truth) {
  return MetricSet{rre(estimate.rotation(), ground_truth.rotation()),
                   ate(estimate.translation(), ground_truth.translation()),
                   scale_error(estimate.scale(), ground_truth.scale())};
}

}  // namespace gsa
