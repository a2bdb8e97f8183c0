#include "gsa/gaussian_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "gsa/error.hpp"

namespace gsa {

std::vector<Vec3> GaussianModel::positions() const {
  std::vector<Vec3> out;
  out.reserve(gaussians.size());
  for (const auto& g : gaussians) out.push_back(g.position);
  return out;
}

std::vector<Vec3> GaussianModel::features() const {
  std::vector<Vec3> out;
  out.reserve(gaussians.size());
  for (const auto& g : gaussians) out.push_back(g.feature);
  return out;
}

Vec3 GaussianModel::centroid() const {
  Vec3 c = Vec3::Zero();
  if (gaussians.empty()) return c;
  for (const auto& g : gaussians) c += g.position;
  return c / static_cast<double>(gaussians.size());
}

double GaussianModel::bounding_radius() const {
  const Vec3 c = centroid();
  double r = 0.0;
  for (const auto& g : gaussians) r = std::max(r, (g.position - c).norm());
  return r;
}

double GaussianModel::diameter() const {
  if (gaussians.empty()) return 0.0;
  Vec3 lo = gaussians.front().position;
  Vec3 hi = lo;
  for (const auto& g : gaussians) {
    lo = lo.cwiseMin(g.position);
    hi = hi.cwiseMax(g.position);
  }
  return (hi - lo).norm();
}

namespace {

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

[[noreturn]] void fail(std::size_t index, const std::string& what) {
  std::ostringstream os;
  os << "gaussian " << index << ": " << what;
  throw ValidationError(os.str());
}

}  // namespace

void validate_gaussian(const Gaussian& g, std::size_t index) {
  if (!g.position.allFinite()) fail(index, "non-finite position");
  const Mat3& s = g.covariance;
  if (!s.allFinite()) fail(index, "non-finite covariance");
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, s.cwiseAbs().maxCoeff())) {
    fail(index, "covariance is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(s, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) fail(index, "covariance is not positive-definite");
  if (!in_unit_interval(g.opacity)) fail(index, "opacity outside [0,1]");
  for (int c = 0; c < 3; ++c) {
    if (!in_unit_interval(g.color_dc[c])) fail(index, "color_dc outside [0,1]");
    if (!in_unit_interval(g.feature[c])) fail(index, "feature outside [0,1]");
  }
}

void validate_model(const GaussianModel& model) {
  if (model.empty()) throw ValidationError("empty model");
  for (std::size_t i = 0; i < model.gaussians.size(); ++i) validate_gaussian(model.gaussians[i], i);
}

GaussianModel transform_model(const Sim3& t, const GaussianModel& model) {
  GaussianModel out;
  out.metadata = model.metadata;
  out.has_features = model.has_features;
  out.gaussians.reserve(model.gaussians.size());
  const Mat3& r = t.rotation();
  const double s2 = t.scale() * t.scale();
  for (const auto& g : model.gaussians) {
    Gaussian h = g;
    h.position = t.apply(g.position);
    Mat3 cov = s2 * (r * g.covariance * r.transpose());
    h.covariance = 0.5 * (cov + cov.transpose());
    out.gaussians.push_back(h);
  }
  return out;
}

GaussianModel remove_background_gaussians(const GaussianModel& model, const BgRemovalConfig& cfg) {
  if (cfg.color_distance_threshold < 0.0 || cfg.opacity_floor < 0.0) {
    throw ValidationError("background removal thresholds must be non-negative");
  }
  GaussianModel out;
  out.metadata = model.metadata;
  out.has_features = model.has_features;
  std::size_t removed = 0;
  for (const auto& g : model.gaussians) {
    const bool background = (g.color_dc - cfg.background_color).norm() <= cfg.color_distance_threshold;
    if (background || g.opacity < cfg.opacity_floor) {
      ++removed;
      continue;
    }
    out.gaussians.push_back(g);
  }
  if (out.gaussians.empty()) {
    throw ValidationError("background removal would remove all " + std::to_string(removed) +
                          " gaussians");
  }
  out.metadata["removed_count"] = std::to_string(removed);
  return out;
}

GaussianModel merge_models(const GaussianModel& a, const GaussianModel& b) {
  GaussianModel out;
  out.metadata = a.metadata;
  out.has_features = a.has_features && b.has_features;
  out.gaussians.reserve(a.size() + b.size());
  out.gaussians.insert(out.gaussians.end(), a.gaussians.begin(), a.gaussians.end());
  out.gaussians.insert(out.gaussians.end(), b.gaussians.begin(), b.gaussians.end());
  return out;
}

}  // namespace gsa
