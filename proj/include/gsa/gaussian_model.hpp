#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gsa/sim3.hpp"

namespace gsa {

/// One splat. The DC colour stands in for the full SH expansion; `feature`
/// is the 3-channel semantic/geometric descriptor carried by the model.
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  double opacity = 1.0;
  Vec3 color_dc = Vec3::Constant(0.5);
  Vec3 feature = Vec3::Zero();
};

struct GaussianModel {
  std::vector<Gaussian> gaussians;
  std::map<std::string, std::string> metadata;
  /// False when the model was loaded from a file without feature channels.
  bool has_features = true;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }

  std::vector<Vec3> positions() const;
  std::vector<Vec3> features() const;
  Vec3 centroid() const;
  /// Max distance from the centroid to any mean.
  double bounding_radius() const;
  /// Diagonal of the axis-aligned bounding box of the means.
  double diameter() const;
};

/// Throws ValidationError describing the first violated invariant.
void validate_gaussian(const Gaussian& g, std::size_t index = 0);
void validate_model(const GaussianModel& model);

/// Positions map through t; covariances become s^2 R S R^T. Opacity, colour
/// and feature are copied untouched.
GaussianModel transform_model(const Sim3& t, const GaussianModel& model);

struct BgRemovalConfig {
  Vec3 background_color = Vec3::Zero();
  double color_distance_threshold = 0.08;
  double opacity_floor = 0.05;
};

/// Drops Gaussians whose colour is within the threshold of the background
/// colour, or whose opacity is below the floor. The number removed is stored
/// under metadata["removed_count"]. Throws if nothing would survive.
GaussianModel remove_background_gaussians(const GaussianModel& model, const BgRemovalConfig& cfg);

/// Concatenates b after a. Metadata of a wins; features are kept only when
/// both inputs carry them.
GaussianModel merge_models(const GaussianModel& a, const GaussianModel& b);

}  // namespace gsa
