#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gsa/gaussian_model.hpp"
#include "gsa/render.hpp"

namespace gsa::testing {

Mat3 random_rotation(std::mt19937_64& rng);
Sim3 random_transform(std::mt19937_64& rng, double max_log_scale = std::log(10.0),
                      double translation = 5.0);
/// Random SPD matrix with eigenvalues in [lo, hi].
Mat3 random_spd(std::mt19937_64& rng, double lo, double hi);
/// n Gaussians with normally distributed means (std `spread`), random
/// anisotropic covariances, opacity in [0.3, 0.9] and uniform colour/feature.
GaussianModel random_cloud(std::mt19937_64& rng, std::size_t n, double spread = 0.5);

/// Smallest gap between camera depths of the model under t over all pairs
/// and cameras.
double min_depth_gap(const GaussianModel& model, const Sim3& t, const std::vector<CameraPose>& cams);

/// Small random scene for gradient checks: anisotropic source and target
/// clouds, three views and a transform near the identity. Drawn by rejection
/// until every pair of transformed source depths is at least `min_gap` apart
/// in every view, so no finite-difference stencil can reorder the splats.
struct GradientCase {
  GaussianModel source;
  GaussianModel target;
  Sim3 transform;
  std::vector<CameraPose> cameras;
};
GradientCase general_position_case(std::mt19937_64& rng, std::size_t n = 16, double min_gap = 4e-3,
                                   int resolution = 64);

/// Central differences of the objective on the chart at t with steps 1e-4
/// rad, 1e-4 * length_scale and 1e-4 in log scale.
Vec7 finite_difference_gradient(const MultiViewObjective& objective, const Sim3& t,
                                double length_scale);

/// Largest per-component relative error of `analytic` against `reference`;
/// components whose reference is below `floor` in magnitude are compared
/// absolutely against `floor`.
double gradient_relative_error(const Vec7& analytic, const Vec7& reference, double floor);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace gsa::testing
