#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gsa/gaussian_model.hpp"

namespace gsa {

/// Rotation and per-axis log standard deviations with
/// covariance = R diag(exp(2 log_scale)) R^T.
struct CovarianceFactors {
  Quat rotation = Quat::Identity();
  Vec3 log_scale = Vec3::Zero();
};

/// Deterministic factorisation. Among the equivalent eigenbases the one
/// closest to the identity is chosen, so an axis-aligned covariance keeps its
/// axis order (diag(4,1,1) gives log_scale (ln 2, 0, 0)). Repeated eigenvalues
/// get a canonical basis built from the distinct axis; isotropic covariances
/// get the identity. Throws ValidationError if the matrix is not SPD.
CovarianceFactors decompose_covariance(const Mat3& covariance);
Mat3 covariance_from_factors(const Quat& rotation, const Vec3& log_scale);

/// Binary little-endian 3DGS vertex layout plus f_feat_0..2. Metadata keys
/// are kept as "comment meta <key>=<value>" header lines.
std::string encode_ply(const GaussianModel& model);
GaussianModel decode_ply(std::string_view bytes);

void write_ply(const GaussianModel& model, const std::filesystem::path& path);
GaussianModel read_ply(const std::filesystem::path& path);

}  // namespace gsa
