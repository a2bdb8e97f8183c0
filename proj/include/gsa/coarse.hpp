#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gsa/error.hpp"
#include "gsa/feature_index.hpp"
#include "gsa/gaussian_model.hpp"
#include "gsa/orientation.hpp"

namespace gsa {

struct CoarseConfig {
  double tau_f = 0.01;
  int max_iterations = 6;
  double convergence_eps = 1e-6;
  /// Cap on source points used per iteration; unset uses every point.
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 0;
};

void validate_coarse_config(const CoarseConfig& cfg);

struct CoarseIteration {
  int iteration = 0;
  std::size_t matched = 0;
  std::size_t unmatched = 0;
  /// Mean squared residual of the matched pairs before and after this
  /// iteration's closed-form solve.
  double residual_before = 0.0;
  double residual_after = 0.0;
  /// Accumulated source-to-target transform after this iteration.
  Sim3 transform;
  /// Largest feature distance among the accepted matches.
  double max_feature_distance = 0.0;
};

using CoarseTrace = std::vector<CoarseIteration>;

struct Matches {
  CorrespondenceSet pairs;
  std::vector<std::size_t> source_indices;
  std::vector<std::size_t> target_indices;
  std::size_t unmatched = 0;
};

/// Thrown when fewer than 3 sources found a feature-compatible target.
/// Carries the partial trace of the registration that hit it, if any.
class InsufficientMatchesError : public Error {
 public:
  InsufficientMatchesError(std::size_t survivors, CoarseTrace trace = {});
  std::size_t survivors() const { return survivors_; }
  const CoarseTrace& trace() const { return trace_; }

 private:
  std::size_t survivors_;
  CoarseTrace trace_;
};

/// For every source point: keep only targets within tau_f in feature space,
/// then take the spatially closest of those. Sources without any candidate
/// are dropped.
Matches find_correspondences(std::span<const Vec3> source_positions,
                             std::span<const Vec3> source_features,
                             const FeatureSpatialIndex& index, double tau_f);

struct CoarseResult {
  Sim3 transform;
  CoarseTrace trace;
};

/// Feature-guided iterative absolute orientation. Starts from the identity,
/// alternates matching and the closed-form Sim(3) solve, and stops after
/// max_iterations or once an increment is within convergence_eps of the
/// identity.
CoarseResult coarse_register(const GaussianModel& source, const GaussianModel& target,
                             const CoarseConfig& cfg);

}  // namespace gsa
