#include "gsa/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace gsa {

InsufficientMatchesError::InsufficientMatchesError(std::size_t survivors, CoarseTrace trace)
    : Error("insufficient matches: only " + std::to_string(survivors) +
            " feature-compatible correspondences (need 3)"),
      survivors_(survivors),
      trace_(std::move(trace)) {}

void validate_coarse_config(const CoarseConfig& cfg) {
  if (!(cfg.tau_f > 0.0)) throw ValidationError("tau_f must be positive");
  if (cfg.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (!(cfg.convergence_eps >= 0.0)) throw ValidationError("convergence_eps must be >= 0");
  if (cfg.subsample && *cfg.subsample < 3) throw ValidationError("subsample must be >= 3");
}

Matches find_correspondences(std::span<const Vec3> source_positions,
                             std::span<const Vec3> source_features,
                             const FeatureSpatialIndex& index, double tau_f) {
  Matches m;
  m.pairs.source_points.reserve(source_positions.size());
  m.pairs.target_points.reserve(source_positions.size());
  for (std::size_t i = 0; i < source_positions.size(); ++i) {
    const auto hit = index.nearest(source_positions[i], source_features[i], tau_f);
    if (!hit) {
      ++m.unmatched;
      continue;
    }
    m.pairs.source_points.push_back(source_positions[i]);
    m.pairs.target_points.push_back(index.position(*hit));
    m.source_indices.push_back(i);
    m.target_indices.push_back(*hit);
  }
  if (m.pairs.size() < 3) throw InsufficientMatchesError(m.pairs.size());
  return m;
}

namespace {

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

CoarseResult coarse_register(const GaussianModel& source, const GaussianModel& target,
                             const CoarseConfig& cfg) {
  validate_coarse_config(cfg);
  if (source.empty() || target.empty()) throw ValidationError("coarse registration needs non-empty models");
  if (!source.has_features || !target.has_features) {
    throw ValidationError("coarse registration needs featured models");
  }

  const FeatureSpatialIndex index(target);
  const double length_scale = std::max(target.diameter(), 1e-12);
  const std::vector<Vec3> src_pos = source.positions();
  const std::vector<Vec3> src_feat = source.features();

  CoarseResult result;
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    std::vector<std::size_t> subset;
    if (cfg.subsample) {
      subset = draw_subset(src_pos.size(), *cfg.subsample,
                           cfg.seed + static_cast<std::uint64_t>(k));
    } else {
      subset.resize(src_pos.size());
      std::iota(subset.begin(), subset.end(), std::size_t{0});
    }
    std::vector<Vec3> moved;
    std::vector<Vec3> feats;
    moved.reserve(subset.size());
    feats.reserve(subset.size());
    for (std::size_t i : subset) {
      moved.push_back(result.transform.apply(src_pos[i]));
      feats.push_back(src_feat[i]);
    }

    Matches matches;
    try {
      matches = find_correspondences(moved, feats, index, cfg.tau_f);
    } catch (const InsufficientMatchesError& e) {
      throw InsufficientMatchesError(e.survivors(), result.trace);
    }

    const OrientationResult solved = solve_absolute_orientation(matches.pairs);
    const Sim3& step = solved.transform;
    const double n = static_cast<double>(matches.pairs.size());

    CoarseIteration it;
    it.iteration = k;
    it.matched = matches.pairs.size();
    it.unmatched = matches.unmatched;
    it.residual_before = alignment_residual(Sim3::identity(), matches.pairs) / n;
    it.residual_after = alignment_residual(step, matches.pairs) / n;
    for (std::size_t j = 0; j < matches.source_indices.size(); ++j) {
      const double fd =
          (feats[matches.source_indices[j]] - index.feature(matches.target_indices[j])).norm();
      it.max_feature_distance = std::max(it.max_feature_distance, fd);
    }

    result.transform = step * result.transform;
    it.transform = result.transform;
    const bool finite = std::isfinite(result.transform.scale()) &&
                        result.transform.translation().allFinite() &&
                        result.transform.rotation().allFinite() && result.transform.scale() > 0.0;
    result.trace.push_back(it);
    if (!finite) throw NumericalError("coarse registration diverged at iteration " + std::to_string(k));

    if (sim3_distance_from_identity(step, length_scale) < cfg.convergence_eps) break;
  }
  return result;
}

}  // namespace gsa
