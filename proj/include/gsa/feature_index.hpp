#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gsa/gaussian_model.hpp"

namespace gsa {

/// KD-tree over target positions whose nodes also carry the bounding box of
/// their points' features.
///
/// nearest() answers: among targets j with |f_j - f| <= tau_f, which one is
/// spatially closest to p? Results are identical to an exhaustive scan,
/// including ties, which go to the lowest target index. Subtrees are pruned
/// both by spatial distance and by feature-box distance, so small thresholds
/// stay cheap even when the query sits far from its candidates.
class FeatureSpatialIndex {
 public:
  FeatureSpatialIndex(std::span<const Vec3> positions, std::span<const Vec3> features,
                      std::size_t leaf_size = 8);
  explicit FeatureSpatialIndex(const GaussianModel& target);

  static constexpr double kNoPruning = std::numeric_limits<double>::infinity();

  std::optional<std::size_t> nearest(const Vec3& position, const Vec3& feature,
                                     double tau_f) const;

  /// Indices of the k spatially nearest points (features ignored), closest
  /// first, ties by index.
  std::vector<std::size_t> k_nearest(const Vec3& position, std::size_t k) const;

  std::size_t size() const { return positions_.size(); }
  const Vec3& position(std::size_t i) const { return positions_[i]; }
  const Vec3& feature(std::size_t i) const { return features_[i]; }

 private:
  struct Node {
    Vec3 box_lo, box_hi;
    Vec3 feat_lo, feat_hi;
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, const Vec3& p, const Vec3& f, double tau2, double& best_d2,
              std::size_t& best) const;

  std::vector<Vec3> positions_;
  std::vector<Vec3> features_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// |a - b|^2 <= tau^2, with tau = inf accepting everything.
inline bool within_feature_threshold(const Vec3& a, const Vec3& b, double tau_f) {
  if (tau_f == std::numeric_limits<double>::infinity()) return true;
  return (a - b).squaredNorm() <= tau_f * tau_f;
}

}  // namespace gsa
