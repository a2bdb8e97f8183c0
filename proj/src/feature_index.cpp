#include "gsa/feature_index.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>

#include "gsa/error.hpp"

namespace gsa {

namespace {

double box_distance2(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double below = lo[k] - p[k];
    const double above = p[k] - hi[k];
    const double d = std::max({below, above, 0.0});
    d2 += d * d;
  }
  return d2;
}

}  // namespace

FeatureSpatialIndex::FeatureSpatialIndex(std::span<const Vec3> positions,
                                         std::span<const Vec3> features, std::size_t leaf_size)
    : positions_(positions.begin(), positions.end()),
      features_(features.begin(), features.end()),
      leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (positions_.empty()) throw ValidationError("cannot index an empty model");
  if (features_.size() != positions_.size()) {
    throw ValidationError("feature count does not match position count");
  }
  order_.resize(positions_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * positions_.size() / leaf_size_ + 1);
  build(0, order_.size());
}

FeatureSpatialIndex::FeatureSpatialIndex(const GaussianModel& target)
    : FeatureSpatialIndex(target.positions(), target.features()) {}

int FeatureSpatialIndex::build(std::size_t begin, std::size_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.box_lo = node.box_hi = positions_[order_[begin]];
  node.feat_lo = node.feat_hi = features_[order_[begin]];
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t idx = order_[i];
    node.box_lo = node.box_lo.cwiseMin(positions_[idx]);
    node.box_hi = node.box_hi.cwiseMax(positions_[idx]);
    node.feat_lo = node.feat_lo.cwiseMin(features_[idx]);
    node.feat_hi = node.feat_hi.cwiseMax(features_[idx]);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  (node.box_hi - node.box_lo).maxCoeff(&axis);
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double pa = positions_[a][axis];
                     const double pb = positions_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void FeatureSpatialIndex::search(int node_id, const Vec3& p, const Vec3& f, double tau2,
                                 double& best_d2, std::size_t& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (box_distance2(p, node.box_lo, node.box_hi) > best_d2) return;
  if (tau2 < std::numeric_limits<double>::infinity() &&
      box_distance2(f, node.feat_lo, node.feat_hi) > tau2) {
    return;
  }
  if (node.left < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if (tau2 < std::numeric_limits<double>::infinity() &&
          (features_[idx] - f).squaredNorm() > tau2) {
        continue;
      }
      const double d2 = (positions_[idx] - p).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  const double dl = box_distance2(p, l.box_lo, l.box_hi);
  const double dr = box_distance2(p, r.box_lo, r.box_hi);
  if (dl <= dr) {
    search(node.left, p, f, tau2, best_d2, best);
    search(node.right, p, f, tau2, best_d2, best);
  } else {
    search(node.right, p, f, tau2, best_d2, best);
    search(node.left, p, f, tau2, best_d2, best);
  }
}

std::optional<std::size_t> FeatureSpatialIndex::nearest(const Vec3& position, const Vec3& feature,
                                                        double tau_f) const {
  const double inf = std::numeric_limits<double>::infinity();
  const double tau2 = tau_f == inf ? inf : tau_f * tau_f;
  double best_d2 = inf;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  search(0, position, feature, tau2, best_d2, best);
  if (best == std::numeric_limits<std::size_t>::max()) return std::nullopt;
  return best;
}

std::vector<std::size_t> FeatureSpatialIndex::k_nearest(const Vec3& position, std::size_t k) const {
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> heap;  // worst candidate on top
  k = std::min(k, positions_.size());
  if (k == 0) return {};

  // Explicit stack; children visited nearest-first.
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    const double bound = box_distance2(position, node.box_lo, node.box_hi);
    if (heap.size() == k && bound > heap.top().first) continue;
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Entry e{(positions_[idx] - position).squaredNorm(), idx};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_distance2(position, l.box_lo, l.box_hi);
    const double dr = box_distance2(position, r.box_lo, r.box_hi);
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

}  // namespace gsa
