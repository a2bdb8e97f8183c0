#pragma once

#include <string>
#include <vector>

#include "gsa/render.hpp"

namespace gsa {

enum class ViewStrategy { diverse_fibonacci, manual };

std::string to_string(ViewStrategy s);
ViewStrategy view_strategy_from_string(const std::string& name);

struct FineConfig {
  int num_views = 3;
  int iterations = 60;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  RenderMode mode = RenderMode::feature;
  ViewStrategy view_strategy = ViewStrategy::diverse_fibonacci;
  /// Used only with ViewStrategy::manual.
  std::vector<CameraPose> manual_views;
  int width = 128;
  int height = 128;
  RenderSettings render;
};

void validate_fine_config(const FineConfig& cfg);

/// Focal length that makes a sphere seen from 2.5 radii away fill ~95% of
/// the image width.
Intrinsics default_intrinsics(int width, int height);

/// Cameras on a Fibonacci sphere of radius 2.5x the target's bounding radius,
/// all aimed at the target centroid. n = 1 sits on +z. Manual strategy
/// returns `manual` unchanged.
std::vector<CameraPose> select_views(const GaussianModel& target, int n, ViewStrategy strategy,
                                     int width = 128, int height = 128,
                                     const std::vector<CameraPose>& manual = {});

struct FineIteration {
  int iteration = 0;
  double loss = 0.0;
  /// Transform at which `loss` was evaluated.
  Sim3 transform;
  /// Chart increment applied after this evaluation (zero for the last one).
  Vec7 step = Vec7::Zero();
};

struct FineResult {
  /// Lowest-loss iterate, which may be the initial transform.
  Sim3 transform;
  double loss = 0.0;
  int best_iteration = 0;
  Sim3 last_transform;
  double last_loss = 0.0;
  Vec3 pivot = Vec3::Zero();
  std::vector<FineIteration> trace;
};

/// Adam over the 7-parameter chart (axis-angle increment, translation,
/// log-scale) minimising the multi-view consistency loss between the
/// transformed source and the target, starting from t0.
FineResult fine_register(const Sim3& t0, const GaussianModel& source, const GaussianModel& target,
                         const FineConfig& cfg);

}  // namespace gsa
