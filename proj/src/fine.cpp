#include "gsa/fine.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gsa/error.hpp"

namespace gsa {

std::string to_string(ViewStrategy s) {
  return s == ViewStrategy::diverse_fibonacci ? "diverse_fibonacci" : "manual";
}

ViewStrategy view_strategy_from_string(const std::string& name) {
  if (name == "diverse_fibonacci") return ViewStrategy::diverse_fibonacci;
  if (name == "manual") return ViewStrategy::manual;
  throw ValidationError("unknown view strategy '" + name + "'");
}

void validate_fine_config(const FineConfig& cfg) {
  if (cfg.num_views < 1) throw ValidationError("fine registration needs at least one view");
  if (cfg.iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (cfg.width <= 0 || cfg.height <= 0) throw ValidationError("resolution must be positive");
  if (cfg.view_strategy == ViewStrategy::manual && cfg.manual_views.empty()) {
    throw ValidationError("manual view strategy needs camera poses");
  }
}

namespace {
constexpr double kViewDistance = 2.5;
}

Intrinsics default_intrinsics(int width, int height) {
  const double half_angle = std::asin(1.0 / kViewDistance);
  const double f = 0.95 * (0.5 * width) / std::tan(half_angle);
  return Intrinsics{f, f, 0.5 * (width - 1), 0.5 * (height - 1)};
}

std::vector<CameraPose> select_views(const GaussianModel& target, int n, ViewStrategy strategy,
                                     int width, int height, const std::vector<CameraPose>& manual) {
  if (strategy == ViewStrategy::manual) return manual;
  if (n < 1) throw ValidationError("need at least one view");
  const Vec3 center = target.centroid();
  const double radius = kViewDistance * std::max(target.bounding_radius(), 1e-9);
  const Intrinsics intr = default_intrinsics(width, height);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));

  std::vector<CameraPose> cams;
  cams.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vec3 dir = Vec3::UnitZ();
    if (n > 1) {
      const double z = 1.0 - 2.0 * k / static_cast<double>(n - 1);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      dir = Vec3(r * std::cos(phi), r * std::sin(phi), z);
    }
    const Vec3 eye = center + radius * dir;
    cams.push_back(CameraPose::look_at(eye, center, Vec3::UnitY(), intr, width, height));
  }
  return cams;
}

FineResult fine_register(const Sim3& t0, const GaussianModel& source, const GaussianModel& target,
                         const FineConfig& cfg) {
  validate_fine_config(cfg);
  if (cfg.mode == RenderMode::feature && (!source.has_features || !target.has_features)) {
    throw ValidationError("feature-mode fine registration needs featured models");
  }
  const std::vector<CameraPose> cams =
      select_views(target, cfg.num_views, cfg.view_strategy, cfg.width, cfg.height, cfg.manual_views);
  const MultiViewObjective objective(source, target, cams, cfg.mode, cfg.render);

  FineResult result;
  result.pivot = objective.pivot();
  Sim3 current = t0;
  Vec7 m1 = Vec7::Zero();
  Vec7 m2 = Vec7::Zero();
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= cfg.iterations; ++it) {
    const LossGradient lg = objective.evaluate(current);
    if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
      throw NumericalError("fine registration produced a non-finite loss at iteration " +
                           std::to_string(it));
    }
    FineIteration rec;
    rec.iteration = it;
    rec.loss = lg.loss;
    rec.transform = current;
    if (lg.loss < best) {
      best = lg.loss;
      result.transform = current;
      result.loss = lg.loss;
      result.best_iteration = it;
    }
    if (it < cfg.iterations) {
      const int k = it + 1;
      m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * lg.gradient;
      m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * lg.gradient.cwiseProduct(lg.gradient);
      const Vec7 mhat = m1 / (1.0 - std::pow(cfg.beta1, k));
      const Vec7 vhat = m2 / (1.0 - std::pow(cfg.beta2, k));
      const Vec7 step =
          -cfg.learning_rate * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg.adam_eps).matrix());
      rec.step = step;
      current = apply_chart_step(current, step, objective.pivot());
    }
    result.trace.push_back(rec);
  }
  result.last_transform = result.trace.back().transform;
  result.last_loss = result.trace.back().loss;
  return result;
}

}  // namespace gsa
