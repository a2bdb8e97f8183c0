#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsa/coarse.hpp"
#include "gsa/fine.hpp"
#include "gsa/metrics.hpp"
#include "gsa/synth.hpp"

namespace gsa {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// All from_json functions throw ValidationError on missing or mistyped
// fields. Absent optional fields keep their defaults.

Json to_json(const Sim3& t);
Sim3 sim3_from_json(const Json& j);

Json to_json(const ShapeParams& p);
ShapeParams shape_params_from_json(const Json& j);

Json to_json(const PerturbBounds& b);
PerturbBounds perturb_bounds_from_json(const Json& j);

Json to_json(const CoarseConfig& c);
CoarseConfig coarse_config_from_json(const Json& j);

Json to_json(const RenderSettings& s);
RenderSettings render_settings_from_json(const Json& j);

/// Manual views are written as cameras.
Json to_json(const FineConfig& c);
FineConfig fine_config_from_json(const Json& j);

Json to_json(const BgRemovalConfig& c);
BgRemovalConfig bg_removal_config_from_json(const Json& j);

/// Accepts either {rotation (9, row-major), translation, ...} or the
/// look-at form {eye, target, up, ...}. Intrinsics default to
/// default_intrinsics(width, height).
Json to_json(const CameraPose& cam);
CameraPose camera_from_json(const Json& j);

Json to_json(const MetricSet& m);
MetricSet metric_set_from_json(const Json& j);

struct ScenarioManifest {
  ScenarioKind kind = ScenarioKind::same_object;
  std::string source_path;
  std::string target_path;
  Sim3 ground_truth;
  Sim3 applied;
  std::optional<ShapeParams> params_a;
  std::optional<ShapeParams> params_b;
  std::optional<PerturbBounds> bounds;
};

Json to_json(const ScenarioManifest& m);
ScenarioManifest scenario_manifest_from_json(const Json& j);

struct RegistrationReport {
  std::string stage = "both";
  Sim3 estimated_transform;
  std::optional<Sim3> coarse_transform;
  /// final = fine_delta * coarse
  std::optional<Sim3> fine_delta;
  CoarseTrace coarse_trace;
  std::vector<FineIteration> fine_trace;
  std::optional<int> fine_best_iteration;
  std::optional<MetricSet> metrics;
  double coarse_wall_time_ms = 0.0;
  double fine_wall_time_ms = 0.0;
  Json config = Json::object();
};

Json to_json(const RegistrationReport& r);
RegistrationReport registration_report_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace gsa
