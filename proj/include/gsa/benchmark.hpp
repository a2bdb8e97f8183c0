#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsa/serialize.hpp"

namespace gsa {

/// Registration pipelines a benchmark group can run on every scenario.
///   coarse              feature-guided coarse stage
///   coarse+fine         coarse followed by feature-mode fine refinement
///   coarse_feature_off  coarse stage with tau_f = inf (plain geometric ICP)
///   coarse+fine_rgb     coarse followed by colour-mode fine refinement
inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> kMethods = {"coarse", "coarse+fine", "coarse_feature_off",
                                                    "coarse+fine_rgb"};
  return kMethods;
}

struct BenchmarkGroup {
  std::string name;
  ScenarioKind kind = ScenarioKind::same_object;
  int trials = 0;
  std::uint64_t seed = 0;
  ShapeParams shape;
  /// Base shape of the target instance for cross-instance groups.
  std::optional<ShapeParams> shape_b;
  /// Cross-instance variation: each trial draws both instances with
  /// exponents and half extents scaled by exp(N(0, jitter^2)).
  double exponent_jitter = 0.0;
  double extent_jitter = 0.0;
  PerturbBounds bounds;
  /// Compose the random perturbation with a 180 degree turn about this
  /// canonical axis.
  std::optional<Vec3> flip_axis;
  /// Pre-built scenario manifests; when set, `trials` and the generators are
  /// ignored.
  std::vector<std::filesystem::path> scenario_files;
  std::vector<std::string> methods = {"coarse", "coarse+fine"};
  CoarseConfig coarse;
  FineConfig fine;
};

struct BenchmarkSuite {
  std::string name = "benchmark";
  std::vector<BenchmarkGroup> groups;
};

/// Relative scenario paths resolve against `base_dir`.
BenchmarkSuite benchmark_suite_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Json to_json(const BenchmarkSuite& suite);

struct TrialRow {
  std::string scenario_id;
  std::string group;
  int trial = 0;
  std::string method;
  ScenarioKind kind = ScenarioKind::same_object;
  bool ok = false;
  std::string error;
  std::optional<MetricSet> metrics;
  /// RRE of the coarse stage alone, for rows that also ran fine.
  std::optional<double> coarse_rre_deg;
  int coarse_iterations = 0;
  std::optional<int> fine_best_iteration;
  Sim3 estimate;
  Sim3 ground_truth;
};

struct AggregateRow {
  std::string group;
  std::string method;
  bool rotation_only = false;
  int trials = 0;
  int failures = 0;
  double rre_mean = 0.0, rre_median = 0.0;
  double ate_mean = 0.0, ate_median = 0.0;
  double scale_error_mean = 0.0, scale_error_median = 0.0;
  /// Fraction of successful rows whose final RRE is no worse than coarse.
  std::optional<double> fine_not_worse_fraction;
};

struct BenchmarkReport {
  std::string suite;
  std::vector<TrialRow> rows;
  std::vector<AggregateRow> aggregates;
};

/// Runs every scenario of every group with every method of that group.
/// Trials run on up to `threads` workers; rows are ordered by group, trial
/// and method regardless of scheduling. Trial failures become error rows.
BenchmarkReport run_benchmark(const BenchmarkSuite& suite, int threads = 1);

Json to_json(const BenchmarkReport& report);
/// Aligned text table of the aggregates.
std::string format_table(const BenchmarkReport& report);

/// Writes benchmark_report.json and benchmark_table.txt into `dir`.
void write_benchmark_outputs(const BenchmarkReport& report, const std::filesystem::path& dir);

/// Deterministic seed derivation for trial-level generators.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream);

double median(std::vector<double> values);

}  // namespace gsa
