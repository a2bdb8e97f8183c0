#include "gsa/benchmark.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "gsa/error.hpp"
#include "gsa/ply_io.hpp"

namespace gsa {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream) {
  // splitmix64 finaliser over a simple combination.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (trial + 1) + 0xbf58476d1ce4e5b9ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

void check_methods(const std::vector<std::string>& methods) {
  for (const auto& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ValidationError("unknown benchmark method '" + m + "'");
    }
  }
}

}  // namespace

BenchmarkSuite benchmark_suite_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("benchmark suite must be a JSON object");
  BenchmarkSuite suite;
  if (j.contains("name")) suite.name = j.at("name").get<std::string>();
  if (!j.contains("groups")) return suite;
  for (const Json& g : j.at("groups")) {
    BenchmarkGroup grp;
    try {
      grp.name = g.at("name").get<std::string>();
      if (g.contains("kind")) grp.kind = scenario_kind_from_string(g.at("kind").get<std::string>());
      if (g.contains("trials")) grp.trials = g.at("trials").get<int>();
      if (g.contains("seed")) grp.seed = g.at("seed").get<std::uint64_t>();
      if (g.contains("shape")) grp.shape = shape_params_from_json(g.at("shape"));
      if (g.contains("shape_b")) grp.shape_b = shape_params_from_json(g.at("shape_b"));
      if (g.contains("exponent_jitter")) grp.exponent_jitter = g.at("exponent_jitter").get<double>();
      if (g.contains("extent_jitter")) grp.extent_jitter = g.at("extent_jitter").get<double>();
      if (g.contains("bounds")) grp.bounds = perturb_bounds_from_json(g.at("bounds"));
      if (g.contains("flip_axis") && !g.at("flip_axis").is_null()) {
        const auto a = g.at("flip_axis").get<std::vector<double>>();
        if (a.size() != 3 || !(Vec3(a[0], a[1], a[2]).norm() > 0.0)) {
          throw ValidationError("flip_axis needs a non-zero 3-vector");
        }
        grp.flip_axis = Vec3(a[0], a[1], a[2]).normalized();
      }
      if (g.contains("scenarios")) {
        for (const Json& s : g.at("scenarios")) {
          std::filesystem::path p = s.get<std::string>();
          grp.scenario_files.push_back(p.is_absolute() ? p : base_dir / p);
        }
      }
      if (g.contains("methods")) grp.methods = g.at("methods").get<std::vector<std::string>>();
      if (g.contains("coarse")) grp.coarse = coarse_config_from_json(g.at("coarse"));
      if (g.contains("fine")) grp.fine = fine_config_from_json(g.at("fine"));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("bad benchmark group '" + grp.name + "': " + e.what());
    }
    if (grp.trials < 0) throw ValidationError("trials must be >= 0");
    if (grp.exponent_jitter < 0.0 || grp.extent_jitter < 0.0) {
      throw ValidationError("jitter must be >= 0");
    }
    check_methods(grp.methods);
    suite.groups.push_back(std::move(grp));
  }
  return suite;
}

Json to_json(const BenchmarkSuite& suite) {
  Json groups = Json::array();
  for (const auto& g : suite.groups) {
    Json j{{"name", g.name},
           {"kind", to_string(g.kind)},
           {"trials", g.trials},
           {"seed", g.seed},
           {"shape", to_json(g.shape)},
           {"exponent_jitter", g.exponent_jitter},
           {"extent_jitter", g.extent_jitter},
           {"bounds", to_json(g.bounds)},
           {"methods", g.methods},
           {"coarse", to_json(g.coarse)},
           {"fine", to_json(g.fine)}};
    if (g.shape_b) j["shape_b"] = to_json(*g.shape_b);
    if (g.flip_axis) j["flip_axis"] = Json::array({(*g.flip_axis)[0], (*g.flip_axis)[1], (*g.flip_axis)[2]});
    if (!g.scenario_files.empty()) {
      Json files = Json::array();
      for (const auto& f : g.scenario_files) files.push_back(f.string());
      j["scenarios"] = files;
    }
    groups.push_back(j);
  }
  return Json{{"schema_version", kSchemaVersion}, {"name", suite.name}, {"groups", groups}};
}

namespace {

struct TrialJob {
  const BenchmarkGroup* group = nullptr;
  int trial = 0;
};

ShapeParams jittered(const ShapeParams& base, double exp_jitter, double ext_jitter, std::uint64_t seed) {
  ShapeParams p = base;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto clamp_exp = [](double e) { return std::clamp(e, 0.3, 4.0); };
  if (exp_jitter > 0.0) {
    p.exponent_1 = clamp_exp(p.exponent_1 * std::exp(exp_jitter * normal(rng)));
    p.exponent_2 = clamp_exp(p.exponent_2 * std::exp(exp_jitter * normal(rng)));
  }
  if (ext_jitter > 0.0) {
    for (int k = 0; k < 3; ++k) p.half_extents[k] *= std::exp(ext_jitter * normal(rng));
  }
  return p;
}

Scenario build_scenario(const BenchmarkGroup& g, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  if (!g.scenario_files.empty()) {
    const auto& file = g.scenario_files[static_cast<std::size_t>(trial)];
    const ScenarioManifest m = scenario_manifest_from_json(read_json_file(file));
    const auto dir = file.parent_path();
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? path : dir / path;
    };
    Scenario sc;
    sc.source = read_ply(resolve(m.source_path));
    sc.target = read_ply(resolve(m.target_path));
    sc.ground_truth = m.ground_truth;
    sc.applied = m.applied;
    return sc;
  }
  ShapeParams a = g.shape;
  ShapeParams b = g.shape_b.value_or(g.shape);
  if (g.kind == ScenarioKind::cross_instance) {
    a = jittered(a, g.exponent_jitter, g.extent_jitter, derive_seed(g.seed, t, 4));
    b = jittered(b, g.exponent_jitter, g.extent_jitter, derive_seed(g.seed, t, 5));
  }
  a.seed = derive_seed(g.seed, t, 1);
  b.seed = derive_seed(g.seed, t, 2);
  PerturbBounds bounds = g.bounds;
  bounds.seed = derive_seed(g.seed, t, 3);
  Sim3 applied = random_sim3(bounds);
  if (g.flip_axis) {
    applied = applied * Sim3(1.0, rotation_from_axis_angle(std::numbers::pi * *g.flip_axis), Vec3::Zero());
  }
  return make_scenario(g.kind, a, b, applied);
}

std::string scenario_id(const BenchmarkGroup& g, int trial) {
  std::ostringstream os;
  os << g.name << '/' << std::setw(4) << std::setfill('0') << trial;
  return os.str();
}

MetricSet metrics_for(const Sim3& est, const Sim3& gt, ScenarioKind kind) {
  MetricSet m;
  m.rre_deg = rre(est.rotation(), gt.rotation());
  if (kind == ScenarioKind::same_object) {
    m.ate = ate(est.translation(), gt.translation());
    m.scale_error_pct = scale_error(est.scale(), gt.scale());
  }
  return m;
}

std::vector<TrialRow> run_trial(const TrialJob& job) {
  const BenchmarkGroup& g = *job.group;
  std::vector<TrialRow> rows;
  for (const auto& method : g.methods) {
    TrialRow row;
    row.scenario_id = scenario_id(g, job.trial);
    row.group = g.name;
    row.trial = job.trial;
    row.method = method;
    row.kind = g.kind;
    rows.push_back(row);
  }
  auto fail_all = [&](const std::string& msg) {
    for (auto& r : rows) r.error = msg;
  };

  Scenario sc;
  try {
    sc = build_scenario(g, job.trial);
  } catch (const std::exception& e) {
    fail_all(std::string("scenario: ") + e.what());
    return rows;
  }

  std::optional<CoarseResult> coarse;
  std::string coarse_error;
  auto get_coarse = [&]() -> const CoarseResult& {
    if (!coarse && coarse_error.empty()) {
      try {
        coarse = coarse_register(sc.source, sc.target, g.coarse);
      } catch (const std::exception& e) {
        coarse_error = e.what();
      }
    }
    if (!coarse) throw Error("coarse: " + coarse_error);
    return *coarse;
  };

  for (TrialRow& row : rows) {
    row.ground_truth = sc.ground_truth;
    try {
      if (row.method == "coarse" || row.method == "coarse+fine" || row.method == "coarse+fine_rgb") {
        const CoarseResult& c = get_coarse();
        row.coarse_iterations = static_cast<int>(c.trace.size());
        row.estimate = c.transform;
        if (row.method != "coarse") {
          FineConfig fc = g.fine;
          fc.mode = row.method == "coarse+fine_rgb" ? RenderMode::rgb : RenderMode::feature;
          const FineResult f = fine_register(c.transform, sc.source, sc.target, fc);
          row.estimate = f.transform;
          row.fine_best_iteration = f.best_iteration;
          row.coarse_rre_deg = rre(c.transform.rotation(), sc.ground_truth.rotation());
        }
      } else if (row.method == "coarse_feature_off") {
        CoarseConfig cc = g.coarse;
        cc.tau_f = FeatureSpatialIndex::kNoPruning;
        const CoarseResult c = coarse_register(sc.source, sc.target, cc);
        row.coarse_iterations = static_cast<int>(c.trace.size());
        row.estimate = c.transform;
      }
      row.metrics = metrics_for(row.estimate, sc.ground_truth, g.kind);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return rows;
}

std::vector<AggregateRow> aggregate(const BenchmarkSuite& suite, const std::vector<TrialRow>& rows) {
  std::vector<AggregateRow> out;
  for (const auto& g : suite.groups) {
    for (const auto& method : g.methods) {
      AggregateRow a;
      a.group = g.name;
      a.method = method;
      a.rotation_only = g.kind == ScenarioKind::cross_instance;
      std::vector<double> rre_v, ate_v, se_v;
      int not_worse = 0;
      int compared = 0;
      for (const auto& r : rows) {
        if (r.group != g.name || r.method != method) continue;
        ++a.trials;
        if (!r.ok) {
          ++a.failures;
          continue;
        }
        rre_v.push_back(r.metrics->rre_deg);
        ate_v.push_back(r.metrics->ate);
        se_v.push_back(r.metrics->scale_error_pct);
        if (r.coarse_rre_deg) {
          ++compared;
          if (r.metrics->rre_deg <= *r.coarse_rre_deg) ++not_worse;
        }
      }
      auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      };
      a.rre_mean = mean(rre_v);
      a.rre_median = median(rre_v);
      a.ate_mean = mean(ate_v);
      a.ate_median = median(ate_v);
      a.scale_error_mean = mean(se_v);
      a.scale_error_median = median(se_v);
      if (compared > 0) a.fine_not_worse_fraction = static_cast<double>(not_worse) / compared;
      out.push_back(a);
    }
  }
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkSuite& suite, int threads) {
  std::vector<TrialJob> jobs;
  for (const auto& g : suite.groups) {
    const int n = g.scenario_files.empty() ? g.trials : static_cast<int>(g.scenario_files.size());
    for (int t = 0; t < n; ++t) jobs.push_back(TrialJob{&g, t});
  }
  std::vector<std::vector<TrialRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = run_trial(jobs[i]);
      spdlog::debug("benchmark trial {} done", scenario_id(*jobs[i].group, jobs[i].trial));
    }
  };
  const int workers = std::clamp(threads, 1, std::max(1, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BenchmarkReport report;
  report.suite = suite.name;
  for (auto& r : results) {
    for (auto& row : r) report.rows.push_back(std::move(row));
  }
  report.aggregates = aggregate(suite, report.rows);
  return report;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const BenchmarkReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json j{{"scenario_id", r.scenario_id}, {"group", r.group}, {"trial", r.trial},
           {"method", r.method},           {"kind", to_string(r.kind)}, {"status", r.ok ? "ok" : "error"}};
    if (!r.ok) j["error"] = r.error;
    if (r.metrics) {
      j["rre_deg"] = r.metrics->rre_deg;
      const bool full = r.kind == ScenarioKind::same_object;
      j["ate"] = full ? Json(r.metrics->ate) : Json(nullptr);
      j["scale_error_pct"] = full ? Json(r.metrics->scale_error_pct) : Json(nullptr);
      j["estimate"] = to_json(r.estimate);
    }
    j["coarse_rre_deg"] = optional_number(r.coarse_rre_deg);
    j["coarse_iterations"] = r.coarse_iterations;
    j["fine_best_iteration"] = r.fine_best_iteration ? Json(*r.fine_best_iteration) : Json(nullptr);
    j["ground_truth"] = to_json(r.ground_truth);
    rows.push_back(j);
  }
  Json aggs = Json::array();
  for (const auto& a : report.aggregates) {
    Json j{{"group", a.group},
           {"method", a.method},
           {"trials", a.trials},
           {"failures", a.failures},
           {"rre_deg", {{"mean", a.rre_mean}, {"median", a.rre_median}}}};
    if (a.rotation_only) {
      j["ate"] = nullptr;
      j["scale_error_pct"] = nullptr;
    } else {
      j["ate"] = {{"mean", a.ate_mean}, {"median", a.ate_median}};
      j["scale_error_pct"] = {{"mean", a.scale_error_mean}, {"median", a.scale_error_median}};
    }
    j["fine_not_worse_fraction"] = optional_number(a.fine_not_worse_fraction);
    aggs.push_back(j);
  }
  return Json{{"schema_version", kSchemaVersion}, {"suite", report.suite}, {"rows", rows},
              {"aggregates", aggs}};
}

std::string format_table(const BenchmarkReport& report) {
  std::ostringstream os;
  auto cell = [&](const std::string& s, int w) { os << std::left << std::setw(w) << s; };
  auto num = [](double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
  };
  cell("group", 22);
  cell("method", 20);
  cell("ok/n", 8);
  cell("RRE mean", 11);
  cell("RRE med", 11);
  cell("ATE mean", 11);
  cell("ATE med", 11);
  cell("SE% mean", 11);
  cell("SE% med", 11);
  os << '\n';
  for (const auto& a : report.aggregates) {
    cell(a.group, 22);
    cell(a.method, 20);
    cell(std::to_string(a.trials - a.failures) + "/" + std::to_string(a.trials), 8);
    cell(num(a.rre_mean, 4), 11);
    cell(num(a.rre_median, 4), 11);
    if (a.rotation_only) {
      for (int k = 0; k < 4; ++k) cell("-", 11);
    } else {
      cell(num(a.ate_mean, 4), 11);
      cell(num(a.ate_median, 4), 11);
      cell(num(a.scale_error_mean, 4), 11);
      cell(num(a.scale_error_median, 4), 11);
    }
    os << '\n';
  }
  return os.str();
}

void write_benchmark_outputs(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(to_json(report), dir / "benchmark_report.json");
  std::ofstream out(dir / "benchmark_table.txt", std::ios::trunc);
  if (!out) throw IoError("cannot write '" + (dir / "benchmark_table.txt").string() + "'");
  out << format_table(report);
}

}  // namespace gsa
