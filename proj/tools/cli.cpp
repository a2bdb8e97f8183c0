#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gsa/benchmark.hpp"
#include "gsa/error.hpp"
#include "gsa/ply_io.hpp"
#include "gsa/raster_io.hpp"
#include "gsa/serialize.hpp"

namespace gsa {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string log_level = "warn";
  fs::path out_dir = ".";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path output_path(const Globals& g, const fs::path& p) {
  const fs::path full = p.is_absolute() ? p : g.out_dir / p;
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  return full;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("gsa");
  if (!logger) logger = spdlog::stderr_color_mt("gsa");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

Vec3 vec3(const std::vector<double>& v) { return Vec3(v[0], v[1], v[2]); }

// Accepts a bare transform, a scenario manifest (uses ground_truth) or a
// registration report (uses estimated_transform).
Sim3 transform_from_file(const fs::path& path, const char* preferred) {
  const Json j = read_json_file(path);
  if (j.is_object() && j.contains(preferred)) return sim3_from_json(j.at(preferred));
  if (j.is_object() && j.contains("ground_truth")) return sim3_from_json(j.at("ground_truth"));
  if (j.is_object() && j.contains("estimated_transform")) return sim3_from_json(j.at("estimated_transform"));
  return sim3_from_json(j);
}

struct SynthArgs {
  std::string params_file;
  std::string family = "superquadric";
  std::vector<double> exponents{1.0, 1.0};
  std::vector<double> half_extents{1.0, 0.7, 0.5};
  bool marker = false;
  std::size_t count = 2000;
  double surface_noise = 0.0;
  double feature_noise = 0.0;
  int palette = 0;
  std::string output = "model.ply";
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
  ShapeParams p;
  if (!a.params_file.empty()) {
    p = shape_params_from_json(read_json_file(a.params_file));
  } else {
    p.family = shape_family_from_string(a.family);
    p.exponent_1 = a.exponents[0];
    p.exponent_2 = a.exponents[1];
    p.half_extents = vec3(a.half_extents);
    if (a.marker) p.marker = AsymmetryMarker{};
    p.gaussian_count = a.count;
    p.surface_noise = a.surface_noise;
    p.feature_noise = a.feature_noise;
    p.palette = a.palette;
  }
  p.seed = g.seed;
  validate_shape_params(p);
  const GaussianModel model = generate_model(p);
  const fs::path ply = output_path(g, a.output);
  write_ply(model, ply);
  fs::path manifest = ply;
  manifest.replace_extension(".json");
  write_json_file(Json{{"schema_version", kSchemaVersion},
                       {"command", "synth"},
                       {"model", ply.filename().string()},
                       {"params", to_json(p)}},
                  manifest);
  out << ply.string() << '\n';
  return 0;
}

struct PerturbArgs {
  std::string model;
  double max_rotation = 180.0;
  std::vector<double> scale_range{1.0, 1.0};
  double translation_radius = 0.0;
  std::string output = "source.ply";
  std::string manifest = "scenario.json";
};

int cmd_perturb(const Globals& g, const PerturbArgs& a, std::ostream& out) {
  PerturbBounds b;
  b.max_rotation_deg_per_axis = a.max_rotation;
  b.scale_lo = a.scale_range[0];
  b.scale_hi = a.scale_range[1];
  b.translation_radius = a.translation_radius;
  b.seed = g.seed;
  validate_perturb_bounds(b);
  const GaussianModel model = read_ply(a.model);
  const Sim3 applied = random_sim3(b);
  const fs::path src = output_path(g, a.output);
  write_ply(transform_model(applied, model), src);
  const fs::path man = output_path(g, a.manifest);

  ScenarioManifest m;
  m.kind = ScenarioKind::same_object;
  m.source_path = fs::absolute(src).string();
  m.target_path = fs::absolute(a.model).string();
  m.applied = applied;
  m.ground_truth = applied.inverse();
  m.bounds = b;
  write_json_file(to_json(m), man);
  out << man.string() << '\n';
  return 0;
}

struct RegisterArgs {
  std::string source;
  std::string target;
  std::string stage = "both";
  std::string config;
  std::string init;
  std::string ground_truth;
  double tau_f = CoarseConfig{}.tau_f;
  int coarse_iterations = CoarseConfig{}.max_iterations;
  std::size_t subsample = 0;
  int views = FineConfig{}.num_views;
  int fine_iterations = FineConfig{}.iterations;
  double lr = FineConfig{}.learning_rate;
  std::string mode = "feature";
  std::vector<int> resolution{128, 128};
  std::string report = "register_report.json";
  std::string emit_aligned;
};

int cmd_register(const Globals& g, const RegisterArgs& a, const CLI::App& sub, std::ostream& out) {
  CoarseConfig cc;
  FineConfig fc;
  if (!a.config.empty()) {
    const Json cfg = read_json_file(a.config);
    if (cfg.contains("coarse")) cc = coarse_config_from_json(cfg.at("coarse"));
    if (cfg.contains("fine")) fc = fine_config_from_json(cfg.at("fine"));
  }
  // Explicit flags override the config file.
  if (sub.count("--tau-f")) cc.tau_f = a.tau_f;
  if (sub.count("--coarse-iterations")) cc.max_iterations = a.coarse_iterations;
  if (sub.count("--subsample")) cc.subsample = a.subsample;
  if (sub.count("--views")) fc.num_views = a.views;
  if (sub.count("--fine-iterations")) fc.iterations = a.fine_iterations;
  if (sub.count("--lr")) fc.learning_rate = a.lr;
  if (sub.count("--mode")) fc.mode = render_mode_from_string(a.mode);
  if (sub.count("--resolution")) {
    fc.width = a.resolution[0];
    fc.height = a.resolution[1];
  }
  cc.seed = g.seed;
  validate_coarse_config(cc);
  validate_fine_config(fc);

  const GaussianModel source = read_ply(a.source);
  const GaussianModel target = read_ply(a.target);

  RegistrationReport report;
  report.stage = a.stage;
  Sim3 start = a.init.empty() ? Sim3::identity() : transform_from_file(a.init, "estimated_transform");
  Sim3 estimate = start;

  if (a.stage == "coarse" || a.stage == "both") {
    const auto t0 = std::chrono::steady_clock::now();
    const CoarseResult c = coarse_register(source, target, cc);
    report.coarse_wall_time_ms = elapsed_ms(t0);
    report.coarse_trace = c.trace;
    report.coarse_transform = c.transform;
    estimate = c.transform;
    start = c.transform;
    spdlog::info("coarse: {} iterations, {} matches", c.trace.size(), c.trace.back().matched);
  }
  if (a.stage == "fine" || a.stage == "both") {
    const auto t0 = std::chrono::steady_clock::now();
    const FineResult f = fine_register(start, source, target, fc);
    report.fine_wall_time_ms = elapsed_ms(t0);
    report.fine_trace = f.trace;
    report.fine_best_iteration = f.best_iteration;
    estimate = f.transform;
    report.fine_delta = f.transform * start.inverse();
    spdlog::info("fine: best loss {} at iteration {}", f.loss, f.best_iteration);
  }
  report.estimated_transform = estimate;
  if (!a.ground_truth.empty()) {
    report.metrics = compute_metrics(estimate, transform_from_file(a.ground_truth, "ground_truth"));
  }
  report.config = Json{{"command", "register"},
                       {"source", a.source},
                       {"target", a.target},
                       {"stage", a.stage},
                       {"seed", g.seed},
                       {"threads", g.threads},
                       {"init", a.init.empty() ? Json(nullptr) : Json(a.init)},
                       {"coarse", to_json(cc)},
                       {"fine", to_json(fc)}};
  const fs::path rp = output_path(g, a.report);
  write_json_file(to_json(report), rp);
  if (!a.emit_aligned.empty()) write_ply(transform_model(estimate, source), output_path(g, a.emit_aligned));
  out << rp.string() << '\n';
  return 0;
}

struct LiftArgs {
  std::string model;
  std::string views;
  int iterations = 200;
  double step = 0.05;
  std::string output = "lifted.ply";
};

int cmd_lift(const Globals& g, const LiftArgs& a, std::ostream& out) {
  const GaussianModel model = read_ply(a.model);
  const Json vj = read_json_file(a.views);
  const Json& list = vj.is_object() && vj.contains("views") ? vj.at("views") : vj;
  if (!list.is_array() || list.empty()) throw ValidationError("views file needs a non-empty list of views");
  const fs::path base = fs::path(a.views).parent_path();
  std::vector<LiftView> views;
  for (const Json& v : list) {
    if (!v.contains("map") || !v.contains("camera")) throw ValidationError("each view needs 'map' and 'camera'");
    fs::path map = v.at("map").get<std::string>();
    if (!map.is_absolute()) map = base / map;
    LiftView view{read_raster(map), camera_from_json(v.at("camera"))};
    if (view.observed.width != view.camera.width || view.observed.height != view.camera.height) {
      throw ValidationError("feature map size does not match its camera: " + map.string());
    }
    views.push_back(std::move(view));
  }
  const GaussianModel lifted = lift_features(model, views, a.iterations, a.step);
  const fs::path p = output_path(g, a.output);
  write_ply(lifted, p);
  out << p.string() << '\n';
  return 0;
}

struct RenderArgs {
  std::string model;
  std::string camera;
  std::string transform;
  int view = 0;
  int views = 1;
  std::string mode = "feature";
  std::string format = "png";
  std::vector<int> resolution{128, 128};
  std::string output;
};

int cmd_render(const Globals& g, const RenderArgs& a, std::ostream& out) {
  GaussianModel model = read_ply(a.model);
  if (!a.transform.empty()) model = transform_model(transform_from_file(a.transform, "estimated_transform"), model);
  CameraPose cam;
  if (!a.camera.empty()) {
    cam = camera_from_json(read_json_file(a.camera));
  } else {
    if (a.view < 0 || a.view >= a.views) throw ValidationError("--view must lie in [0, --views)");
    cam = select_views(model, a.views, ViewStrategy::diverse_fibonacci, a.resolution[0], a.resolution[1])
              [static_cast<std::size_t>(a.view)];
  }
  const RenderMode mode = render_mode_from_string(a.mode);
  if (mode == RenderMode::feature && !model.has_features) {
    throw ValidationError("model has no feature channels; use --mode rgb");
  }
  const FeatureMap map = render(model, cam, mode);
  const fs::path p = output_path(g, a.output.empty() ? "render." + a.format : a.output);
  if (a.format == "png") {
    write_png(map, p);
  } else {
    write_npy(map, p);
  }
  out << p.string() << '\n';
  return 0;
}

struct EvalArgs {
  std::string report;
  std::string ground_truth;
  std::string output = "metrics.json";
};

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const Sim3 est = transform_from_file(a.report, "estimated_transform");
  const Sim3 gt = transform_from_file(a.ground_truth, "ground_truth");
  const MetricSet m = compute_metrics(est, gt);
  Json j = to_json(m);
  j["schema_version"] = kSchemaVersion;
  const fs::path p = output_path(g, a.output);
  write_json_file(j, p);
  out << j.dump() << '\n';
  return 0;
}

struct BenchArgs {
  std::string suite;
};

int cmd_bench(const Globals& g, const BenchArgs& a, std::ostream& out) {
  BenchmarkSuite suite =
      benchmark_suite_from_json(read_json_file(a.suite), fs::path(a.suite).parent_path());
  for (auto& grp : suite.groups) grp.seed += g.seed;
  const BenchmarkReport report = run_benchmark(suite, g.threads);
  write_benchmark_outputs(report, g.out_dir);
  out << format_table(report);
  return 0;
}

struct MergeArgs {
  std::string scene;
  std::string aligned;
  std::string transform;
  std::string output = "merged.ply";
};

int cmd_merge(const Globals& g, const MergeArgs& a, std::ostream& out) {
  const GaussianModel scene = read_ply(a.scene);
  GaussianModel object = read_ply(a.aligned);
  if (!a.transform.empty()) object = transform_model(transform_from_file(a.transform, "estimated_transform"), object);
  const fs::path p = output_path(g, a.output);
  write_ply(merge_models(scene, object), p);
  out << p.string() << '\n';
  return 0;
}

struct RmbgArgs {
  std::string model;
  std::string config;
  std::vector<double> background{0.0, 0.0, 0.0};
  double color_threshold = BgRemovalConfig{}.color_distance_threshold;
  double opacity_floor = BgRemovalConfig{}.opacity_floor;
  std::string output = "filtered.ply";
};

int cmd_rmbg(const Globals& g, const RmbgArgs& a, const CLI::App& sub, std::ostream& out) {
  BgRemovalConfig cfg;
  if (!a.config.empty()) cfg = bg_removal_config_from_json(read_json_file(a.config));
  if (sub.count("--background")) cfg.background_color = vec3(a.background);
  if (sub.count("--color-threshold")) cfg.color_distance_threshold = a.color_threshold;
  if (sub.count("--opacity-floor")) cfg.opacity_floor = a.opacity_floor;
  const GaussianModel filtered = remove_background_gaussians(read_ply(a.model), cfg);
  const fs::path p = output_path(g, a.output);
  write_ply(filtered, p);
  out << p.string() << " removed=" << filtered.metadata.at("removed_count") << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian splat model registration toolkit", "gsa"};
  app.require_subcommand(1);
  Globals g;
  std::string out_dir = ".";
  app.add_option("--seed", g.seed, "Random seed (GSA_SEED overrides)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.add_option("--out-dir", out_dir, "Directory for relative output paths");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic featured model");
  synth->add_option("--params", sa.params_file, "ShapeParams JSON (overrides shape flags)")->check(CLI::ExistingFile);
  synth->add_option("--family", sa.family)->check(CLI::IsMember({"superquadric", "box", "composite"}));
  synth->add_option("--exponents", sa.exponents)->expected(2);
  synth->add_option("--half-extents", sa.half_extents)->expected(3);
  synth->add_flag("--marker", sa.marker, "Add the asymmetry marker");
  synth->add_option("--count", sa.count);
  synth->add_option("--surface-noise", sa.surface_noise);
  synth->add_option("--feature-noise", sa.feature_noise);
  synth->add_option("--palette", sa.palette);
  synth->add_option("-o,--output", sa.output);

  PerturbArgs pa;
  auto* perturb = app.add_subcommand("perturb", "Apply a random similarity and write a scenario");
  perturb->add_option("--model", pa.model)->required()->check(CLI::ExistingFile);
  perturb->add_option("--max-rotation", pa.max_rotation, "Per-axis bound in degrees");
  perturb->add_option("--scale-range", pa.scale_range)->expected(2);
  perturb->add_option("--translation-radius", pa.translation_radius);
  perturb->add_option("-o,--output", pa.output);
  perturb->add_option("--manifest", pa.manifest);

  RegisterArgs ra;
  auto* reg = app.add_subcommand("register", "Register a source model onto a target model");
  reg->add_option("--source", ra.source)->required()->check(CLI::ExistingFile);
  reg->add_option("--target", ra.target)->required()->check(CLI::ExistingFile);
  reg->add_option("--stage", ra.stage)->check(CLI::IsMember({"coarse", "fine", "both"}));
  reg->add_option("--config", ra.config, "JSON with optional 'coarse' and 'fine' objects")->check(CLI::ExistingFile);
  reg->add_option("--init", ra.init, "Initial transform for --stage fine")->check(CLI::ExistingFile);
  reg->add_option("--ground-truth", ra.ground_truth, "Scenario manifest; adds metrics")->check(CLI::ExistingFile);
  reg->add_option("--tau-f", ra.tau_f);
  reg->add_option("--coarse-iterations", ra.coarse_iterations);
  reg->add_option("--subsample", ra.subsample);
  reg->add_option("--views", ra.views);
  reg->add_option("--fine-iterations", ra.fine_iterations);
  reg->add_option("--lr", ra.lr);
  reg->add_option("--mode", ra.mode)->check(CLI::IsMember({"feature", "rgb"}));
  reg->add_option("--resolution", ra.resolution)->expected(2);
  reg->add_option("--report", ra.report);
  reg->add_option("--emit-aligned", ra.emit_aligned, "Write the aligned source PLY here");

  LiftArgs la;
  auto* lift = app.add_subcommand("lift", "Fit per-Gaussian features to feature-map dumps");
  lift->add_option("--model", la.model)->required()->check(CLI::ExistingFile);
  lift->add_option("--views", la.views, "JSON list of {map, camera}")->required()->check(CLI::ExistingFile);
  lift->add_option("--iterations", la.iterations);
  lift->add_option("--step", la.step);
  lift->add_option("-o,--output", la.output);

  RenderArgs rda;
  auto* rend = app.add_subcommand("render", "Rasterise a model from one camera");
  rend->add_option("--model", rda.model)->required()->check(CLI::ExistingFile);
  rend->add_option("--camera", rda.camera, "Camera JSON")->check(CLI::ExistingFile);
  rend->add_option("--transform", rda.transform, "Apply this transform to the model first")->check(CLI::ExistingFile);
  rend->add_option("--view", rda.view, "Index into the Fibonacci views when no camera is given");
  rend->add_option("--views", rda.views);
  rend->add_option("--mode", rda.mode)->check(CLI::IsMember({"feature", "rgb"}));
  rend->add_option("--format", rda.format)->check(CLI::IsMember({"png", "npy"}));
  rend->add_option("--resolution", rda.resolution)->expected(2);
  rend->add_option("-o,--output", rda.output);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a registration report against ground truth");
  eval->add_option("--report", ea.report)->required()->check(CLI::ExistingFile);
  eval->add_option("--ground-truth", ea.ground_truth)->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--output", ea.output);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--suite", ba.suite)->required()->check(CLI::ExistingFile);

  MergeArgs ma;
  auto* merge = app.add_subcommand("merge", "Concatenate an aligned object into a scene");
  merge->add_option("--scene", ma.scene)->required()->check(CLI::ExistingFile);
  merge->add_option("--aligned", ma.aligned)->required()->check(CLI::ExistingFile);
  merge->add_option("--transform", ma.transform, "Apply this transform to the object first")->check(CLI::ExistingFile);
  merge->add_option("-o,--output", ma.output);

  RmbgArgs rb;
  auto* rmbg = app.add_subcommand("rmbg", "Drop background-coloured and faint Gaussians");
  rmbg->add_option("--model", rb.model)->required()->check(CLI::ExistingFile);
  rmbg->add_option("--config", rb.config)->check(CLI::ExistingFile);
  rmbg->add_option("--background", rb.background)->expected(3);
  rmbg->add_option("--color-threshold", rb.color_threshold);
  rmbg->add_option("--opacity-floor", rb.opacity_floor);
  rmbg->add_option("-o,--output", rb.output);

  try {
    app.parse(argc, argv);
    if (const char* env = std::getenv("GSA_SEED"); env && *env) {
      std::size_t used = 0;
      try {
        g.seed = std::stoull(env, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != std::string(env).size()) throw UsageError("GSA_SEED must be an unsigned integer");
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  g.out_dir = out_dir;
  setup_logging(g.log_level);

  try {
    if (*synth) return cmd_synth(g, sa, out);
    if (*perturb) return cmd_perturb(g, pa, out);
    if (*reg) return cmd_register(g, ra, *reg, out);
    if (*lift) return cmd_lift(g, la, out);
    if (*rend) return cmd_render(g, rda, out);
    if (*eval) return cmd_eval(g, ea, out);
    if (*bench) return cmd_bench(g, ba, out);
    if (*merge) return cmd_merge(g, ma, out);
    if (*rmbg) return cmd_rmbg(g, rb, *rmbg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "usage error: no subcommand\n";
  return 2;
}

}  // namespace gsa
