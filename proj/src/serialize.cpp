#include "gsa/serialize.hpp"

#include <fstream>

#include "gsa/error.hpp"

namespace gsa {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing JSON field '") + key + "'");
  }
  return j.at(key);
}

template <class T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad JSON field '") + key + "': " + e.what());
  }
}

template <class T>
void get_opt(const Json& j, const char* key, T& out) {
  if (j.is_object() && j.contains(key)) out = get<T>(j, key);
}

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const Json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != 3) throw ValidationError(std::string("field '") + key + "' needs 3 numbers");
  return Vec3(v[0], v[1], v[2]);
}

void expect_object(const Json& j, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
}

}  // namespace

Json to_json(const Sim3& t) {
  const Quat& q = t.quaternion();
  return Json{{"scale", t.scale()},
              {"rotation", Json::array({q.w(), q.x(), q.y(), q.z()})},
              {"translation", vec_json(t.translation())}};
}

Sim3 sim3_from_json(const Json& j) {
  expect_object(j, "transform");
  const double s = get<double>(j, "scale");
  const auto r = get<std::vector<double>>(j, "rotation");
  if (r.size() != 4) throw ValidationError("transform rotation needs 4 quaternion numbers (w,x,y,z)");
  const Quat q(r[0], r[1], r[2], r[3]);
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("transform scale must be positive");
  if (!(q.norm() > 0.0)) throw ValidationError("transform rotation quaternion is zero");
  return Sim3(s, q.normalized(), vec_from(j, "translation"));
}

Json to_json(const ShapeParams& p) {
  Json j{{"family", to_string(p.family)},
         {"exponents", Json::array({p.exponent_1, p.exponent_2})},
         {"half_extents", vec_json(p.half_extents)},
         {"gaussian_count", p.gaussian_count},
         {"surface_noise", p.surface_noise},
         {"feature_noise", p.feature_noise},
         {"palette", p.palette},
         {"seed", p.seed}};
  if (p.marker) {
    j["marker"] = Json{{"direction", vec_json(p.marker->direction)},
                       {"angular_radius", p.marker->angular_radius},
                       {"height", p.marker->height}};
  } else {
    j["marker"] = nullptr;
  }
  return j;
}

ShapeParams shape_params_from_json(const Json& j) {
  expect_object(j, "shape parameters");
  ShapeParams p;
  if (j.contains("family")) p.family = shape_family_from_string(get<std::string>(j, "family"));
  if (j.contains("exponents")) {
    const auto e = get<std::vector<double>>(j, "exponents");
    if (e.size() != 2) throw ValidationError("exponents needs 2 numbers");
    p.exponent_1 = e[0];
    p.exponent_2 = e[1];
  }
  if (j.contains("half_extents")) p.half_extents = vec_from(j, "half_extents");
  get_opt(j, "gaussian_count", p.gaussian_count);
  get_opt(j, "surface_noise", p.surface_noise);
  get_opt(j, "feature_noise", p.feature_noise);
  get_opt(j, "palette", p.palette);
  get_opt(j, "seed", p.seed);
  if (j.contains("marker") && !j.at("marker").is_null()) {
    const Json& m = j.at("marker");
    if (m.is_boolean()) {
      if (m.get<bool>()) p.marker = AsymmetryMarker{};
    } else {
      AsymmetryMarker mk;
      if (m.contains("direction")) mk.direction = vec_from(m, "direction");
      get_opt(m, "angular_radius", mk.angular_radius);
      get_opt(m, "height", mk.height);
      p.marker = mk;
    }
  }
  validate_shape_params(p);
  return p;
}

Json to_json(const PerturbBounds& b) {
  return Json{{"max_rotation_deg_per_axis", b.max_rotation_deg_per_axis},
              {"scale_range", Json::array({b.scale_lo, b.scale_hi})},
              {"translation_radius", b.translation_radius},
              {"seed", b.seed}};
}

PerturbBounds perturb_bounds_from_json(const Json& j) {
  expect_object(j, "perturbation bounds");
  PerturbBounds b;
  get_opt(j, "max_rotation_deg_per_axis", b.max_rotation_deg_per_axis);
  if (j.contains("scale_range")) {
    const auto r = get<std::vector<double>>(j, "scale_range");
    if (r.size() != 2) throw ValidationError("scale_range needs 2 numbers");
    b.scale_lo = r[0];
    b.scale_hi = r[1];
  }
  get_opt(j, "translation_radius", b.translation_radius);
  get_opt(j, "seed", b.seed);
  validate_perturb_bounds(b);
  return b;
}

Json to_json(const CoarseConfig& c) {
  Json j{{"tau_f", std::isinf(c.tau_f) ? Json("inf") : Json(c.tau_f)},
         {"max_iterations", c.max_iterations},
         {"convergence_eps", c.convergence_eps},
         {"subsample", nullptr},
         {"seed", c.seed}};
  if (c.subsample) j["subsample"] = *c.subsample;
  return j;
}

CoarseConfig coarse_config_from_json(const Json& j) {
  expect_object(j, "coarse config");
  CoarseConfig c;
  if (j.contains("tau_f")) {
    const Json& t = j.at("tau_f");
    if (t.is_string()) {
      if (t.get<std::string>() != "inf") throw ValidationError("tau_f must be a number or \"inf\"");
      c.tau_f = FeatureSpatialIndex::kNoPruning;
    } else {
      c.tau_f = get<double>(j, "tau_f");
    }
  }
  get_opt(j, "max_iterations", c.max_iterations);
  get_opt(j, "convergence_eps", c.convergence_eps);
  if (j.contains("subsample") && !j.at("subsample").is_null()) {
    c.subsample = get<std::size_t>(j, "subsample");
  }
  get_opt(j, "seed", c.seed);
  validate_coarse_config(c);
  return c;
}

Json to_json(const RenderSettings& s) {
  return Json{{"alpha_clip", s.alpha_clip},
              {"covariance_floor", s.covariance_floor},
              {"near_plane", s.near_plane},
              {"cutoff_sigma", s.cutoff_sigma},
              {"taper_sigma", s.taper_sigma}};
}

RenderSettings render_settings_from_json(const Json& j) {
  expect_object(j, "render settings");
  RenderSettings s;
  get_opt(j, "alpha_clip", s.alpha_clip);
  get_opt(j, "covariance_floor", s.covariance_floor);
  get_opt(j, "near_plane", s.near_plane);
  get_opt(j, "cutoff_sigma", s.cutoff_sigma);
  get_opt(j, "taper_sigma", s.taper_sigma);
  return s;
}

Json to_json(const FineConfig& c) {
  Json views = Json::array();
  for (const auto& cam : c.manual_views) views.push_back(to_json(cam));
  return Json{{"num_views", c.num_views},
              {"iterations", c.iterations},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"mode", to_string(c.mode)},
              {"view_strategy", to_string(c.view_strategy)},
              {"manual_views", views},
              {"resolution", Json::array({c.width, c.height})},
              {"render", to_json(c.render)}};
}

FineConfig fine_config_from_json(const Json& j) {
  expect_object(j, "fine config");
  FineConfig c;
  get_opt(j, "num_views", c.num_views);
  get_opt(j, "iterations", c.iterations);
  get_opt(j, "learning_rate", c.learning_rate);
  get_opt(j, "beta1", c.beta1);
  get_opt(j, "beta2", c.beta2);
  get_opt(j, "adam_eps", c.adam_eps);
  if (j.contains("mode")) c.mode = render_mode_from_string(get<std::string>(j, "mode"));
  if (j.contains("view_strategy")) {
    c.view_strategy = view_strategy_from_string(get<std::string>(j, "view_strategy"));
  }
  if (j.contains("resolution")) {
    const auto r = get<std::vector<int>>(j, "resolution");
    if (r.size() != 2) throw ValidationError("resolution needs 2 integers");
    c.width = r[0];
    c.height = r[1];
  }
  if (j.contains("manual_views")) {
    for (const Json& v : field(j, "manual_views")) c.manual_views.push_back(camera_from_json(v));
  }
  if (j.contains("render")) c.render = render_settings_from_json(j.at("render"));
  validate_fine_config(c);
  return c;
}

Json to_json(const BgRemovalConfig& c) {
  return Json{{"background_color", vec_json(c.background_color)},
              {"color_distance_threshold", c.color_distance_threshold},
              {"opacity_floor", c.opacity_floor}};
}

BgRemovalConfig bg_removal_config_from_json(const Json& j) {
  expect_object(j, "background removal config");
  BgRemovalConfig c;
  if (j.contains("background_color")) c.background_color = vec_from(j, "background_color");
  get_opt(j, "color_distance_threshold", c.color_distance_threshold);
  get_opt(j, "opacity_floor", c.opacity_floor);
  return c;
}

Json to_json(const CameraPose& cam) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(cam.rotation(r, c));
  }
  return Json{{"rotation", rot},
              {"translation", vec_json(cam.translation)},
              {"scale", cam.scale},
              {"intrinsics",
               {{"fx", cam.intrinsics.fx},
                {"fy", cam.intrinsics.fy},
                {"cx", cam.intrinsics.cx},
                {"cy", cam.intrinsics.cy}}},
              {"width", cam.width},
              {"height", cam.height}};
}

CameraPose camera_from_json(const Json& j) {
  expect_object(j, "camera");
  int width = 128;
  int height = 128;
  get_opt(j, "width", width);
  get_opt(j, "height", height);
  if (width <= 0 || height <= 0) throw ValidationError("camera width and height must be positive");
  Intrinsics intr = default_intrinsics(width, height);
  if (j.contains("intrinsics")) {
    const Json& in = j.at("intrinsics");
    get_opt(in, "fx", intr.fx);
    get_opt(in, "fy", intr.fy);
    get_opt(in, "cx", intr.cx);
    get_opt(in, "cy", intr.cy);
  }
  CameraPose cam;
  if (j.contains("eye")) {
    const Vec3 up = j.contains("up") ? vec_from(j, "up") : Vec3::UnitY();
    cam = CameraPose::look_at(vec_from(j, "eye"), vec_from(j, "target"), up, intr, width, height);
  } else {
    const auto r = get<std::vector<double>>(j, "rotation");
    if (r.size() != 9) throw ValidationError("camera rotation needs 9 numbers (row-major)");
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) cam.rotation(a, b) = r[static_cast<std::size_t>(3 * a + b)];
    }
    cam.translation = vec_from(j, "translation");
    get_opt(j, "scale", cam.scale);
    cam.intrinsics = intr;
    cam.width = width;
    cam.height = height;
  }
  validate_camera(cam);
  return cam;
}

Json to_json(const MetricSet& m) {
  return Json{{"rre_deg", m.rre_deg}, {"ate", m.ate}, {"scale_error_pct", m.scale_error_pct}};
}

MetricSet metric_set_from_json(const Json& j) {
  return MetricSet{get<double>(j, "rre_deg"), get<double>(j, "ate"), get<double>(j, "scale_error_pct")};
}

Json to_json(const ScenarioManifest& m) {
  Json j{{"schema_version", kSchemaVersion},
         {"kind", to_string(m.kind)},
         {"source", m.source_path},
         {"target", m.target_path},
         {"ground_truth", to_json(m.ground_truth)},
         {"applied", to_json(m.applied)}};
  if (m.params_a) j["params_a"] = to_json(*m.params_a);
  if (m.params_b) j["params_b"] = to_json(*m.params_b);
  if (m.bounds) j["bounds"] = to_json(*m.bounds);
  return j;
}

ScenarioManifest scenario_manifest_from_json(const Json& j) {
  expect_object(j, "scenario manifest");
  ScenarioManifest m;
  if (j.contains("kind")) m.kind = scenario_kind_from_string(get<std::string>(j, "kind"));
  get_opt(j, "source", m.source_path);
  get_opt(j, "target", m.target_path);
  m.ground_truth = sim3_from_json(field(j, "ground_truth"));
  m.applied = j.contains("applied") ? sim3_from_json(j.at("applied")) : m.ground_truth.inverse();
  if (j.contains("params_a")) m.params_a = shape_params_from_json(j.at("params_a"));
  if (j.contains("params_b")) m.params_b = shape_params_from_json(j.at("params_b"));
  if (j.contains("bounds")) m.bounds = perturb_bounds_from_json(j.at("bounds"));
  return m;
}

namespace {

Json coarse_iteration_json(const CoarseIteration& it) {
  return Json{{"iteration", it.iteration},
              {"matched", it.matched},
              {"unmatched", it.unmatched},
              {"residual_before", it.residual_before},
              {"residual_after", it.residual_after},
              {"max_feature_distance", it.max_feature_distance},
              {"transform", to_json(it.transform)}};
}

CoarseIteration coarse_iteration_from(const Json& j) {
  CoarseIteration it;
  it.iteration = get<int>(j, "iteration");
  it.matched = get<std::size_t>(j, "matched");
  get_opt(j, "unmatched", it.unmatched);
  it.residual_before = get<double>(j, "residual_before");
  it.residual_after = get<double>(j, "residual_after");
  get_opt(j, "max_feature_distance", it.max_feature_distance);
  it.transform = sim3_from_json(field(j, "transform"));
  return it;
}

Json fine_iteration_json(const FineIteration& it) {
  Json step = Json::array();
  for (int k = 0; k < 7; ++k) step.push_back(it.step[k]);
  return Json{{"iteration", it.iteration}, {"loss", it.loss}, {"transform", to_json(it.transform)},
              {"step", step}};
}

FineIteration fine_iteration_from(const Json& j) {
  FineIteration it;
  it.iteration = get<int>(j, "iteration");
  it.loss = get<double>(j, "loss");
  it.transform = sim3_from_json(field(j, "transform"));
  if (j.contains("step")) {
    const auto s = get<std::vector<double>>(j, "step");
    if (s.size() != 7) throw ValidationError("fine step needs 7 numbers");
    for (int k = 0; k < 7; ++k) it.step[k] = s[static_cast<std::size_t>(k)];
  }
  return it;
}

}  // namespace

Json to_json(const RegistrationReport& r) {
  Json j{{"schema_version", kSchemaVersion}, {"stage", r.stage},
         {"estimated_transform", to_json(r.estimated_transform)}};
  j["coarse_transform"] = r.coarse_transform ? to_json(*r.coarse_transform) : Json(nullptr);
  j["fine_delta"] = r.fine_delta ? to_json(*r.fine_delta) : Json(nullptr);
  Json ct = Json::array();
  for (const auto& it : r.coarse_trace) ct.push_back(coarse_iteration_json(it));
  Json ft = Json::array();
  for (const auto& it : r.fine_trace) ft.push_back(fine_iteration_json(it));
  j["coarse_trace"] = ct;
  j["fine_trace"] = ft;
  j["fine_best_iteration"] = r.fine_best_iteration ? Json(*r.fine_best_iteration) : Json(nullptr);
  j["metrics"] = r.metrics ? to_json(*r.metrics) : Json(nullptr);
  j["wall_time_ms"] = Json{{"coarse", r.coarse_wall_time_ms}, {"fine", r.fine_wall_time_ms}};
  j["config"] = r.config;
  return j;
}

RegistrationReport registration_report_from_json(const Json& j) {
  expect_object(j, "registration report");
  const int version = get<int>(j, "schema_version");
  if (version != kSchemaVersion) {
    throw ValidationError("unsupported report schema_version " + std::to_string(version));
  }
  RegistrationReport r;
  get_opt(j, "stage", r.stage);
  r.estimated_transform = sim3_from_json(field(j, "estimated_transform"));
  if (j.contains("coarse_transform") && !j.at("coarse_transform").is_null()) {
    r.coarse_transform = sim3_from_json(j.at("coarse_transform"));
  }
  if (j.contains("fine_delta") && !j.at("fine_delta").is_null()) {
    r.fine_delta = sim3_from_json(j.at("fine_delta"));
  }
  if (j.contains("coarse_trace")) {
    for (const Json& it : j.at("coarse_trace")) r.coarse_trace.push_back(coarse_iteration_from(it));
  }
  if (j.contains("fine_trace")) {
    for (const Json& it : j.at("fine_trace")) r.fine_trace.push_back(fine_iteration_from(it));
  }
  if (j.contains("fine_best_iteration") && !j.at("fine_best_iteration").is_null()) {
    r.fine_best_iteration = get<int>(j, "fine_best_iteration");
  }
  if (j.contains("metrics") && !j.at("metrics").is_null()) r.metrics = metric_set_from_json(j.at("metrics"));
  if (j.contains("wall_time_ms")) {
    get_opt(j.at("wall_time_ms"), "coarse", r.coarse_wall_time_ms);
    get_opt(j.at("wall_time_ms"), "fine", r.fine_wall_time_ms);
  }
  if (j.contains("config")) r.config = j.at("config");
  return r;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in '" + path.string() + "'", e.byte);
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace gsa
