#include "gsa/synth.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "gsa/error.hpp"
#include "gsa/feature_index.hpp"

namespace gsa {

std::string to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::superquadric: return "superquadric";
    case ShapeFamily::box: return "box";
    case ShapeFamily::composite: return "composite";
  }
  return "superquadric";
}

ShapeFamily shape_family_from_string(const std::string& name) {
  if (name == "superquadric") return ShapeFamily::superquadric;
  if (name == "box") return ShapeFamily::box;
  if (name == "composite") return ShapeFamily::composite;
  throw ValidationError("unknown shape family '" + name + "'");
}

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::same_object ? "same_object" : "cross_instance";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "same_object") return ScenarioKind::same_object;
  if (name == "cross_instance") return ScenarioKind::cross_instance;
  throw ValidationError("unknown scenario kind '" + name + "'");
}

void validate_shape_params(const ShapeParams& p) {
  auto in_range = [](double e) { return e >= 0.3 && e <= 4.0; };
  if (!in_range(p.exponent_1) || !in_range(p.exponent_2)) {
    throw ValidationError("superquadric exponents must lie in [0.3, 4]");
  }
  if (!(p.half_extents.minCoeff() > 0.0)) throw ValidationError("half extents must be positive");
  if (p.gaussian_count < 4) throw ValidationError("gaussian_count must be at least 4");
  if (p.surface_noise < 0.0 || p.feature_noise < 0.0) throw ValidationError("noise must be >= 0");
  if (p.marker) {
    if (!(p.marker->direction.norm() > 0.0)) throw ValidationError("marker direction is zero");
    if (!(p.marker->angular_radius > 0.0)) throw ValidationError("marker radius must be positive");
  }
}

bool same_surface(const ShapeParams& a, const ShapeParams& b) {
  const bool markers_equal =
      a.marker.has_value() == b.marker.has_value() &&
      (!a.marker || (a.marker->direction == b.marker->direction &&
                     a.marker->angular_radius == b.marker->angular_radius &&
                     a.marker->height == b.marker->height));
  return a.family == b.family && a.exponent_1 == b.exponent_1 && a.exponent_2 == b.exponent_2 &&
         a.half_extents == b.half_extents && markers_equal && a.gaussian_count == b.gaussian_count &&
         a.surface_noise == b.surface_noise && a.feature_noise == b.feature_noise &&
         a.palette == b.palette;
}

void validate_perturb_bounds(const PerturbBounds& b) {
  if (b.max_rotation_deg_per_axis < 0.0 || b.max_rotation_deg_per_axis > 180.0) {
    throw ValidationError("max rotation per axis must lie in [0, 180] degrees");
  }
  if (!(b.scale_lo > 0.0) || b.scale_hi < b.scale_lo) {
    throw ValidationError("scale range must satisfy 0 < lo <= hi");
  }
  if (b.translation_radius < 0.0) throw ValidationError("translation radius must be >= 0");
}

namespace {

double superquadric_radius(const Vec3& d, const Vec3& ext, double e1, double e2) {
  const double xy = std::pow(std::abs(d.x() / ext.x()), 2.0 / e2) +
                    std::pow(std::abs(d.y() / ext.y()), 2.0 / e2);
  const double f = std::pow(xy, e2 / e1) + std::pow(std::abs(d.z() / ext.z()), 2.0 / e1);
  return std::pow(f, -e1 / 2.0);
}

double box_radius(const Vec3& d, const Vec3& ext) {
  return 1.0 / d.cwiseAbs().cwiseQuotient(ext).maxCoeff();
}

struct Palette {
  Vec3 a, b;
  int axis;
};

Palette palette_for(ShapeFamily family, int variant) {
  static const std::array<Palette, 3> kBase = {{
      {Vec3(0.85, 0.30, 0.20), Vec3(0.20, 0.35, 0.85), 0},
      {Vec3(0.25, 0.75, 0.30), Vec3(0.80, 0.45, 0.70), 2},
      {Vec3(0.90, 0.60, 0.20), Vec3(0.30, 0.25, 0.60), 1},
  }};
  Palette p = kBase[static_cast<std::size_t>(family)];
  const int v = ((variant % 3) + 3) % 3;
  if (v == 1) {
    std::swap(p.a, p.b);
    p.axis = (p.axis + 1) % 3;
  } else if (v == 2) {
    p.a = Vec3(1.0, 1.0, 1.0) - p.a;
    p.axis = (p.axis + 2) % 3;
  }
  return p;
}

double marker_weight(const AsymmetryMarker& m, const Vec3& d) {
  const double c = std::clamp(d.dot(m.direction.normalized()), -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta >= m.angular_radius) return 0.0;
  const double u = std::cos(0.5 * std::numbers::pi * theta / m.angular_radius);
  return u * u;
}

constexpr double kJitter = 0.25;
constexpr double kSigmaPerSpacing = 0.6;

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 d;
  do {
    d = Vec3(normal(rng), normal(rng), normal(rng));
  } while (d.squaredNorm() < 1e-12);
  return d.normalized();
}

// Fibonacci lattice under a random rotation, each point jittered within its
// own cell. Density is uniform over directions without clumping.
std::vector<Vec3> stratified_directions(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec3 axis = random_unit(rng);
  const Mat3 rot = rotation_from_axis_angle(axis * (2.0 * std::numbers::pi * unit(rng)));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double cell = std::sqrt(4.0 * std::numbers::pi / static_cast<double>(n));
  std::vector<Vec3> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(k);
    Vec3 d(rxy * std::cos(phi), rxy * std::sin(phi), z);
    const Vec3 j = random_unit(rng);
    d = (d + kJitter * cell * unit(rng) * (j - j.dot(d) * d)).normalized();
    out[k] = rot * d;
  }
  return out;
}

constexpr std::array<double, 3> kComposite = {0.3, 1.6, 0.5};
const Vec3 kMarkerColor(0.95, 0.85, 0.10);

}  // namespace

double shape_radius(const ShapeParams& p, const Vec3& d) {
  double r = 0.0;
  switch (p.family) {
    case ShapeFamily::superquadric:
      r = superquadric_radius(d, p.half_extents, p.exponent_1, p.exponent_2);
      break;
    case ShapeFamily::box:
      r = box_radius(d, p.half_extents);
      break;
    case ShapeFamily::composite: {
      const Vec3 wing = p.half_extents.cwiseProduct(Vec3(kComposite[0], kComposite[1], kComposite[2]));
      r = std::max(superquadric_radius(d, p.half_extents, p.exponent_1, p.exponent_2),
                   superquadric_radius(d, wing, p.exponent_1, p.exponent_2));
      break;
    }
  }
  if (p.marker) r *= 1.0 + p.marker->height * marker_weight(*p.marker, d);
  return r;
}

Vec3 spherical_map_feature(const Vec3& direction) {
  return (direction + Vec3::Ones()) * 0.5;
}

GaussianModel generate_model(const ShapeParams& params) {
  validate_shape_params(params);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> opacity_dist(0.6, 1.0);

  const std::size_t n = params.gaussian_count;
  std::vector<Vec3> dirs(n);
  std::vector<Vec3> points(n);
  const std::vector<Vec3> lattice = stratified_directions(n, rng);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = lattice[i];
    double r = shape_radius(params, d);
    if (params.surface_noise > 0.0) r = std::max(0.05 * r, r + params.surface_noise * normal(rng));
    dirs[i] = d;
    points[i] = r * d;
  }

  // Local spacing from the three nearest neighbours.
  const std::vector<Vec3> zero_features(n, Vec3::Zero());
  const FeatureSpatialIndex index(points, zero_features);
  const Palette palette = palette_for(params.family, params.palette);

  GaussianModel model;
  model.gaussians.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = index.k_nearest(points[i], 4);
    double spacing = 0.0;
    int count = 0;
    for (std::size_t j : nn) {
      if (j == i) continue;
      spacing += (points[j] - points[i]).norm();
      ++count;
    }
    spacing = count > 0 ? spacing / count : 0.05;
    const double sigma = std::max(kSigmaPerSpacing * spacing, 1e-4);

    Gaussian& g = model.gaussians[i];
    g.position = points[i];
    g.covariance = sigma * sigma * Mat3::Identity();
    g.opacity = opacity_dist(rng);

    const double t = 0.5 * (dirs[i][palette.axis] + 1.0);
    const double stripe = 0.85 + 0.15 * std::cos(6.0 * std::numbers::pi * t);
    Vec3 color = ((1.0 - t) * palette.a + t * palette.b) * stripe;
    if (params.marker) {
      const double w = marker_weight(*params.marker, dirs[i]);
      color = (1.0 - w) * color + w * kMarkerColor;
    }
    g.color_dc = color.cwiseMax(0.0).cwiseMin(1.0);

    Vec3 f = spherical_map_feature(dirs[i]);
    if (params.feature_noise > 0.0) {
      for (int c = 0; c < 3; ++c) f[c] += params.feature_noise * normal(rng);
    }
    g.feature = f.cwiseMax(0.0).cwiseMin(1.0);
  }

  model.metadata["generator"] = "gsa-synth";
  model.metadata["family"] = to_string(params.family);
  model.metadata["seed"] = std::to_string(params.seed);
  model.metadata["gaussian_count"] = std::to_string(n);
  return model;
}

Sim3 random_sim3(const PerturbBounds& bounds) {
  validate_perturb_bounds(bounds);
  std::mt19937_64 rng(bounds.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max_rad = deg_to_rad(bounds.max_rotation_deg_per_axis);
  auto angle = [&] { return max_rad * (2.0 * unit(rng) - 1.0); };
  const double rx = angle();
  const double ry = angle();
  const double rz = angle();
  const Mat3 r = rotation_from_euler_xyz(rx, ry, rz);

  const double log_lo = std::log(bounds.scale_lo);
  const double log_hi = std::log(bounds.scale_hi);
  const double s = std::exp(log_lo + (log_hi - log_lo) * unit(rng));

  Vec3 t = Vec3::Zero();
  if (bounds.translation_radius > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec3 d;
    do {
      d = Vec3(normal(rng), normal(rng), normal(rng));
    } while (d.squaredNorm() < 1e-12);
    t = d.normalized() * bounds.translation_radius * std::cbrt(unit(rng));
  }
  return Sim3(s, r, t);
}

Scenario make_scenario(ScenarioKind kind, const ShapeParams& params_a, const ShapeParams& params_b,
                       const PerturbBounds& bounds) {
  return make_scenario(kind, params_a, params_b, random_sim3(bounds));
}

Scenario make_scenario(ScenarioKind kind, const ShapeParams& params_a, const ShapeParams& params_b,
                       const Sim3& applied) {
  if (kind == ScenarioKind::same_object && !same_surface(params_a, params_b)) {
    throw ValidationError("same_object scenarios need identical shape parameters up to the seed");
  }
  if (kind == ScenarioKind::cross_instance && same_surface(params_a, params_b)) {
    spdlog::warn("cross_instance scenario built from two samplings of the same surface");
  }
  Scenario sc;
  sc.applied = applied;
  sc.target = generate_model(params_b);
  sc.source = transform_model(sc.applied, generate_model(params_a));
  sc.ground_truth = sc.applied.inverse();
  sc.source.metadata["scenario"] = to_string(kind);
  sc.target.metadata["scenario"] = to_string(kind);
  return sc;
}

}  // namespace gsa
