#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "gsa/gaussian_model.hpp"

namespace gsa {

enum class ShapeFamily { superquadric, box, composite };

std::string to_string(ShapeFamily family);
ShapeFamily shape_family_from_string(const std::string& name);

/// Radial bump on the surface that breaks the shape's mirror symmetries.
/// It also recolours the Gaussians it covers.
struct AsymmetryMarker {
  Vec3 direction = Vec3(0.6, 0.5, 0.62).normalized();
  double angular_radius = 0.45;  // radians
  double height = 0.3;           // relative radial growth at the bump centre
};

struct ShapeParams {
  ShapeFamily family = ShapeFamily::superquadric;
  /// Superquadric roundness (e1 along z, e2 in the xy-plane), each in [0.3, 4].
  double exponent_1 = 1.0;
  double exponent_2 = 1.0;
  Vec3 half_extents = Vec3(1.0, 0.7, 0.5);
  std::optional<AsymmetryMarker> marker;
  std::size_t gaussian_count = 2000;
  double surface_noise = 0.0;
  /// Std of Gaussian jitter added to the pseudo-features (clamped to [0,1]).
  double feature_noise = 0.0;
  /// Colour scheme variant within the family.
  int palette = 0;
  std::uint64_t seed = 0;
};

void validate_shape_params(const ShapeParams& p);

/// True when the two parameter sets describe the same surface, i.e. they
/// differ at most in the sampling seed.
bool same_surface(const ShapeParams& a, const ShapeParams& b);

struct PerturbBounds {
  double max_rotation_deg_per_axis = 180.0;
  double scale_lo = 1.0;
  double scale_hi = 1.0;
  double translation_radius = 0.0;
  std::uint64_t seed = 0;
};

void validate_perturb_bounds(const PerturbBounds& b);

/// Distance from the shape centre to its surface along unit direction d.
double shape_radius(const ShapeParams& p, const Vec3& d);

/// Pseudo-feature of a canonical direction: (d + 1) / 2.
Vec3 spherical_map_feature(const Vec3& direction);

/// Samples `gaussian_count` surface points by casting rays from the shape
/// centre along a randomly rotated, jittered Fibonacci lattice of
/// directions. Each point becomes an isotropic Gaussian sized by its local
/// neighbour spacing; the feature is the spherical-map encoding of the ray
/// direction. Pure function of `params`.
GaussianModel generate_model(const ShapeParams& params);

/// Euler angles uniform per axis (composed Rz*Ry*Rx), log-uniform scale,
/// translation uniform in a ball.
Sim3 random_sim3(const PerturbBounds& bounds);

enum class ScenarioKind { same_object, cross_instance };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct Scenario {
  GaussianModel source;
  GaussianModel target;
  /// Maps the source frame onto the target frame.
  Sim3 ground_truth;
  /// Perturbation that was applied to the canonical source.
  Sim3 applied;
};

/// target = generate(b); source = applied(generate(a)); ground truth is the
/// inverse of the applied perturbation. For cross-instance pairs the canonical
/// frames coincide, so the same bookkeeping yields the rotation that aligns
/// them (scale and translation are only meaningful in that canonical sense).
Scenario make_scenario(ScenarioKind kind, const ShapeParams& params_a, const ShapeParams& params_b,
                       const PerturbBounds& bounds);
/// Same bookkeeping with a caller-chosen perturbation.
Scenario make_scenario(ScenarioKind kind, const ShapeParams& params_a, const ShapeParams& params_b,
                       const Sim3& applied);

}  // namespace gsa
