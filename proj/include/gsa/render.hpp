#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gsa/gaussian_model.hpp"

namespace gsa {

struct Intrinsics {
  double fx = 100.0;
  double fy = 100.0;
  double cx = 64.0;
  double cy = 64.0;
};

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates
/// (x_cam = R x + t); the camera looks down +z with +y pointing down.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  /// Uniform scale of the camera frame: camera-to-world is
  /// x -> scale * R^T x + center. Only a moved camera has scale != 1.
  double scale = 1.0;
  Intrinsics intrinsics;
  int width = 128;
  int height = 128;

  Vec3 center() const { return -(rotation.transpose() * translation); }
  Vec3 to_camera(const Vec3& p) const { return (rotation * p + translation) / scale; }

  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                            const Intrinsics& intrinsics, int width, int height);
};

void validate_camera(const CameraPose& cam);

/// The camera moved by a similarity: its camera-to-world map becomes t∘C.
/// The scale of t is kept in the camera frame so that camera-space
/// coordinates, and with them the near plane, match those of the scene
/// moved by t^-1.
CameraPose move_camera(const CameraPose& cam, const Sim3& t);

struct RenderSettings {
  double alpha_clip = 0.99;
  /// Added to the diagonal of every projected covariance (px^2).
  double covariance_floor = 0.3;
  double near_plane = 1e-3;
  /// Splats use exp(-m/2) unmodified out to this many standard deviations...
  double cutoff_sigma = 3.0;
  /// ...and are smoothly tapered to zero by this one, keeping the loss C^2.
  double taper_sigma = 4.0;
};

/// H x W raster with three channels and accumulated opacity.
struct FeatureMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, channels interleaved
  std::vector<double> alpha;

  FeatureMap() = default;
  FeatureMap(int w, int h);

  Vec3 pixel(int x, int y) const;
  double alpha_at(int x, int y) const { return alpha[static_cast<std::size_t>(y * width + x)]; }
};

struct ProjectedGaussian {
  Vec2 mean = Vec2::Zero();
  Mat2 covariance = Mat2::Zero();
  double depth = 0.0;
  bool culled = false;
};

/// EWA projection: J W S W^T J^T plus the covariance floor.
ProjectedGaussian project_gaussian(const Gaussian& g, const CameraPose& cam,
                                   const RenderSettings& settings = {});

enum class RenderMode { feature, rgb };

std::string to_string(RenderMode mode);
RenderMode render_mode_from_string(const std::string& name);

/// Front-to-back alpha compositing of the selected channel, depth-sorted by
/// camera z with index tie-break.
FeatureMap render(const GaussianModel& model, const CameraPose& cam, RenderMode mode,
                  const RenderSettings& settings = {});
FeatureMap render_feature_map(const GaussianModel& model, const CameraPose& cam,
                              const RenderSettings& settings = {});
FeatureMap render_rgb(const GaussianModel& model, const CameraPose& cam,
                      const RenderSettings& settings = {});

using Vec7 = Eigen::Matrix<double, 7, 1>;

/// Local chart around a transform: theta = (omega, dt, log_s). The update
/// rotates and scales about `pivot`, then translates:
///   T(theta)(x) = e^log_s * exp(omega) * (T(x) - pivot) + pivot + dt.
Sim3 apply_chart_step(const Sim3& t, const Vec7& theta, const Vec3& pivot);

struct LossGradient {
  double loss = 0.0;
  Vec7 gradient = Vec7::Zero();
};

/// Multi-view consistency objective between a transformed source and a fixed
/// target: sum over views, pixels and channels of squared differences.
/// Target renders are computed once at construction.
class MultiViewObjective {
 public:
  MultiViewObjective(GaussianModel source, const GaussianModel& target,
                     std::vector<CameraPose> cameras, RenderMode mode,
                     const RenderSettings& settings = {}, std::optional<Vec3> pivot = std::nullopt);

  /// Analytic gradient with respect to the chart at t. Throws NoOverlapError
  /// when either model leaves no alpha in every view.
  LossGradient evaluate(const Sim3& t) const;
  double loss(const Sim3& t) const;

  const Vec3& pivot() const { return pivot_; }
  const std::vector<CameraPose>& cameras() const { return cameras_; }
  const std::vector<FeatureMap>& target_renders() const { return target_renders_; }

 private:
  GaussianModel source_;
  std::vector<CameraPose> cameras_;
  RenderMode mode_;
  RenderSettings settings_;
  Vec3 pivot_;
  std::vector<FeatureMap> target_renders_;
  double target_alpha_ = 0.0;
};

/// Pivot defaults to the target centroid.
LossGradient render_loss_gradient(const Sim3& t, const GaussianModel& source,
                                  const GaussianModel& target, const std::vector<CameraPose>& cameras,
                                  RenderMode mode, const RenderSettings& settings = {});

struct LiftView {
  FeatureMap observed;
  CameraPose camera;
};

/// Fits per-Gaussian features to observed feature maps under an L1 loss with
/// geometry, opacity and colour frozen. Adam with learning rate `step`;
/// features are clamped to [0,1] after every update. Gaussians that never
/// contribute to a pixel keep their feature.
GaussianModel lift_features(const GaussianModel& model, std::span<const LiftView> views,
                            int iterations, double step, const RenderSettings& settings = {});

/// Per Gaussian, the largest compositing weight alpha*T it receives in any
/// pixel of any camera.
std::vector<double> gaussian_visibility(const GaussianModel& model,
                                        std::span<const CameraPose> cameras,
                                        const RenderSettings& settings = {});

}  // namespace gsa
