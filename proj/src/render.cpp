#include "gsa/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gsa/error.hpp"

namespace gsa {

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                               const Intrinsics& intrinsics, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // up is parallel to the viewing direction; pick any perpendicular
    const Vec3 alt = std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    right = forward.cross(alt);
  }
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraPose cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -(cam.rotation * eye);
  cam.intrinsics = intrinsics;
  cam.width = width;
  cam.height = height;
  return cam;
}

void validate_camera(const CameraPose& cam) {
  if (!is_proper_rotation(cam.rotation, 1e-6)) throw ValidationError("camera rotation is not proper");
  if (!(cam.intrinsics.fx > 0.0) || !(cam.intrinsics.fy > 0.0)) {
    throw ValidationError("camera focal lengths must be positive");
  }
  if (cam.width <= 0 || cam.height <= 0) throw ValidationError("camera resolution must be positive");
  if (!(cam.scale > 0.0) || !std::isfinite(cam.scale)) throw ValidationError("camera scale must be positive");
}

CameraPose move_camera(const CameraPose& cam, const Sim3& t) {
  CameraPose out = cam;
  const Mat3 cam_to_world = cam.rotation.transpose();
  out.rotation = (t.rotation() * cam_to_world).transpose();
  out.translation = -(out.rotation * t.apply(cam.center()));
  out.scale = t.scale() * cam.scale;
  return out;
}

FeatureMap::FeatureMap(int w, int h)
    : width(w),
      height(h),
      values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0.0),
      alpha(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

Vec3 FeatureMap::pixel(int x, int y) const {
  const std::size_t p = static_cast<std::size_t>(y * width + x) * 3;
  return Vec3(values[p], values[p + 1], values[p + 2]);
}

std::string to_string(RenderMode mode) { return mode == RenderMode::feature ? "feature" : "rgb"; }

RenderMode render_mode_from_string(const std::string& name) {
  if (name == "feature") return RenderMode::feature;
  if (name == "rgb") return RenderMode::rgb;
  throw ValidationError("unknown render mode '" + name + "'");
}

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

struct Splat {
  std::size_t index = 0;
  Vec3 cam = Vec3::Zero();
  Mat23 jac = Mat23::Zero();
  Mat3 cov_cam = Mat3::Zero();
  Vec2 mean = Vec2::Zero();
  Mat2 cov2d = Mat2::Zero();
  Mat2 conic = Mat2::Zero();
  double opacity = 0.0;
  Vec3 value = Vec3::Zero();
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

bool project_splat(const Gaussian& g, const CameraPose& cam, const RenderSettings& s, Splat& out) {
  const Vec3 c = cam.to_camera(g.position);
  if (!(c.z() > s.near_plane)) return false;
  const double fx = cam.intrinsics.fx;
  const double fy = cam.intrinsics.fy;
  const double inv_z = 1.0 / c.z();
  out.cam = c;
  out.mean = Vec2(fx * c.x() * inv_z + cam.intrinsics.cx, fy * c.y() * inv_z + cam.intrinsics.cy);
  out.jac << fx * inv_z, 0.0, -fx * c.x() * inv_z * inv_z,
             0.0, fy * inv_z, -fy * c.y() * inv_z * inv_z;
  out.cov_cam = cam.rotation * g.covariance * cam.rotation.transpose() / (cam.scale * cam.scale);
  out.cov2d = out.jac * out.cov_cam * out.jac.transpose();
  out.cov2d(0, 1) = out.cov2d(1, 0) = 0.5 * (out.cov2d(0, 1) + out.cov2d(1, 0));
  out.cov2d += s.covariance_floor * Mat2::Identity();
  const double det = out.cov2d.determinant();
  if (!(det > 0.0) || !out.mean.allFinite()) return false;
  out.conic << out.cov2d(1, 1) / det, -out.cov2d(0, 1) / det,
               -out.cov2d(1, 0) / det, out.cov2d(0, 0) / det;
  return true;
}

double support_sigma(const RenderSettings& s) { return std::max(s.cutoff_sigma, s.taper_sigma); }

bool set_bounds(Splat& sp, const CameraPose& cam, const RenderSettings& s) {
  const double a = sp.cov2d(0, 0);
  const double b = sp.cov2d(0, 1);
  const double c = sp.cov2d(1, 1);
  const double lambda_max = 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  const double r = support_sigma(s) * std::sqrt(lambda_max);
  sp.x0 = std::max(0, static_cast<int>(std::ceil(sp.mean.x() - r)));
  sp.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(sp.mean.x() + r)));
  sp.y0 = std::max(0, static_cast<int>(std::ceil(sp.mean.y() - r)));
  sp.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(sp.mean.y() + r)));
  return sp.x0 <= sp.x1 && sp.y0 <= sp.y1;
}

/// Splat falloff k(m) for squared Mahalanobis distance m, and dk/dm.
/// exp(-m/2) up to cutoff^2, then multiplied by a quintic smootherstep that
/// reaches zero at taper^2.
struct Kernel {
  double m_in;
  double m_out;

  explicit Kernel(const RenderSettings& s)
      : m_in(s.cutoff_sigma * s.cutoff_sigma),
        m_out(support_sigma(s) * support_sigma(s)) {}

  bool operator()(double m, double& k, double& dk) const {
    if (m >= m_out) return false;
    const double e = std::exp(-0.5 * m);
    if (m <= m_in) {
      k = e;
      dk = -0.5 * e;
      return true;
    }
    const double width = m_out - m_in;
    const double u = (m - m_in) / width;
    const double w = 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    const double dw = -30.0 * u * u * (1.0 - u) * (1.0 - u) / width;
    k = e * w;
    dk = -0.5 * e * w + e * dw;
    return true;
  }
};

const Vec3& channel_of(const Gaussian& g, RenderMode mode) {
  return mode == RenderMode::feature ? g.feature : g.color_dc;
}

std::vector<Splat> prepare_splats(const GaussianModel& model, const CameraPose& cam,
                                  RenderMode mode, const RenderSettings& s) {
  std::vector<Splat> splats;
  splats.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const Gaussian& g = model.gaussians[i];
    Splat sp;
    if (!project_splat(g, cam, s, sp)) continue;
    if (!set_bounds(sp, cam, s)) continue;
    sp.index = i;
    sp.opacity = g.opacity;
    sp.value = channel_of(g, mode);
    splats.push_back(sp);
  }
  std::stable_sort(splats.begin(), splats.end(),
                   [](const Splat& a, const Splat& b) { return a.cam.z() < b.cam.z(); });
  return splats;
}

/// Visits every (splat, pixel) pair in compositing order. The callback gets
/// the splat, pixel index, offset d = pixel - mean, m, k, dk/dm, and the
/// clipped alpha; it returns nothing and may update per-pixel state.
template <typename Fn>
void for_each_fragment(const std::vector<Splat>& splats, int width, const RenderSettings& s,
                       Fn&& fn) {
  const Kernel kernel(s);
  for (const Splat& sp : splats) {
    const double a = sp.conic(0, 0);
    const double b = sp.conic(0, 1);
    const double c = sp.conic(1, 1);
    for (int y = sp.y0; y <= sp.y1; ++y) {
      const double dy = static_cast<double>(y) - sp.mean.y();
      for (int x = sp.x0; x <= sp.x1; ++x) {
        const double dx = static_cast<double>(x) - sp.mean.x();
        const double m = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
        double k = 0.0;
        double dk = 0.0;
        if (!kernel(m, k, dk)) continue;
        const double raw = sp.opacity * k;
        const bool clipped = raw > s.alpha_clip;
        const double alpha = clipped ? s.alpha_clip : raw;
        const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                              static_cast<std::size_t>(x);
        fn(sp, p, dx, dy, dk, alpha, clipped);
      }
    }
  }
}

FeatureMap composite(const std::vector<Splat>& splats, const CameraPose& cam,
                     const RenderSettings& s) {
  FeatureMap out(cam.width, cam.height);
  std::vector<double> trans(out.alpha.size(), 1.0);
  for_each_fragment(splats, cam.width, s,
                    [&](const Splat& sp, std::size_t p, double, double, double, double alpha, bool) {
                      const double w = alpha * trans[p];
                      double* v = &out.values[3 * p];
                      v[0] += w * sp.value[0];
                      v[1] += w * sp.value[1];
                      v[2] += w * sp.value[2];
                      out.alpha[p] += w;
                      trans[p] *= 1.0 - alpha;
                    });
  return out;
}

double total_alpha(const FeatureMap& m) {
  double sum = 0.0;
  for (double a : m.alpha) sum += a;
  return sum;
}

}  // namespace

ProjectedGaussian project_gaussian(const Gaussian& g, const CameraPose& cam,
                                   const RenderSettings& settings) {
  ProjectedGaussian out;
  Splat sp;
  out.depth = cam.to_camera(g.position).z();
  if (!project_splat(g, cam, settings, sp)) {
    out.culled = true;
    return out;
  }
  out.mean = sp.mean;
  out.covariance = sp.cov2d;
  return out;
}

FeatureMap render(const GaussianModel& model, const CameraPose& cam, RenderMode mode,
                  const RenderSettings& settings) {
  return composite(prepare_splats(model, cam, mode, settings), cam, settings);
}

FeatureMap render_feature_map(const GaussianModel& model, const CameraPose& cam,
                              const RenderSettings& settings) {
  return render(model, cam, RenderMode::feature, settings);
}

FeatureMap render_rgb(const GaussianModel& model, const CameraPose& cam,
                      const RenderSettings& settings) {
  return render(model, cam, RenderMode::rgb, settings);
}

Sim3 apply_chart_step(const Sim3& t, const Vec7& theta, const Vec3& pivot) {
  const double s = std::exp(theta[6]);
  const Mat3 r = rotation_from_axis_angle(theta.head<3>());
  const Vec3 dt = theta.segment<3>(3);
  const Sim3 step(s, r, pivot + dt - s * (r * pivot));
  return step * t;
}

MultiViewObjective::MultiViewObjective(GaussianModel source, const GaussianModel& target,
                                       std::vector<CameraPose> cameras, RenderMode mode,
                                       const RenderSettings& settings, std::optional<Vec3> pivot)
    : source_(std::move(source)),
      cameras_(std::move(cameras)),
      mode_(mode),
      settings_(settings),
      pivot_(pivot.value_or(target.centroid())) {
  if (cameras_.empty()) throw ValidationError("multi-view objective needs at least one camera");
  if (source_.empty() || target.empty()) throw ValidationError("multi-view objective needs non-empty models");
  for (const auto& cam : cameras_) validate_camera(cam);
  target_renders_.reserve(cameras_.size());
  for (const auto& cam : cameras_) {
    target_renders_.push_back(render(target, cam, mode_, settings_));
    target_alpha_ += total_alpha(target_renders_.back());
  }
}

double MultiViewObjective::loss(const Sim3& t) const {
  const GaussianModel moved = transform_model(t, source_);
  double loss = 0.0;
  for (std::size_t v = 0; v < cameras_.size(); ++v) {
    const FeatureMap f = render(moved, cameras_[v], mode_, settings_);
    const FeatureMap& ref = target_renders_[v];
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const double r = f.values[i] - ref.values[i];
      loss += r * r;
    }
  }
  return loss;
}

LossGradient MultiViewObjective::evaluate(const Sim3& t) const {
  const GaussianModel moved = transform_model(t, source_);
  const std::size_t n = moved.size();
  std::vector<Vec3> grad_pos(n, Vec3::Zero());
  std::vector<Mat3> grad_cov(n, Mat3::Zero());

  LossGradient out;
  double source_alpha = 0.0;
  for (std::size_t v = 0; v < cameras_.size(); ++v) {
    const CameraPose& cam = cameras_[v];
    const std::vector<Splat> splats = prepare_splats(moved, cam, mode_, settings_);
    const FeatureMap rendered = composite(splats, cam, settings_);
    const FeatureMap& ref = target_renders_[v];
    source_alpha += total_alpha(rendered);

    std::vector<double> dl_df(rendered.values.size());
    for (std::size_t i = 0; i < dl_df.size(); ++i) {
      const double r = rendered.values[i] - ref.values[i];
      out.loss += r * r;
      dl_df[i] = 2.0 * r;
    }

    // Second sweep in the same order. For splat i at pixel p the colour still
    // to come is S = F - (accumulated through i), so
    //   dF/dalpha_i = value_i * T_i - S / (1 - alpha_i).
    std::vector<double> trans(rendered.alpha.size(), 1.0);
    std::vector<double> accum(rendered.values.size(), 0.0);
    std::vector<Vec2> g_mean(splats.size(), Vec2::Zero());
    std::vector<Mat2> g_conic(splats.size(), Mat2::Zero());
    const Splat* first = splats.data();
    for_each_fragment(
        splats, cam.width, settings_,
        [&](const Splat& sp, std::size_t p, double dx, double dy, double dk, double alpha,
            bool clipped) {
          const double tr = trans[p];
          double* acc = &accum[3 * p];
          const double* fin = &rendered.values[3 * p];
          const double* g = &dl_df[3 * p];
          double dl_dalpha = 0.0;
          const double inv = 1.0 / (1.0 - alpha);
          for (int c = 0; c < 3; ++c) {
            acc[c] += sp.value[c] * alpha * tr;
            const double rest = fin[c] - acc[c];
            dl_dalpha += g[c] * (sp.value[c] * tr - rest * inv);
          }
          trans[p] = tr * (1.0 - alpha);
          if (clipped) return;
          const double dl_dm = dl_dalpha * sp.opacity * dk;
          const std::size_t si = static_cast<std::size_t>(&sp - first);
          const Vec2 d(dx, dy);
          g_mean[si] += dl_dm * (-2.0 * (sp.conic * d));
          g_conic[si] += dl_dm * (d * d.transpose());
        });

    const double fx = cam.intrinsics.fx;
    const double fy = cam.intrinsics.fy;
    for (std::size_t si = 0; si < splats.size(); ++si) {
      const Splat& sp = splats[si];
      const Mat2 g_cov2d = -(sp.conic * g_conic[si] * sp.conic);
      const Mat3 g_cov_cam = sp.jac.transpose() * g_cov2d * sp.jac;
      const Mat23 g_jac = 2.0 * (g_cov2d * sp.jac * sp.cov_cam);

      const double x = sp.cam.x();
      const double y = sp.cam.y();
      const double z = sp.cam.z();
      const double iz = 1.0 / z;
      const double iz2 = iz * iz;
      const double iz3 = iz2 * iz;
      Vec3 g_cam;
      g_cam.x() = g_mean[si].x() * fx * iz + g_jac(0, 2) * (-fx * iz2);
      g_cam.y() = g_mean[si].y() * fy * iz + g_jac(1, 2) * (-fy * iz2);
      g_cam.z() = g_mean[si].x() * (-fx * x * iz2) + g_mean[si].y() * (-fy * y * iz2) +
                  g_jac(0, 0) * (-fx * iz2) + g_jac(0, 2) * (2.0 * fx * x * iz3) +
                  g_jac(1, 1) * (-fy * iz2) + g_jac(1, 2) * (2.0 * fy * y * iz3);

      grad_pos[sp.index] += cam.rotation.transpose() * g_cam / cam.scale;
      grad_cov[sp.index] += cam.rotation.transpose() * g_cov_cam * cam.rotation / (cam.scale * cam.scale);
    }
  }

  if (!(source_alpha > 0.0) || !(target_alpha_ > 0.0)) {
    throw NoOverlapError("no overlap signal: a model is invisible in every view");
  }

  static const Mat3 kGenerators[3] = {skew(Vec3::UnitX()), skew(Vec3::UnitY()), skew(Vec3::UnitZ())};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 q = moved.gaussians[i].position - pivot_;
    const Mat3& cov = moved.gaussians[i].covariance;
    const Vec3& gp = grad_pos[i];
    const Mat3& gc = grad_cov[i];
    out.gradient.head<3>() += q.cross(gp);
    for (int k = 0; k < 3; ++k) {
      out.gradient[k] += (gc.cwiseProduct(kGenerators[k] * cov - cov * kGenerators[k])).sum();
    }
    out.gradient.segment<3>(3) += gp;
    out.gradient[6] += gp.dot(q) + 2.0 * gc.cwiseProduct(cov).sum();
  }
  return out;
}

LossGradient render_loss_gradient(const Sim3& t, const GaussianModel& source,
                                  const GaussianModel& target, const std::vector<CameraPose>& cameras,
                                  RenderMode mode, const RenderSettings& settings) {
  const MultiViewObjective objective(source, target, cameras, mode, settings);
  return objective.evaluate(t);
}

namespace {

struct Fragment {
  std::uint32_t pixel;
  std::uint32_t gaussian;
  double weight;
};

std::vector<Fragment> fragment_weights(const GaussianModel& model, const CameraPose& cam,
                                       const RenderSettings& s) {
  const std::vector<Splat> splats = prepare_splats(model, cam, RenderMode::feature, s);
  std::vector<double> trans(static_cast<std::size_t>(cam.width) * cam.height, 1.0);
  std::vector<Fragment> out;
  for_each_fragment(splats, cam.width, s,
                    [&](const Splat& sp, std::size_t p, double, double, double, double alpha, bool) {
                      out.push_back({static_cast<std::uint32_t>(p),
                                     static_cast<std::uint32_t>(sp.index), alpha * trans[p]});
                      trans[p] *= 1.0 - alpha;
                    });
  return out;
}

}  // namespace

GaussianModel lift_features(const GaussianModel& model, std::span<const LiftView> views,
                            int iterations, double step, const RenderSettings& settings) {
  if (views.empty()) throw ValidationError("feature lifting needs at least one view");
  const std::size_t n = model.size();
  std::vector<std::vector<Fragment>> frags;
  frags.reserve(views.size());
  for (const auto& view : views) {
    validate_camera(view.camera);
    if (view.observed.width != view.camera.width || view.observed.height != view.camera.height) {
      throw ValidationError("observed feature map size does not match its camera");
    }
    frags.push_back(fragment_weights(model, view.camera, settings));
  }

  GaussianModel out = model;
  out.has_features = true;
  std::vector<Vec3> m1(n, Vec3::Zero());
  std::vector<Vec3> m2(n, Vec3::Zero());
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  for (int it = 1; it <= iterations; ++it) {
    std::vector<Vec3> grad(n, Vec3::Zero());
    for (std::size_t v = 0; v < views.size(); ++v) {
      const FeatureMap& obs = views[v].observed;
      std::vector<double> rendered(obs.values.size(), 0.0);
      for (const Fragment& f : frags[v]) {
        const Vec3& feat = out.gaussians[f.gaussian].feature;
        for (int c = 0; c < 3; ++c) rendered[3 * f.pixel + c] += f.weight * feat[c];
      }
      for (const Fragment& f : frags[v]) {
        for (int c = 0; c < 3; ++c) {
          const double r = rendered[3 * f.pixel + c] - obs.values[3 * f.pixel + c];
          const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
          grad[f.gaussian][c] += sign * f.weight;
        }
      }
    }
    const double bc1 = 1.0 - std::pow(kBeta1, it);
    const double bc2 = 1.0 - std::pow(kBeta2, it);
    for (std::size_t i = 0; i < n; ++i) {
      m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * grad[i];
      m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * grad[i].cwiseProduct(grad[i]);
      const Vec3 mhat = m1[i] / bc1;
      const Vec3 vhat = m2[i] / bc2;
      Vec3& f = out.gaussians[i].feature;
      for (int c = 0; c < 3; ++c) {
        f[c] = std::clamp(f[c] - step * mhat[c] / (std::sqrt(vhat[c]) + kEps), 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<double> gaussian_visibility(const GaussianModel& model,
                                        std::span<const CameraPose> cameras,
                                        const RenderSettings& settings) {
  std::vector<double> vis(model.size(), 0.0);
  for (const auto& cam : cameras) {
    for (const Fragment& f : fragment_weights(model, cam, settings)) {
      vis[f.gaussian] = std::max(vis[f.gaussian], f.weight);
    }
  }
  return vis;
}

}  // namespace gsa
