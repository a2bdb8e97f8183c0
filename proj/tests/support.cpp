#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsa/fine.hpp"

namespace gsa::testing {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

Sim3 random_transform(std::mt19937_64& rng, double max_log_scale, double translation) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double s = std::exp(max_log_scale * u(rng));
  return Sim3(s, random_rotation(rng), translation * Vec3(u(rng), u(rng), u(rng)));
}

Mat3 random_spd(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const Mat3 r = random_rotation(rng);
  const Vec3 d(u(rng), u(rng), u(rng));
  const Mat3 m = r * d.asDiagonal() * r.transpose();
  return 0.5 * (m + m.transpose());
}

GaussianModel random_cloud(std::mt19937_64& rng, std::size_t n, double spread) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GaussianModel m;
  for (std::size_t i = 0; i < n; ++i) {
    Gaussian g;
    g.position = spread * Vec3(normal(rng), normal(rng), normal(rng));
    g.covariance = random_spd(rng, 0.002, 0.03);
    g.opacity = 0.3 + 0.6 * u(rng);
    g.color_dc = Vec3(u(rng), u(rng), u(rng));
    g.feature = Vec3(u(rng), u(rng), u(rng));
    m.gaussians.push_back(g);
  }
  return m;
}

double min_depth_gap(const GaussianModel& model, const Sim3& t, const std::vector<CameraPose>& cams) {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& cam : cams) {
    std::vector<double> z;
    for (const auto& g : model.gaussians) z.push_back(cam.to_camera(t.apply(g.position)).z());
    std::sort(z.begin(), z.end());
    for (std::size_t i = 1; i < z.size(); ++i) gap = std::min(gap, z[i] - z[i - 1]);
  }
  return gap;
}

GradientCase general_position_case(std::mt19937_64& rng, std::size_t n, double min_gap,
                                   int resolution) {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (;;) {
    GradientCase c;
    c.source = random_cloud(rng, n);
    c.target = random_cloud(rng, n);
    c.transform = Sim3(std::exp(u(rng)), rotation_from_euler_xyz(u(rng), u(rng), u(rng)),
                       0.3 * Vec3(u(rng), u(rng), u(rng)));
    c.cameras = select_views(c.target, 3, ViewStrategy::diverse_fibonacci, resolution, resolution);
    if (min_depth_gap(c.source, c.transform, c.cameras) >= min_gap) return c;
  }
}

Vec7 finite_difference_gradient(const MultiViewObjective& objective, const Sim3& t,
                                double length_scale) {
  const double steps[7] = {1e-4, 1e-4, 1e-4, 1e-4 * length_scale, 1e-4 * length_scale,
                           1e-4 * length_scale, 1e-4};
  Vec7 g;
  for (int k = 0; k < 7; ++k) {
    Vec7 e = Vec7::Zero();
    e[k] = steps[k];
    const double plus = objective.loss(apply_chart_step(t, e, objective.pivot()));
    const double minus = objective.loss(apply_chart_step(t, -e, objective.pivot()));
    g[k] = (plus - minus) / (2.0 * steps[k]);
  }
  return g;
}

double gradient_relative_error(const Vec7& analytic, const Vec7& reference, double floor) {
  double worst = 0.0;
  for (int k = 0; k < 7; ++k) {
    const double denom = std::max(std::abs(reference[k]), floor);
    worst = std::max(worst, std::abs(analytic[k] - reference[k]) / denom);
  }
  return worst;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gsa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gsa::testing
