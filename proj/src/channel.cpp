#include "gpchan/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gpchan {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

double wrap_to_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double clamp_elevation(double e) { return std::clamp(e, -0.5 * M_PI, 0.5 * M_PI); }

struct Ray {
  double power = 0.0;  // envelope power before gain draw
  double aoa_az = 0.0, aoa_el = 0.0;
  double aod_az = 0.0, aod_el = 0.0;
  bool los = false;
};

}  // namespace

Eigen::VectorXcd steering_vector(const UraGeometry& geom, double azimuth, double elevation,
                                 double spacing_over_lambda) {
  if (!std::isfinite(azimuth) || !std::isfinite(elevation))
    throw std::invalid_argument("steering_vector: angles must be finite");
  Eigen::VectorXcd v(geom.total());
  const double ky = 2.0 * M_PI * spacing_over_lambda * std::sin(azimuth) * std::cos(elevation);
  const double kz = 2.0 * M_PI * spacing_over_lambda * std::sin(elevation);
  for (int i = 1; i <= geom.total(); ++i) {
    const LatticeCoord c = coords_of(i, geom);
    const double phase = ky * c.y + kz * c.z;
    v[i - 1] = std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return v;
}

ChannelMatrix generate_sv(const SvParams& params, const UraGeometry& rx_geom,
                          const UraGeometry& tx_geom, RngStream& rng) {
  if (params.n_paths < 1 || params.cluster_arrival_mean_ns <= 0 ||
      params.ray_arrival_mean_ns <= 0 || params.cluster_decay_ns <= 0 || params.ray_decay_ns <= 0)
    throw std::invalid_argument("generate_sv: invalid parameters");
  if (params.reflection_loss_db_lo > params.reflection_loss_db_hi ||
      params.reflection_loss_db_hi > 0)
    throw std::invalid_argument("generate_sv: reflection loss range must satisfy lo <= hi <= 0");

  const int max_attempts = 8;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const int n_clusters =
        std::max(1, rng.poisson(std::max(1.0, params.n_paths / 3.0)));
    const double rays_mean = std::max(2.0, static_cast<double>(params.n_paths) / n_clusters);

    std::vector<Ray> rays;
    double cluster_delay = 0.0;  // first cluster arrives at zero
    for (int c = 0; c < n_clusters; ++c) {
      if (c > 0) cluster_delay += rng.exponential(params.cluster_arrival_mean_ns);
      const int n_rays = std::max(1, rng.poisson(rays_mean));

      const double mean_aoa_az = rng.uniform(-M_PI, M_PI);
      const double mean_aoa_el = rng.uniform(-0.5 * M_PI, 0.5 * M_PI);
      const double mean_aod_az = rng.uniform(-M_PI, M_PI);
      const double mean_aod_el = rng.uniform(-0.5 * M_PI, 0.5 * M_PI);

      double ray_delay = 0.0;  // first ray of each cluster at the cluster arrival
      for (int r = 0; r < n_rays; ++r) {
        if (r > 0) ray_delay += rng.exponential(params.ray_arrival_mean_ns);
        Ray ray;
        ray.power = std::exp(-cluster_delay / params.cluster_decay_ns) *
                    std::exp(-ray_delay / params.ray_decay_ns);
        ray.los = (c == 0 && r == 0);
        if (ray.los) {
          ray.aoa_az = mean_aoa_az;
          ray.aoa_el = mean_aoa_el;
          ray.aod_az = mean_aod_az;
          ray.aod_el = mean_aod_el;
        } else {
          const double saz = params.angular_spread_az_deg * kDegToRad;
          const double sel = params.angular_spread_el_deg * kDegToRad;
          ray.aoa_az = wrap_to_pi(mean_aoa_az + saz * rng.normal());
          ray.aoa_el = clamp_elevation(mean_aoa_el + sel * rng.normal());
          ray.aod_az = wrap_to_pi(mean_aod_az + saz * rng.normal());
          ray.aod_el = clamp_elevation(mean_aod_el + sel * rng.normal());
          // Reflection loss applied per diffuse ray, drawn in dB.
          const double loss_db =
              rng.uniform(params.reflection_loss_db_lo, params.reflection_loss_db_hi);
          ray.power *= std::pow(10.0, loss_db / 10.0);
        }
        rays.push_back(ray);
      }
    }
    if (rays.empty()) continue;

    // Split total power between the line-of-sight ray and the diffuse rays
    // according to the K-factor, then draw circular Gaussian gains.
    const double k_lin = std::pow(10.0, params.k_factor_db / 10.0);
    double diffuse_sum = 0.0;
    for (const Ray& r : rays)
      if (!r.los) diffuse_sum += r.power;

    const bool has_diffuse = diffuse_sum > 0.0;
    const double los_power = has_diffuse ? k_lin / (1.0 + k_lin) : 1.0;
    const double diffuse_power = has_diffuse ? 1.0 / (1.0 + k_lin) : 0.0;

    ChannelMatrix h = ChannelMatrix::Zero(rx_geom.total(), tx_geom.total());
    for (const Ray& r : rays) {
      const double p =
          r.los ? los_power : (has_diffuse ? diffuse_power * r.power / diffuse_sum : 0.0);
      if (p <= 0.0) continue;
      const std::complex<double> gain = std::sqrt(p) * rng.complex_normal();
      const Eigen::VectorXcd ar =
          steering_vector(rx_geom, r.aoa_az, r.aoa_el, params.spacing_over_lambda);
      const Eigen::VectorXcd at =
          steering_vector(tx_geom, r.aod_az, r.aod_el, params.spacing_over_lambda);
      h.noalias() += gain * (ar * at.adjoint());
    }

    const double fro = h.norm();
    if (!(fro > 0.0) || !h.allFinite()) continue;
    // Per-entry unit power over the realization.
    h *= std::sqrt(static_cast<double>(rx_geom.total()) * tx_geom.total()) / fro;
    return h;
  }
  throw std::runtime_error("generate_sv: degenerate draws exhausted retry budget");
}

}  // namespace gpchan
