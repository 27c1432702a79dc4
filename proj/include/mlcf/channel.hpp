#ifndef MLCF_CHANNEL_HPP
#define MLCF_CHANNEL_HPP

// Clustered multipath MIMO-OFDM downlink channel generator.
//
// A ray has gain alpha, delay tau, Doppler w and departure angle theta; the
// channel seen on carrier f at time t is
//
//   h_f(t) = sum_rays alpha * exp(-j 2 pi f tau) * exp(j w t) * a(theta)
//
// with a(theta)_n = exp(j 2 pi n (D / lambda0) sin theta) for a ULA.
// Cluster statistics are a parameterized stand-in for the CDL-A tables:
// exponential cluster delays, uniform cluster centres with a bounded angular
// spread around them, and Rayleigh ray gains.

#include "mlcf/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace mlcf::channel {

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct ChannelConfig {
  Index n_tx = 32;
  Index n_freq = 48;  // one bin per resource block
  double carrier_hz = 3.5e9;
  double subcarrier_spacing_hz = 15e3;
  Index subcarriers_per_rb = 12;
  Index n_clusters = 23;
  Index rays_per_cluster = 20;
  double delay_spread_s = 300e-9;
  double ue_speed_mps = 30.0 / 3.6;
  double element_spacing_wavelengths = 0.5;
  double angular_spread_rad = 5.0 * std::numbers::pi / 180.0;  // half-width around each cluster centre
  double slot_period_s = 1e-3;
  std::uint64_t rng_seed = 1;

  double rb_spacing_hz() const { return subcarrier_spacing_hz * static_cast<double>(subcarriers_per_rb); }
  double wavelength_m() const { return kSpeedOfLight / carrier_hz; }

  /// Centre frequency of bin i: carrier + (i - N_f/2) * RB spacing.
  double frequency(Index i) const {
    return carrier_hz + (static_cast<double>(i) - static_cast<double>(n_freq) / 2.0) * rb_spacing_hz();
  }

  void validate() const {
    if (n_tx < 1 || n_freq < 1 || n_clusters < 1 || rays_per_cluster < 1 || subcarriers_per_rb < 1)
      throw ConfigError("channel: counts must be >= 1");
    const double physical[] = {carrier_hz, subcarrier_spacing_hz, delay_spread_s, ue_speed_mps,
                               element_spacing_wavelengths, angular_spread_rad, slot_period_s};
    for (double v : physical)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("channel: physical quantities must be finite and >= 0");
    if (carrier_hz <= 0.0) throw ConfigError("channel: carrier_hz must be > 0");
    if (n_freq > 1 && subcarrier_spacing_hz <= 0.0)
      throw ConfigError("channel: frequency grid must be strictly increasing");
  }
};

struct Ray {
  Complex gain;
  double delay_s = 0.0;
  double doppler_rad_s = 0.0;
  double aod_rad = 0.0;
};

/// Wideband channel of one slot: N_f rows (carriers) by N_t columns (antennas).
struct ComplexChannelMatrix {
  CMatrix entries;
  double slot_time_s = 0.0;
};

/// ULA response exp(j 2 pi n spacing sin(theta)), n = 0..n_tx-1.
inline CRowVector steering_vector(double theta_rad, Index n_tx, double spacing_wavelengths) {
  CRowVector a(n_tx);
  const double phase_step = 2.0 * std::numbers::pi * spacing_wavelengths * std::sin(theta_rad);
  for (Index n = 0; n < n_tx; ++n) a(n) = std::polar(1.0, phase_step * static_cast<double>(n));
  return a;
}

/// Samples N_c * N_p rays. Gains are rescaled so that sum |alpha|^2 == 1.
inline std::vector<Ray> draw_cluster_params(const ChannelConfig& config, std::mt19937_64& rng) {
  config.validate();
  constexpr double pi = std::numbers::pi;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

  const double max_doppler = 2.0 * pi * config.ue_speed_mps / config.wavelength_m();
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(config.n_clusters * config.rays_per_cluster));
  for (Index c = 0; c < config.n_clusters; ++c) {
    const double delay = config.delay_spread_s > 0.0 ? -config.delay_spread_s * std::log1p(-unit(rng)) : 0.0;
    // Later clusters arrive weaker, as in the CDL power-delay profiles.
    const double cluster_power = config.delay_spread_s > 0.0 ? std::exp(-delay / config.delay_spread_s) : 1.0;
    const double centre = -pi / 2.0 + pi * unit(rng);
    for (Index r = 0; r < config.rays_per_cluster; ++r) {
      Ray ray;
      ray.delay_s = delay;
      const double offset = config.angular_spread_rad * (2.0 * unit(rng) - 1.0);
      ray.aod_rad = std::clamp(centre + offset, -pi / 2.0, pi / 2.0);
      ray.doppler_rad_s = max_doppler * std::cos(2.0 * pi * unit(rng));
      const double g_re = gauss(rng);
      const double g_im = gauss(rng);
      ray.gain = std::sqrt(cluster_power) * Complex(g_re, g_im);
      rays.push_back(ray);
    }
  }

  double power = 0.0;
  for (const auto& ray : rays) power += std::norm(ray.gain);
  if (!(power > 0.0)) {
    // Measure-zero event; fall back to equal-power rays.
    for (auto& ray : rays) ray.gain = Complex(1.0, 0.0);
    power = static_cast<double>(rays.size());
  }
  const double scale = 1.0 / std::sqrt(power);
  for (auto& ray : rays) ray.gain *= scale;
  return rays;
}

inline std::vector<Ray> draw_cluster_params(const ChannelConfig& config) {
  std::mt19937_64 rng(config.rng_seed);
  return draw_cluster_params(config, rng);
}

/// Channel row vector (length N_t) at carrier frequency f and time t.
inline CRowVector generate_channel_vector(std::span<const Ray> rays, double freq_hz, double time_s,
                                          const ChannelConfig& config) {
  if (rays.empty()) throw ConfigError("channel: empty ray list");
  CRowVector h = CRowVector::Zero(config.n_tx);
  for (const auto& ray : rays) {
    const Complex coeff = ray.gain * std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * ray.delay_s) *
                          std::polar(1.0, ray.doppler_rad_s * time_s);
    h += coeff * steering_vector(ray.aod_rad, config.n_tx, config.element_spacing_wavelengths);
  }
  return h;
}

inline ComplexChannelMatrix assemble_wideband(std::span<const Ray> rays, const ChannelConfig& config, double time_s) {
  ComplexChannelMatrix out;
  out.slot_time_s = time_s;
  out.entries.resize(config.n_freq, config.n_tx);
  for (Index i = 0; i < config.n_freq; ++i)
    out.entries.row(i) = generate_channel_vector(rays, config.frequency(i), time_s, config);
  return out;
}

/// [Re(H); Im(H)], 2N_f x N_t.
inline Matrix real_stack(const CMatrix& h) {
  Matrix r(2 * h.rows(), h.cols());
  r.topRows(h.rows()) = h.real();
  r.bottomRows(h.rows()) = h.imag();
  return r;
}

inline CMatrix complex_unstack(const Matrix& r) {
  if (r.rows() % 2 != 0) throw ShapeError("complex_unstack: odd row count " + std::to_string(r.rows()));
  const Index nf = r.rows() / 2;
  CMatrix h(nf, r.cols());
  h.real() = r.topRows(nf);
  h.imag() = r.bottomRows(nf);
  return h;
}

/// Training set X = [H~(t_1) ... H~(t_Ts)], 2N_f x (N_t * T_s).
struct Dataset {
  Matrix columns;
  Index slot_count = 0;
  Index n_tx = 0;

  Index size() const { return columns.cols(); }
  /// Real-stacked CSI of slot s (a 2N_f x N_t view copy).
  Matrix slot(Index s) const { return columns.middleCols(s * n_tx, n_tx); }
};

inline std::vector<double> periodic_slot_times(Index slot_count, double period_s) {
  std::vector<double> times(static_cast<std::size_t>(slot_count));
  for (Index s = 0; s < slot_count; ++s) times[static_cast<std::size_t>(s)] = static_cast<double>(s) * period_s;
  return times;
}

/// Slot instants drawn uniformly over [0, window_s), in ascending order.
inline std::vector<double> random_slot_times(Index slot_count, double window_s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, window_s);
  std::vector<double> times(static_cast<std::size_t>(slot_count));
  for (auto& t : times) t = u(rng);
  std::sort(times.begin(), times.end());
  return times;
}

inline Dataset build_dataset(std::span<const Ray> rays, const ChannelConfig& config, std::span<const double> slot_times) {
  config.validate();
  if (slot_times.empty()) throw ConfigError("build_dataset: need at least one slot");
  Dataset ds;
  ds.slot_count = static_cast<Index>(slot_times.size());
  ds.n_tx = config.n_tx;
  ds.columns.resize(2 * config.n_freq, config.n_tx * ds.slot_count);
  for (Index s = 0; s < ds.slot_count; ++s) {
    const auto h = assemble_wideband(rays, config, slot_times[static_cast<std::size_t>(s)]);
    ds.columns.middleCols(s * config.n_tx, config.n_tx) = real_stack(h.entries);
  }
  return ds;
}

/// T_s periodic slots of the scenario fixed by config.rng_seed.
inline Dataset build_dataset(const ChannelConfig& config, Index slot_count) {
  if (slot_count < 1) throw ConfigError("build_dataset: slot_count must be >= 1");
  const auto rays = draw_cluster_params(config);
  const auto times = periodic_slot_times(slot_count, config.slot_period_s);
  return build_dataset(rays, config, times);
}

inline bool snr_is_noiseless(double snr_db) { return std::isinf(snr_db) && snr_db > 0.0; }

/// Additive white Gaussian estimation noise at Frobenius-power SNR snr_db.
/// +inf returns the input unchanged.
inline Matrix add_estimation_noise(const Matrix& x, double snr_db, std::mt19937_64& rng) {
  if (std::isnan(snr_db)) throw ConfigError("add_estimation_noise: snr_db is NaN");
  if (snr_is_noiseless(snr_db)) return x;
  if (x.size() == 0) return x;
  if (!x.allFinite()) throw NumericError("add_estimation_noise: non-finite input");
  const double signal = x.squaredNorm() / static_cast<double>(x.size());
  const double sigma = std::sqrt(signal / std::pow(10.0, snr_db / 10.0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix out = x;
  for (Index c = 0; c < out.cols(); ++c)
    for (Index r = 0; r < out.rows(); ++r) out(r, c) += sigma * gauss(rng);
  return out;
}

}  // namespace mlcf::channel

#endif  // MLCF_CHANNEL_HPP
