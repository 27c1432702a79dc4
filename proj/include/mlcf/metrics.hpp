#ifndef MLCF_METRICS_HPP
#define MLCF_METRICS_HPP

#include "mlcf/types.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace mlcf::metrics {

/// NMSE of a perfect reconstruction.
inline constexpr double kExactNmseDb = -std::numeric_limits<double>::infinity();

struct NmseResult {
  double db = kExactNmseDb;
  Index used = 0;
  Index skipped = 0;  // true samples with zero norm
};

/// 10 log10 of the mean per-sample ||H - H_hat||_F^2 / ||H||_F^2.
inline NmseResult nmse(std::span<const Matrix> truth, std::span<const Matrix> estimate) {
  require_shape(truth.size() == estimate.size(), "nmse: sample count mismatch");
  NmseResult r;
  double sum = 0.0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    require_shape(truth[s].rows() == estimate[s].rows() && truth[s].cols() == estimate[s].cols(),
                  "nmse: sample shape mismatch");
    const double power = truth[s].squaredNorm();
    if (!(power > 0.0)) {
      ++r.skipped;
      continue;
    }
    sum += (truth[s] - estimate[s]).squaredNorm() / power;
    ++r.used;
  }
  if (r.used == 0) throw NumericError("nmse: every true sample has zero norm");
  const double mean = sum / static_cast<double>(r.used);
  r.db = mean > 0.0 ? 10.0 * std::log10(mean) : kExactNmseDb;
  return r;
}

inline double nmse_db(std::span<const Matrix> truth, std::span<const Matrix> estimate) {
  return nmse(truth, estimate).db;
}

inline double nmse_db(const Matrix& truth, const Matrix& estimate) {
  return nmse(std::span<const Matrix>(&truth, 1), std::span<const Matrix>(&estimate, 1)).db;
}

struct CosineResult {
  double rho = 0.0;
  Index used = 0;
  Index skipped = 0;  // rows with zero norm on either side
};

/// Mean over samples and subcarrier rows of |h_hat h^H| / (||h_hat|| ||h||).
inline CosineResult cosine_similarity(std::span<const CMatrix> truth, std::span<const CMatrix> estimate) {
  require_shape(truth.size() == estimate.size(), "cosine: sample count mismatch");
  CosineResult r;
  double sample_sum = 0.0;
  Index samples = 0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    require_shape(truth[s].rows() == estimate[s].rows() && truth[s].cols() == estimate[s].cols(),
                  "cosine: sample shape mismatch");
    double row_sum = 0.0;
    Index rows = 0;
    for (Index n = 0; n < truth[s].rows(); ++n) {
      const double nh = truth[s].row(n).norm();
      const double ne = estimate[s].row(n).norm();
      if (!(nh > 0.0) || !(ne > 0.0)) {
        ++r.skipped;
        continue;
      }
      const Complex inner = estimate[s].row(n).dot(truth[s].row(n));  // conj(h_hat) . h, same modulus
      row_sum += std::abs(inner) / (nh * ne);
      ++rows;
    }
    if (rows > 0) {
      sample_sum += row_sum / static_cast<double>(rows);
      ++samples;
      r.used += rows;
    }
  }
  if (samples == 0) throw NumericError("cosine: no usable rows");
  r.rho = sample_sum / static_cast<double>(samples);
  return r;
}

/// Downlink sum rate with zero-forcing built from `estimate` and evaluated on
/// `truth`.  Each element of the spans is one single-antenna user's N_f x N_t
/// channel; power is split equally and every precoder column has unit norm.
/// Noise power is 1, so snr_db is the total transmit power.
inline double spectral_efficiency(std::span<const CMatrix> truth, std::span<const CMatrix> estimate, double snr_db) {
  require_shape(truth.size() == estimate.size() && !truth.empty(), "spectral_efficiency: user count mismatch");
  const Index users = static_cast<Index>(truth.size());
  const Index nf = truth[0].rows();
  const Index nt = truth[0].cols();
  if (users > nt) throw ConfigError("spectral_efficiency: more users than transmit antennas");
  for (std::size_t u = 0; u < truth.size(); ++u)
    require_shape(truth[u].rows() == nf && truth[u].cols() == nt && estimate[u].rows() == nf && estimate[u].cols() == nt,
                  "spectral_efficiency: user channel shape mismatch");
  const double power = std::pow(10.0, snr_db / 10.0) / static_cast<double>(users);

  double total = 0.0;
  CMatrix h(users, nt), h_hat(users, nt);
  for (Index n = 0; n < nf; ++n) {
    for (Index u = 0; u < users; ++u) {
      h.row(u) = truth[static_cast<std::size_t>(u)].row(n);
      h_hat.row(u) = estimate[static_cast<std::size_t>(u)].row(n);
    }
    Eigen::JacobiSVD<CMatrix> svd(h_hat);
    const auto& sv = svd.singularValues();
    if (!(sv(users - 1) > 1e-10 * sv(0)))
      throw NumericError("spectral_efficiency: estimated channel is rank deficient");
    CMatrix precoder = h_hat.adjoint() * (h_hat * h_hat.adjoint()).inverse();  // N_t x U
    for (Index u = 0; u < users; ++u) precoder.col(u).normalize();
    const CMatrix gains = h * precoder;  // U x U, (u, v): user u through beam v
    for (Index u = 0; u < users; ++u) {
      double interference = 0.0;
      for (Index v = 0; v < users; ++v)
        if (v != u) interference += std::norm(gains(u, v));
      const double sinr = power * std::norm(gains(u, u)) / (1.0 + power * interference);
      total += std::log2(1.0 + sinr);
    }
  }
  return total / static_cast<double>(nf);
}

}  // namespace mlcf::metrics

#endif  // MLCF_METRICS_HPP
