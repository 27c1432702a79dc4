#ifndef MLCF_CODEC_HPP
#define MLCF_CODEC_HPP

// Incremental CSI compression (UE) and reconstruction (BS).
//
// Each column is located among its k nearest landmarks, expressed as a
// sum-to-one combination of them, and the same combination is applied to the
// paired dictionary on the other side of the map.

#include "mlcf/bundle.hpp"
#include "mlcf/landmarks.hpp"
#include "mlcf/types.hpp"

#include <chrono>
#include <numeric>
#include <optional>
#include <vector>

namespace mlcf {

struct Ratio {
  Index num = 0;
  Index den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Ratio&) const = default;
};

/// gamma = d / (2 N_f), reduced.
inline Ratio compression_ratio(Index d, Index n_freq) {
  if (d < 1 || n_freq < 1) throw ConfigError("compression_ratio: d and N_f must be >= 1");
  const Index den = 2 * n_freq;
  const Index g = std::gcd(d, den);
  return {d / g, den / g};
}

/// Work counters for the complexity contract.
struct OpCounts {
  Index distance_evals = 0;  // query-to-landmark distances
  Index weight_solves = 0;   // k x k systems
  Index solve_dim = 0;       // k of the last solve
};

struct IncrementalWeights {
  std::vector<Index> support;  // neighbor landmarks, nearest first
  Vector values;               // weights on `support`, summing to one

  Vector dense(Index m) const {
    Vector w = Vector::Zero(m);
    for (std::size_t t = 0; t < support.size(); ++t) w(support[t]) += values(static_cast<Index>(t));
    return w;
  }
};

/// Weights of a new query against a fixed dictionary (mu = 0).
inline IncrementalWeights solve_incremental_weights(const Eigen::Ref<const Vector>& v, const Matrix& dictionary, Index k,
                                                    double lambda, double ridge_eps, OpCounts* counts = nullptr) {
  const auto nb = knn_landmarks(v, dictionary, k);
  IncrementalWeights w;
  w.values = solve_local_weights(v, nb.patch, lambda, 0.0, Vector::Zero(k), ridge_eps);
  w.support = nb.indices;
  if (counts) {
    counts->distance_evals += dictionary.cols();
    counts->weight_solves += 1;
    counts->solve_dim = k;
  }
  return w;
}

/// Inference-time overrides; unset fields fall back to the bundle's training values.
struct CodecOptions {
  std::optional<Index> k;
  std::optional<double> lambda;
};

struct CodecStats {
  std::vector<std::vector<Index>> supports;
  std::vector<double> approximation_errors;
  double seconds = 0.0;
  OpCounts ops;
};

struct CodecResult {
  Matrix output;
  CodecStats stats;
};

namespace detail {

inline CodecResult apply_codec(const Matrix& input, const Matrix& source, const Matrix& target, const TrainConfig& cfg,
                               const CodecOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const Index k = opts.k.value_or(cfg.k_neighbors);
  const double lambda = opts.lambda.value_or(cfg.lambda);
  if (!input.allFinite()) throw NumericError("codec: non-finite input");
  CodecResult r;
  r.output.resize(target.rows(), input.cols());
  r.stats.supports.reserve(static_cast<std::size_t>(input.cols()));
  r.stats.approximation_errors.reserve(static_cast<std::size_t>(input.cols()));
  for (Index i = 0; i < input.cols(); ++i) {
    const auto w = solve_incremental_weights(input.col(i), source, k, lambda, cfg.ridge_eps, &r.stats.ops);
    Vector out = Vector::Zero(target.rows());
    Vector approx = Vector::Zero(source.rows());
    for (std::size_t t = 0; t < w.support.size(); ++t) {
      out += w.values(static_cast<Index>(t)) * target.col(w.support[t]);
      approx += w.values(static_cast<Index>(t)) * source.col(w.support[t]);
    }
    r.output.col(i) = out;
    r.stats.approximation_errors.push_back((input.col(i) - approx).norm());
    r.stats.supports.push_back(w.support);
  }
  r.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace detail

/// Y_new = D_L^dr W_dr for a real-stacked CSI matrix (2N_f x N_t).
inline CodecResult compress(const Matrix& csi, const CodecBundle& bundle, const CodecOptions& opts = {}) {
  require_shape(csi.rows() == bundle.ambient_dim(), "compress: CSI has " + std::to_string(csi.rows()) +
                                                         " rows, bundle expects " + std::to_string(bundle.ambient_dim()));
  return detail::apply_codec(csi, bundle.dh_dr, bundle.dl_dr, bundle.config, opts);
}

/// H_hat = D_H^rc W_rc for an embedding (d x N_t).
inline CodecResult reconstruct(const Matrix& embedding, const CodecBundle& bundle, const CodecOptions& opts = {}) {
  require_shape(embedding.rows() == bundle.embed_dim(), "reconstruct: embedding has " +
                                                            std::to_string(embedding.rows()) + " rows, bundle expects " +
                                                            std::to_string(bundle.embed_dim()));
  return detail::apply_codec(embedding, bundle.dl_rc, bundle.dh_rc, bundle.config, opts);
}

}  // namespace mlcf

#endif  // MLCF_CODEC_HPP
