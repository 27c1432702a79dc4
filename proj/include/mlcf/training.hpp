#ifndef MLCF_TRAINING_HPP
#define MLCF_TRAINING_HPP

// End-to-end dictionary learning: compression landmarks on X, an embedding
// Y of X, the low-dimensional companion of the landmarks, and the
// reconstruction pair learned on Y.

#include "mlcf/bundle.hpp"
#include "mlcf/landmarks.hpp"
#include "mlcf/types.hpp"

#include <algorithm>
#include <random>

namespace mlcf {

struct TrainedCodec {
  CodecBundle bundle;
  Embedding embedding;
  TrainResult compression;
  TrainResult reconstruction;
};

inline TrainedCodec train_codec(const Matrix& x, const TrainConfig& cfg, const TrainObserver& observer = {}) {
  cfg.validate(x.cols());
  cfg.validate_embedding(x.rows());
  TrainedCodec out;
  out.compression = train_landmarks(x, cfg, observer);
  out.embedding = embed_training_set(x, cfg.intrinsic_dim, cfg.embed, cfg.k_neighbors, cfg.ridge_eps);
  auto rc = fit_reconstruction_dictionaries(x, out.embedding.coords, cfg, observer);
  out.reconstruction = std::move(rc.train);

  out.bundle.config = cfg;
  out.bundle.dh_dr = out.compression.dictionary;
  out.bundle.dl_dr = fit_low_dim_dictionary(out.embedding.coords, out.compression.weights, cfg.ridge_eps);
  out.bundle.dl_rc = std::move(rc.dl_rc);
  out.bundle.dh_rc = std::move(rc.dh_rc);
  out.bundle.validate();
  return out;
}

/// Baseline without learning: M distinct random training columns and their
/// embeddings serve directly as both landmark pairs.
inline CodecBundle random_landmark_bundle(const Matrix& x, const Matrix& y, const TrainConfig& cfg, std::uint64_t seed) {
  require_shape(x.cols() == y.cols(), "random_landmark_bundle: X and Y disagree on N");
  cfg.validate(x.cols());
  const auto picks = detail::sample_distinct_columns(x, cfg.m_landmarks, seed);
  CodecBundle b;
  b.config = cfg;
  b.dh_dr.resize(x.rows(), cfg.m_landmarks);
  b.dl_dr.resize(y.rows(), cfg.m_landmarks);
  for (Index j = 0; j < cfg.m_landmarks; ++j) {
    b.dh_dr.col(j) = x.col(picks[static_cast<std::size_t>(j)]);
    b.dl_dr.col(j) = y.col(picks[static_cast<std::size_t>(j)]);
  }
  b.dl_rc = b.dl_dr;
  b.dh_rc = b.dh_dr;
  b.validate();
  return b;
}

}  // namespace mlcf

#endif  // MLCF_TRAINING_HPP
