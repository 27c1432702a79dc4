#ifndef MLCF_LANDMARKS_HPP
#define MLCF_LANDMARKS_HPP

// Landmark dictionary learning by alternating minimization of
//
//   J(D, W) = ||X - D W||_F^2
//           + lambda * sum_i sum_j w_ji^2 ||x_i - d_j||^2
//           + mu * ||W||_{2,1}
//
// subject to e^T w_i = 1 and supp(w_i) = kNN(x_i, D).  Dictionary columns are
// updated one at a time in closed form (Gauss-Seidel over j); the weights are
// updated column by column with the L2,1 term replaced by its reweighted
// quadratic surrogate tr(W^T G W), g_jj = 1 / (2 ||w_j*||).

#include "mlcf/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mlcf {

enum class EmbedMethod { Pca, Lle };

inline std::string to_string(EmbedMethod m) { return m == EmbedMethod::Pca ? "pca" : "lle"; }

inline EmbedMethod parse_embed_method(const std::string& s) {
  if (s == "pca") return EmbedMethod::Pca;
  if (s == "lle") return EmbedMethod::Lle;
  throw ConfigError("unknown embedding method '" + s + "' (expected pca or lle)");
}

struct TrainConfig {
  Index m_landmarks = 400;
  Index k_neighbors = 70;
  Index intrinsic_dim = 6;
  double lambda = 1e-3;
  double mu = 1e-3;
  Index max_iters = 50;
  double rel_tol = 1e-6;
  double ridge_eps = 1e-10;
  std::uint64_t rng_seed = 1;
  EmbedMethod embed = EmbedMethod::Pca;
  // Reject an iteration whose objective rises (the kNN supports it re-selects
  // can fit worse than the previous ones) and stop at the last accepted state.
  bool monotone_safeguard = true;

  void validate(Index n_samples) const {
    if (k_neighbors < 1) throw ConfigError("train: k must be >= 1");
    if (k_neighbors > m_landmarks) throw ConfigError("train: k must not exceed M");
    if (m_landmarks > n_samples)
      throw ConfigError("train: M = " + std::to_string(m_landmarks) + " exceeds N = " + std::to_string(n_samples));
    if (!(lambda >= 0.0) || !(mu >= 0.0)) throw ConfigError("train: lambda and mu must be >= 0");
    if (!(ridge_eps > 0.0)) throw ConfigError("train: ridge_eps must be > 0");
    if (max_iters < 0) throw ConfigError("train: max_iters must be >= 0");
    if (!(rel_tol >= 0.0)) throw ConfigError("train: rel_tol must be >= 0");
  }

  void validate_embedding(Index ambient_dim) const {
    if (intrinsic_dim < 1 || intrinsic_dim >= ambient_dim)
      throw ConfigError("train: need 1 <= d < ambient dimension (" + std::to_string(ambient_dim) + ")");
  }
};

/// M x N column-sparse weights: column i holds k (landmark, weight) pairs.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(Index landmarks, Index samples, Index k)
      : landmarks_(landmarks), samples_(samples), k_(k),
        indices_(static_cast<std::size_t>(samples * k), 0), values_(static_cast<std::size_t>(samples * k), 0.0) {}

  Index rows() const { return landmarks_; }
  Index cols() const { return samples_; }
  Index k() const { return k_; }

  std::span<Index> indices(Index i) { return {indices_.data() + i * k_, static_cast<std::size_t>(k_)}; }
  std::span<const Index> indices(Index i) const { return {indices_.data() + i * k_, static_cast<std::size_t>(k_)}; }
  std::span<double> values(Index i) { return {values_.data() + i * k_, static_cast<std::size_t>(k_)}; }
  std::span<const double> values(Index i) const { return {values_.data() + i * k_, static_cast<std::size_t>(k_)}; }

  Vector column(Index i) const {
    Vector w = Vector::Zero(landmarks_);
    for (Index t = 0; t < k_; ++t) w(indices(i)[t]) += values(i)[t];
    return w;
  }

  Matrix to_dense() const {
    Matrix w = Matrix::Zero(landmarks_, samples_);
    for (Index i = 0; i < samples_; ++i)
      for (Index t = 0; t < k_; ++t) w(indices(i)[t], i) += values(i)[t];
    return w;
  }

  Vector row_squared_norms() const {
    Vector s = Vector::Zero(landmarks_);
    for (Index i = 0; i < samples_; ++i)
      for (Index t = 0; t < k_; ++t) s(indices(i)[t]) += values(i)[t] * values(i)[t];
    return s;
  }

  /// D * W without densifying W.
  Matrix left_multiply(const Matrix& d) const {
    Matrix out = Matrix::Zero(d.rows(), samples_);
    for (Index i = 0; i < samples_; ++i)
      for (Index t = 0; t < k_; ++t) out.col(i) += values(i)[t] * d.col(indices(i)[t]);
    return out;
  }

  bool operator==(const WeightMatrix&) const = default;

 private:
  Index landmarks_ = 0;
  Index samples_ = 0;
  Index k_ = 0;
  std::vector<Index> indices_;
  std::vector<double> values_;
};

struct Neighbors {
  std::vector<Index> indices;  // ascending distance, ties by ascending index
  Vector squared_distances;
  Matrix patch;  // ambient x k, columns d_{a_1} .. d_{a_k}
};

/// The k columns of `dictionary` closest to x in Euclidean distance.
inline Neighbors knn_landmarks(const Eigen::Ref<const Vector>& x, const Matrix& dictionary, Index k) {
  if (k < 1 || k > dictionary.cols())
    throw ConfigError("knn: k = " + std::to_string(k) + " out of range for M = " + std::to_string(dictionary.cols()));
  require_shape(x.size() == dictionary.rows(), "knn: query dimension does not match dictionary");
  std::vector<std::pair<double, Index>> order(static_cast<std::size_t>(dictionary.cols()));
  for (Index j = 0; j < dictionary.cols(); ++j) order[static_cast<std::size_t>(j)] = {(dictionary.col(j) - x).squaredNorm(), j};
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  Neighbors nb;
  nb.indices.resize(static_cast<std::size_t>(k));
  nb.squared_distances.resize(k);
  nb.patch.resize(dictionary.rows(), k);
  for (Index t = 0; t < k; ++t) {
    const auto& [dist, j] = order[static_cast<std::size_t>(t)];
    nb.indices[static_cast<std::size_t>(t)] = j;
    nb.squared_distances(t) = dist;
    nb.patch.col(t) = dictionary.col(j);
  }
  return nb;
}

struct ObjectiveTerms {
  double fit = 0.0;
  double locality = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
};

/// Objective with a dense M x N weight matrix.
inline ObjectiveTerms objective_value(const Matrix& x, const Matrix& d, const Matrix& w, double lambda, double mu) {
  require_shape(x.rows() == d.rows() && d.cols() == w.rows() && w.cols() == x.cols(), "objective: shape mismatch");
  ObjectiveTerms t;
  t.fit = (x - d * w).squaredNorm();
  for (Index i = 0; i < w.cols(); ++i)
    for (Index j = 0; j < w.rows(); ++j)
      if (w(j, i) != 0.0) t.locality += w(j, i) * w(j, i) * (x.col(i) - d.col(j)).squaredNorm();
  t.locality *= lambda;
  t.sparsity = mu * w.rowwise().norm().sum();
  t.total = t.fit + t.locality + t.sparsity;
  return t;
}

inline ObjectiveTerms objective_value(const Matrix& x, const Matrix& d, const WeightMatrix& w, double lambda, double mu) {
  require_shape(x.rows() == d.rows() && d.cols() == w.rows() && w.cols() == x.cols(), "objective: shape mismatch");
  ObjectiveTerms t;
  t.fit = (x - w.left_multiply(d)).squaredNorm();
  for (Index i = 0; i < w.cols(); ++i) {
    const auto idx = w.indices(i);
    const auto val = w.values(i);
    for (Index s = 0; s < w.k(); ++s) t.locality += val[s] * val[s] * (x.col(i) - d.col(idx[s])).squaredNorm();
  }
  t.locality *= lambda;
  t.sparsity = mu * w.row_squared_norms().cwiseSqrt().sum();
  t.total = t.fit + t.locality + t.sparsity;
  return t;
}

/// Reweighting diagonal g_jj = 1 / (2 ||w_j*||), with row norms below
/// ridge_eps clamped to ridge_eps.
inline Vector update_g(const Vector& row_norms, double ridge_eps) {
  return row_norms.unaryExpr([ridge_eps](double n) { return 0.5 / std::max(n, ridge_eps); });
}

inline Vector update_g(const WeightMatrix& w, double ridge_eps) {
  return update_g(Vector(w.row_squared_norms().cwiseSqrt()), ridge_eps);
}

inline Vector update_g(const Matrix& w, double ridge_eps) {
  return update_g(Vector(w.rowwise().norm()), ridge_eps);
}

/// Closed-form minimizer over d_j with every other column and W fixed:
///
///   d_j = (E w_j*^T + lambda X (w_j*^2)^T) / ((1 + lambda) w_j* w_j*^T)
///
/// where E = X - sum_{m != j} d_m w_m* is formed as (X - D W) + d_j w_j*.
inline Vector update_dictionary_column(Index j, const Matrix& x, const Matrix& d, const Matrix& w, double lambda,
                                       double ridge_eps) {
  require_shape(x.rows() == d.rows() && d.cols() == w.rows() && w.cols() == x.cols(), "dictionary update: shape mismatch");
  if (j < 0 || j >= d.cols()) throw ConfigError("dictionary update: column index out of range");
  const RowVector wj = w.row(j);
  const double energy = wj.squaredNorm();
  if (energy < ridge_eps) throw DeadLandmark(j);
  const Matrix residual = x - d * w;
  const Vector numerator = residual * wj.transpose() + d.col(j) * energy + lambda * (x * wj.cwiseAbs2().transpose());
  return numerator / ((1.0 + lambda) * energy);
}

/// Diagonal loading used by every k x k weight solve: ridge_eps times the
/// mean diagonal of R (or ridge_eps itself when R vanishes).
inline double loading(const Matrix& system, double ridge_eps) {
  const double scale = system.trace() / static_cast<double>(std::max<Index>(system.rows(), 1));
  return ridge_eps * (scale > 0.0 ? scale : 1.0);
}

/// Sum-to-one constrained weights over a neighbor patch:
///
///   w = A^{-1} e / (e^T A^{-1} e),  A = R + lambda diag(R) + mu diag(g) + eps I
///
/// with R = (x e^T - N)^T (x e^T - N).  The result is renormalized so that
/// its entries sum to exactly one in floating point.
inline Vector solve_local_weights(const Eigen::Ref<const Vector>& x, const Matrix& patch, double lambda, double mu,
                                  const Eigen::Ref<const Vector>& g_hat, double ridge_eps) {
  const Index k = patch.cols();
  require_shape(patch.rows() == x.size(), "local weights: patch dimension mismatch");
  require_shape(g_hat.size() == k, "local weights: g_hat must have k entries");
  if (k == 1) return Vector::Ones(1);
  const Matrix diff = (-patch).colwise() + x;  // x e^T - N
  Matrix a = diff.transpose() * diff;
  const double eps = loading(a, ridge_eps);
  a.diagonal() *= (1.0 + lambda);
  a.diagonal() += mu * g_hat;
  a.diagonal().array() += eps;

  Eigen::LDLT<Matrix> ldlt(a);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (ldlt.info() != Eigen::Success || !(rcond > 1e-18)) {
    std::ostringstream msg;
    msg << "local weights: system numerically singular (rcond " << rcond << ", k " << k << ")";
    throw NumericError(msg.str());
  }
  Vector w = ldlt.solve(Vector::Ones(k));
  const double total = w.sum();
  if (!std::isfinite(total) || std::abs(total) < std::numeric_limits<double>::min() || !w.allFinite())
    throw NumericError("local weights: degenerate normalization");
  w /= total;
  // One more pass absorbs the rounding of the division into the largest entry.
  Index top = 0;
  w.cwiseAbs().maxCoeff(&top);
  w(top) += 1.0 - w.sum();
  return w;
}

inline double approximation_error(const Eigen::Ref<const Vector>& x, const Matrix& d, const Eigen::Ref<const Vector>& w) {
  require_shape(d.rows() == x.size() && d.cols() == w.size(), "approximation_error: shape mismatch");
  return (x - d * w).norm();
}

struct TraceEntry {
  Index iteration = 0;
  ObjectiveTerms terms;
};

using ObjectiveTrace = std::vector<TraceEntry>;

struct TrainResult {
  Matrix dictionary;  // ambient x M
  WeightMatrix weights;
  ObjectiveTrace trace;
  Index iterations = 0;
  bool converged = false;
  Index reseeded = 0;
  /// Set when the safeguard discarded an ascending iterate; holds its terms.
  std::optional<TraceEntry> rejected;
};

namespace detail {

/// M distinct data columns, in seeded random order.
inline std::vector<Index> sample_distinct_columns(const Matrix& x, Index m, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(m));
  for (Index c : order) {
    if (static_cast<Index>(chosen.size()) == m) break;
    const bool duplicate = std::any_of(chosen.begin(), chosen.end(), [&](Index p) { return x.col(p) == x.col(c); });
    if (!duplicate) chosen.push_back(c);
  }
  if (static_cast<Index>(chosen.size()) < m)
    throw ConfigError("train: dataset has fewer than M = " + std::to_string(m) + " distinct columns");
  return chosen;
}

/// One weight pass: kNN support and closed-form weights for every sample.
inline void weight_pass(const Matrix& x, const Matrix& d, const Vector& g, const TrainConfig& cfg, WeightMatrix& w) {
  const Index k = cfg.k_neighbors;
  for (Index i = 0; i < x.cols(); ++i) {
    const auto nb = knn_landmarks(x.col(i), d, k);
    Vector g_hat(k);
    for (Index t = 0; t < k; ++t) g_hat(t) = g(nb.indices[static_cast<std::size_t>(t)]);
    const Vector wi = solve_local_weights(x.col(i), nb.patch, cfg.lambda, cfg.mu, g_hat, cfg.ridge_eps);
    auto idx = w.indices(i);
    auto val = w.values(i);
    for (Index t = 0; t < k; ++t) {
      idx[t] = nb.indices[static_cast<std::size_t>(t)];
      val[t] = wi(t);
    }
  }
}

struct RowEntry {
  Index sample;
  double weight;
};

inline std::vector<std::vector<RowEntry>> rows_of(const WeightMatrix& w) {
  std::vector<std::vector<RowEntry>> rows(static_cast<std::size_t>(w.rows()));
  for (Index i = 0; i < w.cols(); ++i) {
    const auto idx = w.indices(i);
    const auto val = w.values(i);
    for (Index t = 0; t < w.k(); ++t) rows[static_cast<std::size_t>(idx[t])].push_back({i, val[t]});
  }
  return rows;
}

/// Gauss-Seidel sweep over the dictionary columns.  `residual` holds X - D W
/// on entry and is kept consistent with D on exit.  Columns whose weight row
/// has vanished are re-seeded from the worst-fit data column.
inline Index dictionary_sweep(const Matrix& x, Matrix& d, const WeightMatrix& w, const TrainConfig& cfg,
                              Matrix& residual) {
  const auto rows = rows_of(w);
  Index reseeded = 0;
  std::vector<Index> taken;
  Vector numerator(x.rows());
  for (Index j = 0; j < d.cols(); ++j) {
    const auto& row = rows[static_cast<std::size_t>(j)];
    double energy = 0.0;
    for (const auto& e : row) energy += e.weight * e.weight;

    Vector updated;
    if (energy < cfg.ridge_eps) {
      // Dead landmark: move it onto the sample with the largest residual that
      // is not already a landmark.
      const Vector res_norms = residual.colwise().squaredNorm().transpose();
      std::vector<Index> order(static_cast<std::size_t>(x.cols()));
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return res_norms(a) > res_norms(b); });
      Index pick = -1;
      for (Index c : order) {
        if (std::find(taken.begin(), taken.end(), c) != taken.end()) continue;
        bool clash = false;
        for (Index m = 0; m < d.cols() && !clash; ++m) clash = (m != j) && d.col(m) == x.col(c);
        if (!clash) {
          pick = c;
          break;
        }
      }
      if (pick < 0) continue;  // every sample already is a landmark; leave d_j in place
      taken.push_back(pick);
      updated = x.col(pick);
      ++reseeded;
    } else {
      numerator.setZero();
      for (const auto& e : row)
        numerator += e.weight * residual.col(e.sample) + cfg.lambda * e.weight * e.weight * x.col(e.sample);
      numerator += energy * d.col(j);
      updated = numerator / ((1.0 + cfg.lambda) * energy);
    }
    const Vector delta = updated - d.col(j);
    for (const auto& e : row) residual.col(e.sample) -= e.weight * delta;
    d.col(j) = updated;
  }
  return reseeded;
}

}  // namespace detail

/// Progress callback, invoked once per recorded trace entry.
using TrainObserver = std::function<void(const TraceEntry&)>;

/// Alternating minimization from M distinct random data columns.  The trace
/// starts with the objective after the initial weight pass (iteration 0).
inline TrainResult train_landmarks(const Matrix& x, const TrainConfig& cfg, const TrainObserver& observer = {}) {
  if (x.cols() == 0 || x.rows() == 0) throw ConfigError("train: empty dataset");
  if (!x.allFinite()) throw NumericError("train: dataset has non-finite entries");
  cfg.validate(x.cols());

  TrainResult out;
  const auto init = detail::sample_distinct_columns(x, cfg.m_landmarks, cfg.rng_seed);
  out.dictionary.resize(x.rows(), cfg.m_landmarks);
  for (Index j = 0; j < cfg.m_landmarks; ++j) out.dictionary.col(j) = x.col(init[static_cast<std::size_t>(j)]);

  out.weights = WeightMatrix(cfg.m_landmarks, x.cols(), cfg.k_neighbors);
  // Initial pass as if every weight row had unit norm: g = 1/2.
  detail::weight_pass(x, out.dictionary, Vector::Constant(cfg.m_landmarks, 0.5), cfg, out.weights);

  out.trace.push_back({0, objective_value(x, out.dictionary, out.weights, cfg.lambda, cfg.mu)});
  if (observer) observer(out.trace.back());

  for (Index iter = 1; iter <= cfg.max_iters; ++iter) {
    const Vector g = update_g(out.weights, cfg.ridge_eps);
    Matrix previous_dictionary = out.dictionary;
    WeightMatrix previous_weights = out.weights;
    Matrix residual = x - out.weights.left_multiply(out.dictionary);
    const Index reseeded = detail::dictionary_sweep(x, out.dictionary, out.weights, cfg, residual);
    detail::weight_pass(x, out.dictionary, g, cfg, out.weights);

    const double prev = out.trace.back().terms.total;
    const TraceEntry candidate{iter, objective_value(x, out.dictionary, out.weights, cfg.lambda, cfg.mu)};
    if (cfg.monotone_safeguard && candidate.terms.total > prev) {
      out.dictionary = std::move(previous_dictionary);
      out.weights = std::move(previous_weights);
      out.rejected = candidate;
      out.converged = true;
      break;
    }
    out.reseeded += reseeded;
    out.trace.push_back(candidate);
    if (observer) observer(candidate);
    out.iterations = iter;

    const double cur = candidate.terms.total;
    const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
    if ((prev - cur) / scale < cfg.rel_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

struct Embedding {
  Matrix coords;  // d x N
  Vector mean;    // ambient (PCA only)
  Matrix basis;   // ambient x d (PCA only)
  Index rank = 0;
  bool rank_deficient = false;
};

namespace detail {

inline void fix_sign(Eigen::Ref<Vector> v) {
  const double tol = 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff());
  for (Index r = 0; r < v.size(); ++r)
    if (std::abs(v(r)) > tol) {
      if (v(r) < 0.0) v = -v;
      return;
    }
}

inline Embedding embed_pca(const Matrix& x, Index d) {
  Embedding e;
  e.mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - e.mean;
  const Matrix cov = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca: eigendecomposition failed");
  const Index ambient = x.rows();
  const double top = std::max(eig.eigenvalues()(ambient - 1), 0.0);
  const double tol = top * 1e-12 * static_cast<double>(ambient);
  e.basis = Matrix::Zero(ambient, d);
  for (Index c = 0; c < d; ++c) {
    const Index src = ambient - 1 - c;
    if (top > 0.0 && eig.eigenvalues()(src) > tol) {
      e.basis.col(c) = eig.eigenvectors().col(src);
      fix_sign(e.basis.col(c));
      ++e.rank;
    }
  }
  e.rank_deficient = e.rank < d;
  e.coords = e.basis.transpose() * centered;
  return e;
}

/// Classic locally linear embedding over the data's own kNN graph.
inline Embedding embed_lle(const Matrix& x, Index d, Index k, double ridge_eps) {
  const Index n = x.cols();
  if (k >= n) throw ConfigError("lle: k must be smaller than N");
  Matrix lap = Matrix::Identity(n, n);
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j)
      if (j != i) order.emplace_back((x.col(j) - x.col(i)).squaredNorm(), j);
    std::partial_sort(order.begin(), order.begin() + k, order.end());
    Matrix patch(x.rows(), k);
    for (Index t = 0; t < k; ++t) patch.col(t) = x.col(order[static_cast<std::size_t>(t)].second);
    // Standard LLE conditioning: load by 1e-3 of the local Gram trace.
    const Matrix diff = (-patch).colwise() + x.col(i);
    Matrix gram = diff.transpose() * diff;
    gram.diagonal().array() += std::max(1e-3 * gram.trace() / static_cast<double>(k), ridge_eps);
    Vector wi = gram.ldlt().solve(Vector::Ones(k));
    wi /= wi.sum();
    for (Index t = 0; t < k; ++t) w(i, order[static_cast<std::size_t>(t)].second) = wi(t);
  }
  lap -= w;
  const Matrix cost = lap.transpose() * lap;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cost);
  if (eig.info() != Eigen::Success) throw NumericError("lle: eigendecomposition failed");
  Embedding e;
  e.coords.resize(d, n);
  for (Index c = 0; c < d; ++c) {
    Vector v = eig.eigenvectors().col(c + 1);  // skip the constant bottom vector
    fix_sign(v);
    e.coords.row(c) = v.transpose() * std::sqrt(static_cast<double>(n));
  }
  e.rank = d;
  return e;
}

}  // namespace detail

/// Low-dimensional coordinates Y (d x N) of the training set.
inline Embedding embed_training_set(const Matrix& x, Index d, EmbedMethod method, Index k_neighbors = 10,
                                    double ridge_eps = 1e-10) {
  if (d < 1 || d >= x.rows()) throw ConfigError("embed: need 1 <= d < ambient dimension");
  if (x.cols() < 2) throw ConfigError("embed: need at least two samples");
  return method == EmbedMethod::Pca ? detail::embed_pca(x, d) : detail::embed_lle(x, d, k_neighbors, ridge_eps);
}

/// Least-squares companion dictionary Y W^T (W W^T + eps I)^{-1}.
inline Matrix fit_low_dim_dictionary(const Matrix& y, const Matrix& w, double ridge_eps) {
  require_shape(y.cols() == w.cols(), "fit_low_dim_dictionary: Y and W disagree on N");
  Matrix gram = w * w.transpose();
  gram.diagonal().array() += ridge_eps;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw NumericError("fit_low_dim_dictionary: Gram factorization failed");
  const Matrix dl = ldlt.solve(w * y.transpose()).transpose();
  if (!dl.allFinite()) throw NumericError("fit_low_dim_dictionary: singular Gram");
  return dl;
}

inline Matrix fit_low_dim_dictionary(const Matrix& y, const WeightMatrix& w, double ridge_eps) {
  return fit_low_dim_dictionary(y, w.to_dense(), ridge_eps);
}

struct ReconstructionFit {
  Matrix dl_rc;  // d x M
  Matrix dh_rc;  // ambient x M
  TrainResult train;
};

/// Learns the landmarks on the embedding Y and lifts them back to the
/// ambient space with the mirrored least-squares fit.
inline ReconstructionFit fit_reconstruction_dictionaries(const Matrix& x, const Matrix& y, const TrainConfig& cfg,
                                                         const TrainObserver& observer = {}) {
  require_shape(x.cols() == y.cols(), "fit_reconstruction_dictionaries: X and Y disagree on N");
  ReconstructionFit fit;
  fit.train = train_landmarks(y, cfg, observer);
  fit.dl_rc = fit.train.dictionary;
  fit.dh_rc = fit_low_dim_dictionary(x, fit.train.weights, cfg.ridge_eps);
  return fit;
}

}  // namespace mlcf

#endif  // MLCF_LANDMARKS_HPP
