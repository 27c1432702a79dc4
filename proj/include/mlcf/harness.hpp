#ifndef MLCF_HARNESS_HPP
#define MLCF_HARNESS_HPP

// Experiment configuration, training/evaluation orchestration and result
// export.  Configuration files are plain "key = value" text (see
// README.md for the key list); list-valued keys take comma-separated values.

#include "mlcf/bundle.hpp"
#include "mlcf/channel.hpp"
#include "mlcf/codec.hpp"
#include "mlcf/landmarks.hpp"
#include "mlcf/matrix_io.hpp"
#include "mlcf/metrics.hpp"
#include "mlcf/quantizer.hpp"
#include "mlcf/training.hpp"
#include "mlcf/types.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mlcf::harness {

namespace fs = std::filesystem;

inline constexpr std::uint64_t kTestSeedOffset = 1'000'003;
inline constexpr int kResultsSchema = 1;
inline constexpr const char* kOutputRootEnv = "MLCF_OUTPUT_ROOT";

struct ExperimentConfig {
  channel::ChannelConfig channel;
  TrainConfig train;
  Index n_samples = 2000;
  Index test_size = 200;
  double test_window_s = 0.0;  // 0: the training window
  std::vector<Ratio> gammas{{1, 8}};
  std::vector<std::optional<int>> bits{std::nullopt};  // nullopt: unquantized
  std::vector<double> snr_db{std::numeric_limits<double>::infinity()};
  std::optional<Index> eval_k;
  std::optional<double> eval_lambda;
  Index users = 4;
  double se_snr_db = 10.0;
  std::vector<Index> sweep_k;
  std::vector<Index> sweep_n;
  std::vector<Index> sweep_m;
  Index workers = 1;
  std::string output_dir = "mlcf_out";

  ExperimentConfig() {
    channel.n_tx = 8;
    train.m_landmarks = 100;
    train.k_neighbors = 30;
    train.max_iters = 30;
  }

  Index slot_count() const { return n_samples / channel.n_tx; }

  double test_window() const {
    return test_window_s > 0.0 ? test_window_s : static_cast<double>(slot_count()) * channel.slot_period_s;
  }

  Index dim_for(const Ratio& gamma) const {
    const Index num = gamma.num * 2 * channel.n_freq;
    if (gamma.den <= 0 || num % gamma.den != 0)
      throw ConfigError("gamma " + std::to_string(gamma.num) + "/" + std::to_string(gamma.den) +
                        " does not map to an integer d with N_f = " + std::to_string(channel.n_freq));
    return num / gamma.den;
  }

  void validate() const {
    channel.validate();
    if (n_samples < 1 || n_samples % channel.n_tx != 0)
      throw ConfigError("n_samples must be a positive multiple of n_tx (N = N_t * T_s)");
    if (test_size < 1) throw ConfigError("test_size must be >= 1");
    if (!(test_window_s >= 0.0)) throw ConfigError("test_window_s must be >= 0");
    if (gammas.empty() || bits.empty() || snr_db.empty()) throw ConfigError("gamma, bits and snr_db lists must be nonempty");
    for (const auto& g : gammas) {
      const Index d = dim_for(g);
      if (d < 1 || d >= 2 * channel.n_freq) throw ConfigError("gamma must map to 1 <= d < 2 N_f");
    }
    for (const auto& b : bits)
      if (b) quant::check_bits(*b);
    for (double s : snr_db)
      if (std::isnan(s)) throw ConfigError("snr_db must not be NaN");
    train.validate(n_samples);
    if (users < 1 || users > channel.n_tx) throw ConfigError("users must be in [1, n_tx]");
    if (workers < 1) throw ConfigError("workers must be >= 1");
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("empty list '" + s + "'");
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "': not a number: '" + v + "'");
  }
}

inline Index to_index(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<Index>(n);
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "': not an integer: '" + v + "'");
  }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size() || v.starts_with('-')) throw std::invalid_argument(v);
    return n;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "': not an unsigned integer: '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': not a boolean: '" + v + "'");
}

inline Ratio to_ratio(const std::string& key, const std::string& v) {
  const auto slash = v.find('/');
  if (slash == std::string::npos) throw ConfigError("'" + key + "': expected a fraction like 1/8, got '" + v + "'");
  const Index num = to_index(key, v.substr(0, slash));
  const Index den = to_index(key, v.substr(slash + 1));
  if (num < 1 || den < 1) throw ConfigError("'" + key + "': fraction terms must be positive");
  const Index g = std::gcd(num, den);
  return {num / g, den / g};
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

}  // namespace detail

/// Key names accepted by apply_setting, in documentation order.
inline const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "n_tx", "n_freq", "carrier_hz", "subcarrier_spacing_hz", "subcarriers_per_rb", "n_clusters",
      "rays_per_cluster", "delay_spread_s", "ue_speed_mps", "element_spacing", "angular_spread_deg",
      "slot_period_s", "channel_seed", "m_landmarks", "k_neighbors", "lambda", "mu", "max_iters", "rel_tol",
      "ridge_eps", "seed", "embed", "safeguard", "n_samples", "test_size", "test_window_s", "gamma", "bits", "snr_db", "eval_k",
      "eval_lambda", "users", "se_snr_db", "sweep_k", "sweep_n", "sweep_m", "workers", "output_dir"};
  return keys;
}

inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  auto& ch = c.channel;
  auto& tr = c.train;
  if (key == "n_tx") ch.n_tx = to_index(key, v);
  else if (key == "n_freq") ch.n_freq = to_index(key, v);
  else if (key == "carrier_hz") ch.carrier_hz = to_double(key, v);
  else if (key == "subcarrier_spacing_hz") ch.subcarrier_spacing_hz = to_double(key, v);
  else if (key == "subcarriers_per_rb") ch.subcarriers_per_rb = to_index(key, v);
  else if (key == "n_clusters") ch.n_clusters = to_index(key, v);
  else if (key == "rays_per_cluster") ch.rays_per_cluster = to_index(key, v);
  else if (key == "delay_spread_s") ch.delay_spread_s = to_double(key, v);
  else if (key == "ue_speed_mps") ch.ue_speed_mps = to_double(key, v);
  else if (key == "element_spacing") ch.element_spacing_wavelengths = to_double(key, v);
  else if (key == "angular_spread_deg") ch.angular_spread_rad = to_double(key, v) * std::numbers::pi / 180.0;
  else if (key == "slot_period_s") ch.slot_period_s = to_double(key, v);
  else if (key == "channel_seed") ch.rng_seed = to_u64(key, v);
  else if (key == "m_landmarks" || key == "M") tr.m_landmarks = to_index(key, v);
  else if (key == "k_neighbors" || key == "k") tr.k_neighbors = to_index(key, v);
  else if (key == "lambda") tr.lambda = to_double(key, v);
  else if (key == "mu") tr.mu = to_double(key, v);
  else if (key == "max_iters") tr.max_iters = to_index(key, v);
  else if (key == "rel_tol") tr.rel_tol = to_double(key, v);
  else if (key == "ridge_eps") tr.ridge_eps = to_double(key, v);
  else if (key == "seed") tr.rng_seed = to_u64(key, v);
  else if (key == "embed") tr.embed = parse_embed_method(v);
  else if (key == "safeguard") tr.monotone_safeguard = to_bool(key, v);
  else if (key == "n_samples" || key == "N") c.n_samples = to_index(key, v);
  else if (key == "test_size") c.test_size = to_index(key, v);
  else if (key == "test_window_s") c.test_window_s = to_double(key, v);
  else if (key == "gamma") {
    c.gammas.clear();
    for (const auto& s : split_list(v)) c.gammas.push_back(to_ratio(key, s));
  } else if (key == "bits") {
    c.bits.clear();
    for (const auto& s : split_list(v))
      c.bits.push_back(s == "none" ? std::nullopt : std::optional<int>(static_cast<int>(to_index(key, s))));
  } else if (key == "snr_db") {
    c.snr_db.clear();
    for (const auto& s : split_list(v)) c.snr_db.push_back(to_double(key, s));
  } else if (key == "eval_k") c.eval_k = v == "none" ? std::nullopt : std::optional<Index>(to_index(key, v));
  else if (key == "eval_lambda") c.eval_lambda = v == "none" ? std::nullopt : std::optional<double>(to_double(key, v));
  else if (key == "users") c.users = to_index(key, v);
  else if (key == "se_snr_db") c.se_snr_db = to_double(key, v);
  else if (key == "sweep_k" || key == "sweep_n" || key == "sweep_m") {
    std::vector<Index> xs;
    for (const auto& s : split_list(v)) xs.push_back(to_index(key, s));
    (key == "sweep_k" ? c.sweep_k : key == "sweep_n" ? c.sweep_n : c.sweep_m) = std::move(xs);
  } else if (key == "workers") c.workers = to_index(key, v);
  else if (key == "output_dir") c.output_dir = v;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

inline ExperimentConfig load_config(const fs::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(base, k, v);
  return base;
}

/// Every setting as canonical "key = value" text, sorted by key.
inline std::map<std::string, std::string> canonical_settings(const ExperimentConfig& c) {
  using detail::format_number;
  const auto& ch = c.channel;
  const auto& tr = c.train;
  std::map<std::string, std::string> kv;
  kv["n_tx"] = std::to_string(ch.n_tx);
  kv["n_freq"] = std::to_string(ch.n_freq);
  kv["carrier_hz"] = format_number(ch.carrier_hz);
  kv["subcarrier_spacing_hz"] = format_number(ch.subcarrier_spacing_hz);
  kv["subcarriers_per_rb"] = std::to_string(ch.subcarriers_per_rb);
  kv["n_clusters"] = std::to_string(ch.n_clusters);
  kv["rays_per_cluster"] = std::to_string(ch.rays_per_cluster);
  kv["delay_spread_s"] = format_number(ch.delay_spread_s);
  kv["ue_speed_mps"] = format_number(ch.ue_speed_mps);
  kv["element_spacing"] = format_number(ch.element_spacing_wavelengths);
  kv["angular_spread_deg"] = format_number(ch.angular_spread_rad * 180.0 / std::numbers::pi);
  kv["slot_period_s"] = format_number(ch.slot_period_s);
  kv["channel_seed"] = std::to_string(ch.rng_seed);
  kv["m_landmarks"] = std::to_string(tr.m_landmarks);
  kv["k_neighbors"] = std::to_string(tr.k_neighbors);
  kv["lambda"] = format_number(tr.lambda);
  kv["mu"] = format_number(tr.mu);
  kv["max_iters"] = std::to_string(tr.max_iters);
  kv["rel_tol"] = format_number(tr.rel_tol);
  kv["ridge_eps"] = format_number(tr.ridge_eps);
  kv["seed"] = std::to_string(tr.rng_seed);
  kv["embed"] = to_string(tr.embed);
  kv["safeguard"] = tr.monotone_safeguard ? "1" : "0";
  kv["n_samples"] = std::to_string(c.n_samples);
  kv["test_size"] = std::to_string(c.test_size);
  kv["test_window_s"] = format_number(c.test_window_s);
  kv["gamma"] = detail::join(c.gammas, [](const Ratio& r) { return std::to_string(r.num) + "/" + std::to_string(r.den); });
  kv["bits"] = detail::join(c.bits, [](const std::optional<int>& b) { return b ? std::to_string(*b) : std::string("none"); });
  kv["snr_db"] = detail::join(c.snr_db, [](double s) { return format_number(s); });
  kv["eval_k"] = c.eval_k ? std::to_string(*c.eval_k) : "none";
  kv["eval_lambda"] = c.eval_lambda ? format_number(*c.eval_lambda) : "none";
  kv["users"] = std::to_string(c.users);
  kv["se_snr_db"] = format_number(c.se_snr_db);
  return kv;
}

inline std::string config_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : canonical_settings(c)) out += k + " = " + v + "\n";
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Hash of the result-determining settings (sweep axes, workers and output
/// location excluded); independent of the order fields were set in.
inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(config_text(c))); }

inline std::string gamma_tag(const Ratio& g) { return "gamma_" + std::to_string(g.num) + "_" + std::to_string(g.den); }

inline fs::path resolve_output(const std::string& dir) {
  const fs::path p(dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / p;
  return p;
}

inline channel::Dataset training_set(const ExperimentConfig& c) { return channel::build_dataset(c.channel, c.slot_count()); }

/// Held-out slots: same scenario rays, slot instants drawn uniformly over the
/// test window with the test seed.
inline std::vector<Matrix> test_set(const ExperimentConfig& c) {
  const auto rays = channel::draw_cluster_params(c.channel);
  std::mt19937_64 rng(c.train.rng_seed + kTestSeedOffset);
  const auto times = channel::random_slot_times(c.test_size, c.test_window(), rng);
  const auto ds = channel::build_dataset(rays, c.channel, times);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(c.test_size));
  for (Index s = 0; s < ds.slot_count; ++s) out.push_back(ds.slot(s));
  return out;
}

struct EvalOptions {
  CodecOptions codec;
  std::optional<quant::QuantizerModel> quantizer;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t noise_seed = 0;
  Index users = 4;
  double se_snr_db = 10.0;
  bool spectral = true;
};

struct EvalReport {
  double nmse_db = metrics::kExactNmseDb;
  double cosine = 0.0;
  std::optional<double> se_bps_hz;
  std::optional<double> se_perfect_bps_hz;
  Index sample_count = 0;
  Index feedback_bytes = 0;  // per CSI matrix, when quantized
};

/// compress -> [quantize -> frame -> dequantize] -> reconstruct -> metrics.
/// The ground truth is the clean CSI; estimation noise only affects what the
/// UE compresses.
inline EvalReport evaluate(const CodecBundle& bundle, std::span<const Matrix> truth, const EvalOptions& opts,
                           std::vector<Matrix>* reconstructions = nullptr) {
  std::mt19937_64 noise_rng(opts.noise_seed);
  std::vector<Matrix> estimates;
  estimates.reserve(truth.size());
  EvalReport rep;
  for (const auto& h : truth) {
    const Matrix observed = channel::add_estimation_noise(h, opts.snr_db, noise_rng);
    Matrix y = compress(observed, bundle, opts.codec).output;
    if (opts.quantizer) {
      const auto frame = quant::encode_frame(quant::quantize(y, *opts.quantizer), opts.quantizer->bits);
      rep.feedback_bytes = static_cast<Index>(frame.size());
      y = quant::dequantize(quant::decode_frame(frame).codes, *opts.quantizer);
    }
    estimates.push_back(reconstruct(y, bundle, opts.codec).output);
  }
  rep.sample_count = static_cast<Index>(truth.size());
  rep.nmse_db = metrics::nmse_db(truth, estimates);

  std::vector<CMatrix> ct, ce;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    ct.push_back(channel::complex_unstack(truth[s]));
    ce.push_back(channel::complex_unstack(estimates[s]));
  }
  rep.cosine = metrics::cosine_similarity(ct, ce).rho;

  const Index users = opts.users;
  const Index draws = static_cast<Index>(ct.size()) / users;
  if (opts.spectral && draws > 0) {
    // Users of draw t are samples t, t + draws, ...: spread over the window.
    double se = 0.0, se_perfect = 0.0;
    std::vector<CMatrix> ut(static_cast<std::size_t>(users)), ue(static_cast<std::size_t>(users));
    for (Index t = 0; t < draws; ++t) {
      for (Index u = 0; u < users; ++u) {
        ut[static_cast<std::size_t>(u)] = ct[static_cast<std::size_t>(t + u * draws)];
        ue[static_cast<std::size_t>(u)] = ce[static_cast<std::size_t>(t + u * draws)];
      }
      se += metrics::spectral_efficiency(ut, ue, opts.se_snr_db);
      se_perfect += metrics::spectral_efficiency(ut, ut, opts.se_snr_db);
    }
    rep.se_bps_hz = se / static_cast<double>(draws);
    rep.se_perfect_bps_hz = se_perfect / static_cast<double>(draws);
  }
  if (reconstructions) *reconstructions = std::move(estimates);
  return rep;
}

inline quant::QuantizerModel quantizer_for(const CodecBundle& b, const Matrix& embedding_range, int bits) {
  require_shape(embedding_range.rows() == b.embed_dim() && embedding_range.cols() == 2,
                "quantizer range must be d x 2 (min, max)");
  return quant::fit_quantizer(embedding_range, bits);
}

/// Per-dimension (min, max) of the training embedding, d x 2.
inline Matrix embedding_range(const Matrix& y) {
  Matrix r(y.rows(), 2);
  r.col(0) = y.rowwise().minCoeff();
  r.col(1) = y.rowwise().maxCoeff();
  return r;
}

struct ResultRecord {
  std::string config_hash;
  Ratio gamma;
  Index k = 0;
  Index m = 0;
  Index n = 0;
  std::optional<int> bits;
  double snr_db = 0.0;
  EvalReport report;
  double lambda = 0.0;
  double mu = 0.0;
  Index d = 0;
  Index n_tx = 0;
  Index n_freq = 0;
  double se_snr_db = 0.0;
  std::string bundle_hash;
  std::string timestamp;
};

inline std::string csv_header() {
  return "schema,config_hash,gamma,k,M,N,bits,snr_db,nmse_db,cosine,se,se_perfect,lambda,mu,d,n_tx,n_freq,se_snr_db,"
         "bundle_hash,timestamp";
}

inline std::string csv_row(const ResultRecord& r) {
  using detail::format_number;
  std::ostringstream os;
  os << kResultsSchema << ',' << r.config_hash << ',' << r.gamma.num << '/' << r.gamma.den << ',' << r.k << ',' << r.m
     << ',' << r.n << ',' << (r.bits ? std::to_string(*r.bits) : "none") << ',' << format_number(r.snr_db) << ','
     << format_number(r.report.nmse_db) << ',' << format_number(r.report.cosine) << ','
     << (r.report.se_bps_hz ? format_number(*r.report.se_bps_hz) : "") << ','
     << (r.report.se_perfect_bps_hz ? format_number(*r.report.se_perfect_bps_hz) : "") << ','
     << format_number(r.lambda) << ',' << format_number(r.mu) << ',' << r.d << ',' << r.n_tx << ',' << r.n_freq << ','
     << format_number(r.se_snr_db) << ',' << r.bundle_hash << ',' << r.timestamp;
  return os.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct TrainSummary {
  fs::path root;
  std::map<std::string, std::string> bundle_hashes;  // gamma tag -> hash
  ObjectiveTrace compression_trace;
};

/// Trains one bundle per gamma under root/<gamma tag>/.  The compression
/// landmarks do not depend on d and are learned once.  On failure the
/// partially written root is removed.
inline TrainSummary run_train(const ExperimentConfig& c, const fs::path& root, const TrainObserver& observer = {}) {
  c.validate();
  const bool existed = fs::exists(root);
  try {
    fs::create_directories(root);
    const auto ds = training_set(c);
    TrainSummary summary;
    summary.root = root;
    const TrainResult compression = train_landmarks(ds.columns, c.train, observer);
    summary.compression_trace = compression.trace;
    io::write_text_atomic(root / "trace_compression.csv", trace_csv(compression.trace, ds.size()));
    io::write_text_atomic(root / "config.txt", config_text(c));
    for (const auto& g : c.gammas) {
      TrainConfig cfg = c.train;
      cfg.intrinsic_dim = c.dim_for(g);
      const auto emb = embed_training_set(ds.columns, cfg.intrinsic_dim, cfg.embed, cfg.k_neighbors, cfg.ridge_eps);
      auto rc = fit_reconstruction_dictionaries(ds.columns, emb.coords, cfg, observer);
      CodecBundle b;
      b.config = cfg;
      b.dh_dr = compression.dictionary;
      b.dl_dr = fit_low_dim_dictionary(emb.coords, compression.weights, cfg.ridge_eps);
      b.dl_rc = std::move(rc.dl_rc);
      b.dh_rc = std::move(rc.dh_rc);
      const fs::path dir = root / gamma_tag(g);
      save_bundle(dir, b);
      io::save(dir / "embedding_range.mlcf", embedding_range(emb.coords));
      io::write_text_atomic(dir / "trace_reconstruction.csv", trace_csv(rc.train.trace, ds.size()));
      summary.bundle_hashes[gamma_tag(g)] = hex64(bundle_hash(b));
    }
    return summary;
  } catch (...) {
    std::error_code ec;
    if (!existed) fs::remove_all(root, ec);
    throw;
  }
}

/// One record per (gamma, bits, snr) using the bundles under root.
inline std::vector<ResultRecord> run_eval(const ExperimentConfig& c, const fs::path& root) {
  c.validate();
  const auto truth = test_set(c);
  const std::string hash = config_hash(c);
  std::vector<ResultRecord> records;
  for (const auto& g : c.gammas) {
    const fs::path dir = root / gamma_tag(g);
    const CodecBundle b = load_bundle(dir);
    const Index d = c.dim_for(g);
    if (b.ambient_dim() != 2 * c.channel.n_freq || b.embed_dim() != d)
      throw ConfigError("bundle in " + dir.string() + " does not match the configured N_f / gamma");
    const Matrix range = io::load_real(dir / "embedding_range.mlcf");
    const std::string bhash = hex64(bundle_hash(b));
    for (std::size_t si = 0; si < c.snr_db.size(); ++si) {
      for (const auto& bits : c.bits) {
        EvalOptions opts;
        opts.codec.k = c.eval_k;
        opts.codec.lambda = c.eval_lambda;
        opts.snr_db = c.snr_db[si];
        opts.noise_seed = c.train.rng_seed + kTestSeedOffset + 7919 * (si + 1);
        opts.users = c.users;
        opts.se_snr_db = c.se_snr_db;
        if (bits) opts.quantizer = quantizer_for(b, range, *bits);
        ResultRecord r;
        r.report = evaluate(b, truth, opts);
        r.config_hash = hash;
        r.gamma = g;
        r.k = opts.codec.k.value_or(b.config.k_neighbors);
        r.m = b.landmarks();
        r.n = c.n_samples;
        r.bits = bits;
        r.snr_db = c.snr_db[si];
        r.lambda = opts.codec.lambda.value_or(b.config.lambda);
        r.mu = b.config.mu;
        r.d = d;
        r.n_tx = c.channel.n_tx;
        r.n_freq = c.channel.n_freq;
        r.se_snr_db = c.se_snr_db;
        r.bundle_hash = bhash;
        r.timestamp = utc_timestamp();
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

inline std::string records_csv(const std::vector<ResultRecord>& records) {
  std::string out = csv_header() + "\n";
  for (const auto& r : records) out += csv_row(r) + "\n";
  return out;
}

/// The training points of a sweep: the cross product of sweep_n, sweep_m and
/// sweep_k (each defaulting to the base value).  Unless test_window_s is set,
/// every point is tested over the longest training window of the sweep so
/// that points differing in N share one test set.
inline std::vector<ExperimentConfig> sweep_points(const ExperimentConfig& base) {
  const std::vector<Index> ns = base.sweep_n.empty() ? std::vector<Index>{base.n_samples} : base.sweep_n;
  const std::vector<Index> ms = base.sweep_m.empty() ? std::vector<Index>{base.train.m_landmarks} : base.sweep_m;
  const std::vector<Index> ks = base.sweep_k.empty() ? std::vector<Index>{base.train.k_neighbors} : base.sweep_k;
  double window = base.test_window_s;
  if (window == 0.0) {
    const Index n_max = *std::max_element(ns.begin(), ns.end());
    window = static_cast<double>(n_max / base.channel.n_tx) * base.channel.slot_period_s;
  }
  std::vector<ExperimentConfig> points;
  for (Index n : ns)
    for (Index m : ms)
      for (Index k : ks) {
        ExperimentConfig p = base;
        p.sweep_n.clear();
        p.sweep_m.clear();
        p.sweep_k.clear();
        p.n_samples = n;
        p.test_window_s = window;
        p.train.m_landmarks = m;
        p.train.k_neighbors = k;
        points.push_back(std::move(p));
      }
  return points;
}

struct SweepSummary {
  std::vector<ResultRecord> records;  // only points computed in this call
  Index points_total = 0;
  Index points_run = 0;
  Index points_skipped = 0;
  fs::path results_csv;
};

inline std::string plot_script(const fs::path& csv) {
  std::ostringstream os;
  os << "# gnuplot script: NMSE against each swept axis\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set ylabel 'NMSE (dB)'\n"
     << "set grid\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output 'nmse_vs_N.png'\n"
     << "set xlabel 'N'\n"
     << "plot '" << csv.filename().string() << "' using 6:9 with linespoints title 'NMSE'\n"
     << "set output 'nmse_vs_k.png'\n"
     << "set xlabel 'k'\n"
     << "plot '" << csv.filename().string() << "' using 4:9 with linespoints title 'NMSE'\n";
  return os.str();
}

/// Runs every sweep point (train + eval) not already completed under
/// root/points/, with up to `workers` points in flight, then rewrites
/// root/results.csv from all completed points.
inline SweepSummary run_sweep(const ExperimentConfig& base, const fs::path& root,
                              const std::function<void(const std::string&)>& log = {}) {
  base.validate();
  const auto points = sweep_points(base);
  for (const auto& p : points) p.validate();
  fs::create_directories(root / "points");
  fs::create_directories(root / "bundles");

  SweepSummary summary;
  summary.points_total = static_cast<Index>(points.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (fs::exists(root / "points" / (config_hash(points[i]) + ".csv")))
      ++summary.points_skipped;
    else
      todo.push_back(i);
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const auto& p = points[todo[t]];
      const std::string hash = config_hash(p);
      try {
        const fs::path bundle_root = root / "bundles" / hash;
        run_train(p, bundle_root);
        auto recs = run_eval(p, bundle_root);
        io::write_text_atomic(root / "points" / (hash + ".csv"), records_csv(recs));
        std::lock_guard lock(mu);
        if (log) log("point " + hash + " done (N=" + std::to_string(p.n_samples) + ", M=" +
                     std::to_string(p.train.m_landmarks) + ", k=" + std::to_string(p.train.k_neighbors) + ")");
        summary.records.insert(summary.records.end(), recs.begin(), recs.end());
        ++summary.points_run;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::min<Index>(base.workers, std::max<Index>(1, static_cast<Index>(todo.size()))));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  // Aggregate in sweep order so the table is independent of scheduling.
  std::string table = csv_header() + "\n";
  for (const auto& p : points) {
    std::ifstream in(root / "points" / (config_hash(p) + ".csv"));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line))
      if (!line.empty()) table += line + "\n";
  }
  summary.results_csv = root / "results.csv";
  io::write_text_atomic(summary.results_csv, table);
  io::write_text_atomic(root / "plot.gp", plot_script(summary.results_csv));
  return summary;
}

}  // namespace mlcf::harness

#endif  // MLCF_HARNESS_HPP
