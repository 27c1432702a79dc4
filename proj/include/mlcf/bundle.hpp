#ifndef MLCF_BUNDLE_HPP
#define MLCF_BUNDLE_HPP

#include "mlcf/landmarks.hpp"
#include "mlcf/matrix_io.hpp"
#include "mlcf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

namespace mlcf {

/// Compression pair (dh_dr, dl_dr) for the UE and reconstruction pair
/// (dl_rc, dh_rc) for the BS, learned together.
struct CodecBundle {
  Matrix dh_dr;  // ambient x M
  Matrix dl_dr;  // d x M
  Matrix dl_rc;  // d x M
  Matrix dh_rc;  // ambient x M
  TrainConfig config;

  Index ambient_dim() const { return dh_dr.rows(); }
  Index embed_dim() const { return dl_dr.rows(); }
  Index landmarks() const { return dh_dr.cols(); }

  void validate() const {
    const Index m = dh_dr.cols();
    if (dl_dr.cols() != m || dl_rc.cols() != m || dh_rc.cols() != m)
      throw ShapeError("bundle: dictionaries disagree on M");
    if (dh_rc.rows() != dh_dr.rows() || dl_rc.rows() != dl_dr.rows())
      throw ShapeError("bundle: dictionaries disagree on ambient/embedding dimension");
    if (!dh_dr.allFinite() || !dl_dr.allFinite() || !dl_rc.allFinite() || !dh_rc.allFinite())
      throw NumericError("bundle: non-finite dictionary entries");
  }
};

inline constexpr int kBundleVersion = 1;

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline std::string bundle_manifest(const CodecBundle& b) {
  std::ostringstream os;
  os << "version = " << kBundleVersion << '\n'
     << "M = " << b.landmarks() << '\n'
     << "k = " << b.config.k_neighbors << '\n'
     << "d = " << b.embed_dim() << '\n'
     << "ambient = " << b.ambient_dim() << '\n'
     << "lambda = " << detail::format_double(b.config.lambda) << '\n'
     << "mu = " << detail::format_double(b.config.mu) << '\n'
     << "seed = " << b.config.rng_seed << '\n'
     << "ridge_eps = " << detail::format_double(b.config.ridge_eps) << '\n'
     << "max_iters = " << b.config.max_iters << '\n'
     << "rel_tol = " << detail::format_double(b.config.rel_tol) << '\n'
     << "embed = " << to_string(b.config.embed) << '\n'
     << "safeguard = " << (b.config.monotone_safeguard ? 1 : 0) << '\n';
  return os.str();
}

/// Parses "key = value" lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline void save_bundle(const std::filesystem::path& dir, const CodecBundle& b) {
  b.validate();
  std::filesystem::create_directories(dir);
  io::save(dir / "dh_dr.mlcf", b.dh_dr);
  io::save(dir / "dl_dr.mlcf", b.dl_dr);
  io::save(dir / "dl_rc.mlcf", b.dl_rc);
  io::save(dir / "dh_rc.mlcf", b.dh_rc);
  io::write_text_atomic(dir / "manifest.txt", bundle_manifest(b));
}

inline CodecBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw FormatError("bundle: missing manifest in " + dir.string());
  const auto kv = parse_key_values(in);
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("bundle: manifest lacks '" + key + "'");
    return it->second;
  };
  if (std::stoi(get("version")) != kBundleVersion) throw FormatError("bundle: unsupported version");
  CodecBundle b;
  b.dh_dr = io::load_real(dir / "dh_dr.mlcf");
  b.dl_dr = io::load_real(dir / "dl_dr.mlcf");
  b.dl_rc = io::load_real(dir / "dl_rc.mlcf");
  b.dh_rc = io::load_real(dir / "dh_rc.mlcf");
  try {
    b.config.m_landmarks = std::stoll(get("M"));
    b.config.k_neighbors = std::stoll(get("k"));
    b.config.intrinsic_dim = std::stoll(get("d"));
    b.config.lambda = std::stod(get("lambda"));
    b.config.mu = std::stod(get("mu"));
    b.config.rng_seed = std::stoull(get("seed"));
    b.config.ridge_eps = std::stod(get("ridge_eps"));
    b.config.max_iters = std::stoll(get("max_iters"));
    b.config.rel_tol = std::stod(get("rel_tol"));
    b.config.embed = parse_embed_method(get("embed"));
    if (kv.contains("safeguard")) b.config.monotone_safeguard = get("safeguard") != "0";
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("bundle: malformed manifest value: ") + e.what());
  }
  b.validate();
  if (b.landmarks() != b.config.m_landmarks || b.embed_dim() != b.config.intrinsic_dim)
    throw FormatError("bundle: manifest disagrees with dictionary shapes");
  return b;
}

/// FNV-1a over the four dictionary files and the manifest.
inline std::uint64_t bundle_hash(const CodecBundle& b) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::vector<std::uint8_t>& bytes) {
    for (auto c : bytes) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  mix(io::encode(b.dh_dr));
  mix(io::encode(b.dl_dr));
  mix(io::encode(b.dl_rc));
  mix(io::encode(b.dh_rc));
  const auto manifest = bundle_manifest(b);
  mix(std::vector<std::uint8_t>(manifest.begin(), manifest.end()));
  return h;
}

inline std::string trace_csv(const ObjectiveTrace& trace, Index n_samples) {
  std::ostringstream os;
  os << "iter,fit,locality,sparsity,total,total_per_sample\n" << std::setprecision(17);
  for (const auto& e : trace)
    os << e.iteration << ',' << e.terms.fit << ',' << e.terms.locality << ',' << e.terms.sparsity << ','
       << e.terms.total << ',' << e.terms.total / static_cast<double>(std::max<Index>(n_samples, 1)) << '\n';
  return os.str();
}

}  // namespace mlcf

#endif  // MLCF_BUNDLE_HPP
