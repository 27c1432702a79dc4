#ifndef MLCF_QUANTIZER_HPP
#define MLCF_QUANTIZER_HPP

// Uniform scalar quantization of embeddings and the packed feedback frame:
//   u8 bits-per-scalar, u16 LE d, u16 LE N_t, then codes packed MSB-first in
//   column-major scalar order, zero-padded to a whole byte.

#include "mlcf/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace mlcf::quant {

using CodeMatrix = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kMinBits = 1;
inline constexpr int kMaxBits = 16;

inline void check_bits(int bits) {
  if (bits < kMinBits || bits > kMaxBits)
    throw ConfigError("quantizer: bits must be in [1, 16], got " + std::to_string(bits));
}

struct QuantizerModel {
  int bits = 8;
  Vector lo;
  Vector hi;

  std::uint32_t levels() const { return std::uint32_t{1} << bits; }
  double step(Index dim) const { return (hi(dim) - lo(dim)) / static_cast<double>(levels()); }
  Index dims() const { return lo.size(); }
};

/// Per-dimension [min, max] of the training embeddings, widened by 0.5% of
/// the span on each side.
inline QuantizerModel fit_quantizer(const Matrix& y_train, int bits) {
  check_bits(bits);
  if (y_train.cols() < 2) throw ConfigError("quantizer: need at least two training embeddings");
  if (!y_train.allFinite()) throw NumericError("quantizer: non-finite training embeddings");
  QuantizerModel q;
  q.bits = bits;
  q.lo = y_train.rowwise().minCoeff();
  q.hi = y_train.rowwise().maxCoeff();
  for (Index r = 0; r < q.lo.size(); ++r) {
    const double span = q.hi(r) - q.lo(r);
    q.lo(r) -= 0.005 * span;
    q.hi(r) += 0.005 * span;
    if (!(q.hi(r) > q.lo(r))) q.hi(r) = q.lo(r) + std::max(1e-12, 1e-12 * std::abs(q.lo(r)));
  }
  return q;
}

inline CodeMatrix quantize(const Matrix& y, const QuantizerModel& q) {
  require_shape(y.rows() == q.dims(), "quantize: dimension mismatch");
  const double top = static_cast<double>(q.levels() - 1);
  CodeMatrix codes(y.rows(), y.cols());
  for (Index c = 0; c < y.cols(); ++c)
    for (Index r = 0; r < y.rows(); ++r) {
      const double cell = std::floor((y(r, c) - q.lo(r)) / q.step(r));
      codes(r, c) = static_cast<std::uint32_t>(std::clamp(std::isnan(cell) ? 0.0 : cell, 0.0, top));
    }
  return codes;
}

/// Cell centres lo + (code + 1/2) step.
inline Matrix dequantize(const CodeMatrix& codes, const QuantizerModel& q) {
  require_shape(codes.rows() == q.dims(), "dequantize: dimension mismatch");
  Matrix y(codes.rows(), codes.cols());
  for (Index c = 0; c < codes.cols(); ++c)
    for (Index r = 0; r < codes.rows(); ++r) y(r, c) = q.lo(r) + (static_cast<double>(codes(r, c)) + 0.5) * q.step(r);
  return y;
}

inline std::vector<std::uint8_t> pack_codes(const CodeMatrix& codes, int bits) {
  check_bits(bits);
  const std::size_t total_bits = static_cast<std::size_t>(codes.size()) * static_cast<std::size_t>(bits);
  std::vector<std::uint8_t> out((total_bits + 7) / 8, 0);
  std::size_t pos = 0;
  for (Index s = 0; s < codes.size(); ++s) {  // column-major storage order
    const std::uint32_t v = codes.data()[s];
    if (v >> bits) throw ConfigError("pack_codes: code exceeds bit width");
    for (int b = bits - 1; b >= 0; --b, ++pos)
      if ((v >> b) & 1u) out[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
  }
  return out;
}

inline CodeMatrix unpack_codes(const std::vector<std::uint8_t>& bytes, int bits, Index rows, Index cols) {
  check_bits(bits);
  const std::size_t total_bits = static_cast<std::size_t>(rows * cols) * static_cast<std::size_t>(bits);
  if (bytes.size() < (total_bits + 7) / 8) throw FormatError("unpack_codes: stream too short");
  CodeMatrix codes(rows, cols);
  std::size_t pos = 0;
  for (Index s = 0; s < codes.size(); ++s) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b, ++pos) v = (v << 1) | ((bytes[pos / 8] >> (7 - pos % 8)) & 1u);
    codes.data()[s] = v;
  }
  return codes;
}

inline std::vector<std::uint8_t> encode_frame(const CodeMatrix& codes, int bits) {
  check_bits(bits);
  if (codes.rows() > 0xFFFF || codes.cols() > 0xFFFF) throw ConfigError("feedback frame: d or N_t exceeds 65535");
  std::vector<std::uint8_t> frame;
  frame.push_back(static_cast<std::uint8_t>(bits));
  const auto d = static_cast<std::uint16_t>(codes.rows());
  const auto nt = static_cast<std::uint16_t>(codes.cols());
  frame.push_back(static_cast<std::uint8_t>(d & 0xFF));
  frame.push_back(static_cast<std::uint8_t>(d >> 8));
  frame.push_back(static_cast<std::uint8_t>(nt & 0xFF));
  frame.push_back(static_cast<std::uint8_t>(nt >> 8));
  const auto payload = pack_codes(codes, bits);
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

struct Frame {
  int bits = 0;
  CodeMatrix codes;
};

inline Frame decode_frame(const std::vector<std::uint8_t>& frame) {
  if (frame.size() < 5) throw FormatError("feedback frame: truncated header");
  Frame f;
  f.bits = frame[0];
  check_bits(f.bits);
  const Index d = frame[1] | (frame[2] << 8);
  const Index nt = frame[3] | (frame[4] << 8);
  const std::vector<std::uint8_t> payload(frame.begin() + 5, frame.end());
  f.codes = unpack_codes(payload, f.bits, d, nt);
  return f;
}

}  // namespace mlcf::quant

#endif  // MLCF_QUANTIZER_HPP
