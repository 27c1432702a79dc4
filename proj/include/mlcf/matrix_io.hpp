#ifndef MLCF_MATRIX_IO_HPP
#define MLCF_MATRIX_IO_HPP

// MLCF matrix file:
//   bytes 0-3   magic "MLCF"
//   u32 LE      version (1)
//   u8          dtype (1 = f64 real, 2 = complex f64 interleaved re,im)
//   u64 LE      rows
//   u64 LE      cols
//   payload     row-major, little-endian f64

#include "mlcf/types.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace mlcf::io {

inline constexpr char kMagic[4] = {'M', 'L', 'C', 'F'};
inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { Real = 1, Complex = 2 };

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(p[b]) << (8 * b);
  return value;
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

inline constexpr std::size_t kHeaderSize = 4 + 4 + 1 + 8 + 8;

inline void put_header(std::vector<std::uint8_t>& out, DType dtype, Index rows, Index cols) {
  out.insert(out.end(), kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(rows));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(cols));
}

struct Header {
  DType dtype;
  std::uint64_t rows;
  std::uint64_t cols;
};

inline Header parse_header(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("MLCF matrix: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("MLCF matrix: bad magic");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kVersion) throw FormatError("MLCF matrix: unsupported version " + std::to_string(version));
  const auto code = bytes[8];
  if (code != 1 && code != 2) throw FormatError("MLCF matrix: unknown dtype " + std::to_string(code));
  Header h{static_cast<DType>(code), get_le<std::uint64_t>(bytes.data() + 9), get_le<std::uint64_t>(bytes.data() + 17)};
  const std::uint64_t scalars = h.rows * h.cols * (h.dtype == DType::Complex ? 2 : 1);
  if (h.cols != 0 && h.rows > (std::uint64_t{1} << 40) / h.cols)
    throw FormatError("MLCF matrix: implausible shape");
  if (bytes.size() != kHeaderSize + 8 * scalars) throw FormatError("MLCF matrix: payload size mismatch");
  return h;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const Matrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(detail::kHeaderSize + 8 * static_cast<std::size_t>(m.size()));
  detail::put_header(out, DType::Real, m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) detail::put_f64(out, m(r, c));
  return out;
}

inline std::vector<std::uint8_t> encode(const CMatrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(detail::kHeaderSize + 16 * static_cast<std::size_t>(m.size()));
  detail::put_header(out, DType::Complex, m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      detail::put_f64(out, m(r, c).real());
      detail::put_f64(out, m(r, c).imag());
    }
  return out;
}

inline DType peek_dtype(const std::vector<std::uint8_t>& bytes) { return detail::parse_header(bytes).dtype; }

inline Matrix decode_real(const std::vector<std::uint8_t>& bytes) {
  const auto h = detail::parse_header(bytes);
  if (h.dtype != DType::Real) throw FormatError("MLCF matrix: expected real dtype");
  Matrix m(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  const std::uint8_t* p = bytes.data() + detail::kHeaderSize;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c, p += 8) m(r, c) = detail::get_f64(p);
  return m;
}

inline CMatrix decode_complex(const std::vector<std::uint8_t>& bytes) {
  const auto h = detail::parse_header(bytes);
  if (h.dtype != DType::Complex) throw FormatError("MLCF matrix: expected complex dtype");
  CMatrix m(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  const std::uint8_t* p = bytes.data() + detail::kHeaderSize;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c, p += 16) m(r, c) = Complex(detail::get_f64(p), detail::get_f64(p + 8));
  return m;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary and renames it into place.
inline void write_bytes_atomic(const std::filesystem::path& path, const void* data, std::size_t size) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed (disk full?): " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, text.data(), text.size());
}

inline void save(const std::filesystem::path& path, const Matrix& m) {
  const auto bytes = encode(m);
  write_bytes_atomic(path, bytes.data(), bytes.size());
}

inline void save(const std::filesystem::path& path, const CMatrix& m) {
  const auto bytes = encode(m);
  write_bytes_atomic(path, bytes.data(), bytes.size());
}

inline Matrix load_real(const std::filesystem::path& path) { return decode_real(read_bytes(path)); }
inline CMatrix load_complex(const std::filesystem::path& path) { return decode_complex(read_bytes(path)); }

}  // namespace mlcf::io

#endif  // MLCF_MATRIX_IO_HPP
