#include "mlcf/bundle.hpp"
#include "mlcf/matrix_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace mlcf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mlcf_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(MatrixFile, HeaderLayout) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const auto b = io::encode(m);
  ASSERT_EQ(b.size(), 25u + 6 * 8);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "MLCF");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5] | b[6] | b[7], 0);
  EXPECT_EQ(b[8], 1);
  EXPECT_EQ(b[9], 2);
  EXPECT_EQ(b[17], 3);
  double second;
  std::memcpy(&second, b.data() + 25 + 8, 8);
  EXPECT_EQ(second, 2.0);  // row-major payload
  EXPECT_EQ(io::encode(CMatrix(CMatrix::Zero(1, 1)))[8], 2);
}

TEST(MatrixFile, RoundTripBitExact) {
  std::mt19937_64 rng(1);
  const fs::path dir = scratch("rt");
  for (int t = 0; t < 1000; ++t) {
    const Index r = 1 + t % 9, c = 1 + (t / 9) % 7;
    Matrix m = oracle::random_matrix(r, c, rng, std::pow(10.0, t % 20 - 10));
    if (t % 50 == 0) m(0, 0) = -0.0;
    if (t % 2) {
      io::save(dir / "m.mlcf", m);
      const Matrix back = io::load_real(dir / "m.mlcf");
      ASSERT_EQ(std::memcmp(back.data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size())), 0);
    } else {
      const CMatrix z = m.cast<Complex>() + Complex(0, 1) * m.reverse().cast<Complex>();
      ASSERT_EQ(io::decode_complex(io::encode(z)), z);
    }
  }
  fs::remove_all(dir);
}

TEST(MatrixFile, RejectsMalformedInput) {
  auto b = io::encode(Matrix(Matrix::Ones(2, 2)));
  auto bad = b;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_real(bad), FormatError);
  bad = b;
  bad[4] = 2;
  EXPECT_THROW(io::decode_real(bad), FormatError);
  bad = b;
  bad.pop_back();
  EXPECT_THROW(io::decode_real(bad), FormatError);
  EXPECT_THROW(io::decode_complex(b), FormatError);
  EXPECT_THROW(io::load_real("/nonexistent/file.mlcf"), Error);
}

TEST(Bundle, SaveLoadAndHash) {
  std::mt19937_64 rng(2);
  CodecBundle b;
  b.config.m_landmarks = 5;
  b.config.k_neighbors = 2;
  b.config.intrinsic_dim = 2;
  b.config.lambda = 0.05;
  b.config.rng_seed = 99;
  b.dh_dr = oracle::random_matrix(6, 5, rng);
  b.dl_dr = oracle::random_matrix(2, 5, rng);
  b.dl_rc = oracle::random_matrix(2, 5, rng);
  b.dh_rc = oracle::random_matrix(6, 5, rng);
  const fs::path dir = scratch("bundle");
  save_bundle(dir, b);
  for (const char* f : {"dh_dr.mlcf", "dl_dr.mlcf", "dl_rc.mlcf", "dh_rc.mlcf", "manifest.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto back = load_bundle(dir);
  EXPECT_EQ(back.dh_rc, b.dh_rc);
  EXPECT_EQ(back.config.lambda, 0.05);
  EXPECT_EQ(back.config.rng_seed, 99u);
  EXPECT_EQ(bundle_hash(back), bundle_hash(b));
  b.dl_rc(0, 0) += 1e-12;
  EXPECT_NE(bundle_hash(back), bundle_hash(b));
  fs::remove(dir / "dl_rc.mlcf");
  EXPECT_THROW(load_bundle(dir), Error);
  fs::remove_all(dir);
}

TEST(KeyValues, CommentsAndErrors) {
  std::istringstream ok("# header\n a = 1 \nb=two # trailing\n\n");
  const auto kv = parse_key_values(ok);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two");
  std::istringstream bad("no equals sign\n");
  EXPECT_THROW(parse_key_values(bad), ConfigError);
}

TEST(TraceCsv, Header) {
  ObjectiveTrace t{{0, {4.0, 1.0, 1.0, 6.0}}};
  const auto csv = trace_csv(t, 3);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,fit,locality,sparsity,total,total_per_sample");
  EXPECT_NE(csv.find("0,4,1,1,6,2"), std::string::npos);
}
