#include "mlcf/metrics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mlcf;
using namespace mlcf::metrics;

namespace {

CMatrix random_complex(Index r, Index c, std::mt19937_64& rng) {
  return oracle::random_matrix(r, c, rng).cast<Complex>() + Complex(0, 1) * oracle::random_matrix(r, c, rng).cast<Complex>();
}

}  // namespace

TEST(Nmse, AnalyticCases) {
  std::mt19937_64 rng(1);
  const Matrix h = oracle::random_matrix(8, 4, rng);
  EXPECT_EQ(nmse_db(h, h), kExactNmseDb);
  EXPECT_NEAR(nmse_db(h, Matrix::Zero(8, 4)), 0.0, 1e-12);
  Matrix e = oracle::random_matrix(8, 4, rng);
  e *= 0.1 * h.norm() / e.norm();
  EXPECT_NEAR(nmse_db(h, h + e), -20.0, 1e-9);
}

TEST(Nmse, DependsOnlyOnRelativeError) {
  std::mt19937_64 rng(2);
  const Matrix h = oracle::random_matrix(6, 3, rng);
  const Matrix e = oracle::random_matrix(6, 3, rng, 0.2);
  EXPECT_NEAR(nmse_db(h, h + e), nmse_db(7.5 * h, 7.5 * (h + e)), 1e-10);
}

TEST(Nmse, AveragesRatiosAndSkipsZeroSamples) {
  std::vector<Matrix> t{Matrix::Ones(2, 1), Matrix::Zero(2, 1), 2 * Matrix::Ones(2, 1)};
  std::vector<Matrix> e{Matrix::Zero(2, 1), Matrix::Ones(2, 1), 2 * Matrix::Ones(2, 1)};
  const auto r = nmse(t, e);
  EXPECT_EQ(r.used, 2);
  EXPECT_EQ(r.skipped, 1);
  EXPECT_NEAR(r.db, 10 * std::log10(0.5), 1e-12);
  std::vector<Matrix> z{Matrix::Zero(2, 1)};
  EXPECT_THROW(nmse(z, z), NumericError);
}

TEST(Cosine, ScaleAndPhaseInvariant) {
  std::mt19937_64 rng(3);
  const CMatrix h = random_complex(5, 4, rng);
  CMatrix est = h;
  for (Index r = 0; r < 5; ++r) est.row(r) *= std::polar(0.3 + r, 0.7 * r);
  std::vector<CMatrix> a{h}, b{est};
  EXPECT_NEAR(cosine_similarity(a, b).rho, 1.0, 1e-12);
  std::vector<CMatrix> c{Complex(-2.0, 1.0) * h};
  EXPECT_NEAR(cosine_similarity(a, c).rho, 1.0, 1e-12);
}

TEST(Cosine, OrthogonalRowsGiveZero) {
  CMatrix h(2, 2), e(2, 2);
  h << 1, 0, 0, Complex(0, 1);
  e << 0, 1, 1, 0;
  std::vector<CMatrix> a{h}, b{e};
  EXPECT_NEAR(cosine_similarity(a, b).rho, 0.0, 1e-15);
}

TEST(Cosine, MatchesRowOracle) {
  std::mt19937_64 rng(4);
  std::vector<CMatrix> a, b;
  for (int s = 0; s < 5; ++s) {
    a.push_back(random_complex(6, 3, rng));
    b.push_back(random_complex(6, 3, rng));
  }
  double ref = 0.0;
  for (int s = 0; s < 5; ++s) {
    double rows = 0.0;
    for (Index n = 0; n < 6; ++n) {
      Complex inner = 0.0;
      double na = 0.0, nb = 0.0;
      for (Index c = 0; c < 3; ++c) {
        inner += b[s](n, c) * std::conj(a[s](n, c));
        na += std::norm(a[s](n, c));
        nb += std::norm(b[s](n, c));
      }
      rows += std::abs(inner) / std::sqrt(na * nb);
    }
    ref += rows / 6;
  }
  const auto r = cosine_similarity(a, b);
  EXPECT_NEAR(r.rho, ref / 5, 1e-12);
  EXPECT_GE(r.rho, 0.0);
  EXPECT_LE(r.rho, 1.0 + 1e-12);
}

TEST(Cosine, SkipsZeroRows) {
  CMatrix h = CMatrix::Ones(3, 2), e = CMatrix::Ones(3, 2);
  e.row(1).setZero();
  std::vector<CMatrix> a{h}, b{e};
  const auto r = cosine_similarity(a, b);
  EXPECT_EQ(r.skipped, 1);
  EXPECT_NEAR(r.rho, 1.0, 1e-15);
}

TEST(SpectralEfficiency, SingleUserUnitChannel) {
  CMatrix h(1, 4);
  h << 0.5, Complex(0, 0.5), -0.5, Complex(0, -0.5);
  std::vector<CMatrix> u{h};
  EXPECT_NEAR(spectral_efficiency(u, u, 0.0), 1.0, 1e-12);
}

TEST(SpectralEfficiency, PerfectCsiRemovesInterference) {
  std::mt19937_64 rng(5);
  std::vector<CMatrix> users;
  for (int u = 0; u < 3; ++u) users.push_back(random_complex(2, 6, rng));
  // Interference-free: each user's rate is log2(1 + p |g_uu|^2) on every row.
  double ref = 0.0;
  for (Index n = 0; n < 2; ++n) {
    CMatrix h(3, 6);
    for (int u = 0; u < 3; ++u) h.row(u) = users[u].row(n);
    const CMatrix pinv = h.completeOrthogonalDecomposition().pseudoInverse();
    for (int u = 0; u < 3; ++u) {
      const Complex g = (h.row(u) * pinv.col(u).normalized())(0);
      ref += std::log2(1.0 + 10.0 / 3.0 * std::norm(g));
    }
  }
  EXPECT_NEAR(spectral_efficiency(users, users, 10.0), ref / 2, 1e-9);
}

TEST(SpectralEfficiency, PerfectCsiUpperBoundsPerturbed) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    std::vector<CMatrix> users, est;
    for (int u = 0; u < 4; ++u) {
      users.push_back(random_complex(3, 8, rng));
      est.push_back(users.back() + 0.2 * random_complex(3, 8, rng));
    }
    for (double snr : {0.0, 10.0, 20.0})
      EXPECT_GE(spectral_efficiency(users, users, snr) + 1e-9, spectral_efficiency(users, est, snr));
  }
}

TEST(SpectralEfficiency, VanishesAtLowSnrAndRejectsRankDeficiency) {
  std::mt19937_64 rng(7);
  std::vector<CMatrix> users{random_complex(2, 4, rng), random_complex(2, 4, rng)};
  EXPECT_LT(spectral_efficiency(users, users, -200.0), 1e-15);
  std::vector<CMatrix> same{users[0], users[0]};
  EXPECT_THROW(spectral_efficiency(users, same, 10.0), NumericError);
  std::vector<CMatrix> many(5, CMatrix::Ones(2, 4));
  EXPECT_THROW(spectral_efficiency(many, many, 0.0), ConfigError);
}
