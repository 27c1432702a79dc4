#include "mlcf/channel.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace mlcf;
using namespace mlcf::channel;

namespace {

ChannelConfig small_config() {
  ChannelConfig c;
  c.n_tx = 4;
  c.n_freq = 6;
  c.n_clusters = 3;
  c.rays_per_cluster = 4;
  c.rng_seed = 11;
  return c;
}

double power(const std::vector<Ray>& rays) {
  double p = 0.0;
  for (const auto& r : rays) p += std::norm(r.gain);
  return p;
}

}  // namespace

TEST(Steering, BroadsideIsAllOnes) {
  const auto a = steering_vector(0.0, 4, 0.5);
  for (Index n = 0; n < 4; ++n) EXPECT_EQ(a(n), Complex(1.0, 0.0));
}

TEST(Steering, EndfireAlternatesSign) {
  const auto a = steering_vector(std::numbers::pi / 2, 2, 0.5);
  EXPECT_EQ(a(0), Complex(1.0, 0.0));
  EXPECT_NEAR(a(1).real(), -1.0, 1e-15);
  EXPECT_NEAR(a(1).imag(), 0.0, 1e-15);
}

TEST(Steering, MatchesDirectEvaluation) {
  const auto a = steering_vector(std::numbers::pi / 6, 3, 0.5);
  for (Index n = 0; n < 3; ++n) {
    const auto expect = std::polar(1.0, std::numbers::pi * static_cast<double>(n) / 2.0);
    EXPECT_NEAR(std::abs(a(n) - expect), 0.0, 1e-14);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(-std::numbers::pi / 2, std::numbers::pi / 2);
  for (int t = 0; t < 50; ++t) {
    const double theta = th(rng);
    const auto ref = oracle::steering(theta, 16, 0.5);
    const auto got = steering_vector(theta, 16, 0.5);
    for (Index n = 0; n < 16; ++n) EXPECT_NEAR(std::abs(got(n) - ref[static_cast<std::size_t>(n)]), 0.0, 1e-12);
  }
}

TEST(ClusterParams, SingleRayHasUnitGain) {
  auto c = small_config();
  c.n_clusters = 1;
  c.rays_per_cluster = 1;
  const auto rays = draw_cluster_params(c);
  ASSERT_EQ(rays.size(), 1u);
  EXPECT_NEAR(std::abs(rays[0].gain), 1.0, 1e-15);
}

TEST(ClusterParams, ZeroSpeedHasNoDoppler) {
  auto c = small_config();
  c.ue_speed_mps = 0.0;
  for (const auto& r : draw_cluster_params(c)) EXPECT_EQ(r.doppler_rad_s, 0.0);
}

TEST(ClusterParams, PowerNormalizedAndInRange) {
  ChannelConfig c;
  c.n_clusters = 23;
  c.rays_per_cluster = 20;
  c.rng_seed = 7;
  const auto rays = draw_cluster_params(c);
  EXPECT_EQ(rays.size(), 460u);
  EXPECT_NEAR(power(rays), 1.0, 1e-12);
  const double fd = c.ue_speed_mps / c.wavelength_m() * 2.0 * std::numbers::pi;
  for (const auto& r : rays) {
    EXPECT_GE(r.aod_rad, -std::numbers::pi / 2);
    EXPECT_LE(r.aod_rad, std::numbers::pi / 2);
    EXPECT_GE(r.delay_s, 0.0);
    EXPECT_LE(std::abs(r.doppler_rad_s), fd * (1 + 1e-12));
  }
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto cs = small_config();
    cs.rng_seed = seed;
    EXPECT_NEAR(power(draw_cluster_params(cs)), 1.0, 1e-10);
  }
}

TEST(ClusterParams, DeterministicPerSeed) {
  const auto a = draw_cluster_params(small_config());
  const auto b = draw_cluster_params(small_config());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gain, b[i].gain);
    EXPECT_EQ(a[i].delay_s, b[i].delay_s);
    EXPECT_EQ(a[i].aod_rad, b[i].aod_rad);
  }
}

TEST(ChannelVector, SingleStaticRayIsSteeringVector) {
  const auto c = small_config();
  const std::vector<Ray> one{{Complex(1.0, 0.0), 0.0, 0.0, 0.0}};
  const auto h = generate_channel_vector(one, c.frequency(0), 0.3, c);
  for (Index n = 0; n < c.n_tx; ++n) EXPECT_NEAR(std::abs(h(n) - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(ChannelVector, DopplerOnlyRotatesPhase) {
  const auto c = small_config();
  const std::vector<Ray> one{{Complex(1.0, 0.0), 0.0, 250.0, 0.4}};
  const double t = 0.0123;
  const auto h = generate_channel_vector(one, c.frequency(2), t, c);
  const auto a = oracle::steering(0.4, c.n_tx, 0.5);
  for (Index n = 0; n < c.n_tx; ++n) {
    EXPECT_NEAR(std::abs(h(n)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(h(n) - a[static_cast<std::size_t>(n)] * std::polar(1.0, 250.0 * t)), 0.0, 1e-12);
  }
}

TEST(ChannelVector, TwoRaysMatchTermByTermSum) {
  const auto c = small_config();
  const std::vector<Ray> rays{{Complex(0.6, -0.2), 120e-9, 80.0, 0.3}, {Complex(-0.1, 0.7), 410e-9, -35.0, -1.1}};
  const double f = c.frequency(4), t = 0.002;
  const auto h = generate_channel_vector(rays, f, t, c);
  for (Index n = 0; n < c.n_tx; ++n) {
    std::complex<double> ref = 0.0;
    for (const auto& r : rays)
      ref += r.gain * std::polar(1.0, -2.0 * std::numbers::pi * f * r.delay_s) * std::polar(1.0, r.doppler_rad_s * t) *
             oracle::steering(r.aod_rad, c.n_tx, 0.5)[static_cast<std::size_t>(n)];
    EXPECT_NEAR(std::abs(h(n) - ref), 0.0, 1e-12);
  }
}

TEST(ChannelVector, LinearInRaySet) {
  const auto c = small_config();
  auto a = draw_cluster_params(c);
  auto c2 = c;
  c2.rng_seed = 99;
  const auto b = draw_cluster_params(c2);
  std::vector<Ray> both = a;
  both.insert(both.end(), b.begin(), b.end());
  const auto ha = assemble_wideband(a, c, 0.01).entries;
  const auto hb = assemble_wideband(b, c, 0.01).entries;
  const auto hab = assemble_wideband(both, c, 0.01).entries;
  EXPECT_LT((hab - ha - hb).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Wideband, SingleCarrierIsPerCarrierVector) {
  auto c = small_config();
  c.n_freq = 1;
  const auto rays = draw_cluster_params(c);
  const auto h = assemble_wideband(rays, c, 0.004);
  ASSERT_EQ(h.entries.rows(), 1);
  EXPECT_EQ(h.entries.row(0), generate_channel_vector(rays, c.frequency(0), 0.004, c));
}

TEST(Wideband, ZeroDelaysAreFlatInFrequency) {
  const auto c = small_config();
  auto rays = draw_cluster_params(c);
  for (auto& r : rays) r.delay_s = 0.0;
  const auto h = assemble_wideband(rays, c, 0.02).entries;
  for (Index i = 1; i < h.rows(); ++i) EXPECT_LT((h.row(i) - h.row(0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Wideband, RowsMatchPerCarrierOracle) {
  const auto c = small_config();
  const auto rays = draw_cluster_params(c);
  const auto h = assemble_wideband(rays, c, 0.017);
  ASSERT_EQ(h.entries.rows(), c.n_freq);
  ASSERT_EQ(h.entries.cols(), c.n_tx);
  for (Index i = 0; i < c.n_freq; ++i) {
    const double f = c.carrier_hz + (static_cast<double>(i) - static_cast<double>(c.n_freq) / 2.0) *
                                        c.subcarrier_spacing_hz * static_cast<double>(c.subcarriers_per_rb);
    EXPECT_LT((h.entries.row(i) - generate_channel_vector(rays, f, 0.017, c)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Wideband, FrequencyGridIncreasing) {
  const auto c = ChannelConfig{};
  for (Index i = 1; i < c.n_freq; ++i) EXPECT_GT(c.frequency(i), c.frequency(i - 1));
}

TEST(Stack, Layout) {
  EXPECT_TRUE(real_stack(CMatrix::Zero(3, 2)).isZero(0.0));
  const Matrix r = real_stack(CMatrix::Constant(3, 2, Complex(0.0, 1.0)));
  ASSERT_EQ(r.rows(), 6);
  EXPECT_TRUE(r.topRows(3).isZero(0.0));
  EXPECT_TRUE((r.bottomRows(3).array() == 1.0).all());
}

TEST(Stack, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const CMatrix h = CMatrix::Random(1 + t % 7, 1 + t % 5) * 1e3;
    EXPECT_EQ(complex_unstack(real_stack(h)), h);
  }
}

TEST(Stack, RejectsOddRows) { EXPECT_THROW(complex_unstack(Matrix::Zero(5, 2)), ShapeError); }

TEST(Dataset, ColumnCountAndLayout) {
  ChannelConfig c;
  c.n_tx = 32;
  c.n_freq = 4;
  EXPECT_EQ(build_dataset(c, 1).size(), 32);
  EXPECT_EQ(4000 / c.n_tx, 125);

  const auto s = small_config();
  const auto ds = build_dataset(s, 3);
  EXPECT_EQ(ds.size(), s.n_tx * 3);
  EXPECT_EQ(ds.slot_count, 3);
  const auto rays = draw_cluster_params(s);
  const Matrix slot2 = real_stack(assemble_wideband(rays, s, 2 * s.slot_period_s).entries);
  for (Index j = 0; j < s.n_tx; ++j) EXPECT_EQ(ds.columns.col(2 * s.n_tx + j), slot2.col(j));
}

TEST(Dataset, DeterministicPerSeed) {
  EXPECT_EQ(build_dataset(small_config(), 4).columns, build_dataset(small_config(), 4).columns);
}

TEST(Noise, InfiniteSnrIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix x = Matrix::Random(6, 5);
  EXPECT_EQ(add_estimation_noise(x, std::numeric_limits<double>::infinity(), rng), x);
}

TEST(Noise, ZeroDbMatchesSignalPower) {
  std::mt19937_64 rng(2);
  const Matrix x = Matrix::Random(100, 1000);
  const Matrix y = add_estimation_noise(x, 0.0, rng);
  const double ratio = (y - x).squaredNorm() / x.squaredNorm();
  EXPECT_NEAR(ratio, 1.0, 0.02);
}

TEST(Noise, DeterministicAndRejectsNan) {
  const Matrix x = Matrix::Random(8, 8);
  std::mt19937_64 a(4), b(4);
  EXPECT_EQ(add_estimation_noise(x, 10.0, a), add_estimation_noise(x, 10.0, b));
  EXPECT_THROW(add_estimation_noise(x, std::nan(""), a), ConfigError);
}
