#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "uglms/jacobian.hpp"

using namespace uglms;

TEST(JacobianTable, MismatchOnlyRowIsBitVector) {
  const JacobianTable t(4, -1);
  EXPECT_EQ(t.n_params(), 4);
  const auto r = t.row(5);
  EXPECT_EQ(std::vector<double>(r.begin(), r.end()), (std::vector<double>{0, 1, 0, 1}));
}

TEST(JacobianTable, NormalizedPowersAtFullScale) {
  const JacobianTable t(4, 2);
  EXPECT_EQ(t.n_params(), 7);
  const auto r = t.row(15);
  for (double x : r) EXPECT_EQ(x, 1.0);
}

TEST(JacobianTable, MatchesOracleRows) {
  for (int order : {-1, 0, 1, 3}) {
    const JacobianTable t(7, order);
    for (Code c = 1; c < 128; ++c) {
      const auto ref = oracle::row(7, order, c);
      const auto r = t.row(c);
      for (int i = 0; i < t.n_params(); ++i) ASSERT_NEAR(r[i], ref[i], 1e-15) << c << ' ' << i;
    }
  }
}

TEST(JacobianTable, IdealWeightsReproduceCode) {
  const JacobianTable t(6, -1);
  const auto w = MismatchVector::ideal(6);
  for (Code c = 1; c < 64; ++c) {
    double acc = 0.0;
    for (int i = 0; i < 6; ++i) acc += t.row(c)[i] * w[i];
    EXPECT_EQ(acc, static_cast<double>(c));
  }
}

TEST(JacobianTable, PackAndRawBetasRoundTrip) {
  const JacobianTable t(10, 2);
  const std::vector<double> betas{1.0, 2e-3, -4e-6};
  const auto theta = t.pack(MismatchVector::ideal(10), betas);
  const auto back = t.raw_betas(theta);
  ASSERT_EQ(back.size(), 3u);
  for (int m = 0; m < 3; ++m) EXPECT_NEAR(back[m], betas[m], 1e-15 + 1e-12 * std::abs(betas[m]));
  EXPECT_DOUBLE_EQ(t.basis_scale()[10 + 2], 1023.0 * 1023.0);
}

TEST(JacobianTable, InvalidArguments) {
  EXPECT_THROW(JacobianTable(0, -1), std::invalid_argument);
  EXPECT_THROW(JacobianTable(8, -2), std::invalid_argument);
  const JacobianTable t(8, 0);
  EXPECT_THROW(t.pack(MismatchVector::ideal(7), {}), std::invalid_argument);
  const std::vector<double> too_many{1.0, 2.0};
  EXPECT_THROW(t.pack(MismatchVector::ideal(8), too_many), std::invalid_argument);
}
