#include <gtest/gtest.h>

#include <cmath>

#include "vms/rng.hpp"

TEST(Rng, Deterministic) {
  vms::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
  }
  EXPECT_NE(vms::Rng(42).next_u64(), vms::Rng(43).next_u64());
}

TEST(Rng, ZeroSeedIsUsable) {
  vms::Rng r(0);
  EXPECT_NE(r.next_u64(), 0u);
}

TEST(Rng, UniformInRange) {
  vms::Rng r(1);
  double lo = 1, hi = 0, sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  vms::Rng r(2);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, BelowStaysInBounds) {
  vms::Rng r(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}
