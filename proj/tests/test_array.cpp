#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vms/array.hpp"
#include "vms/error.hpp"
#include "vms/rng.hpp"

using vms::Array;

TEST(Array, ConstructionChecksLength) {
  EXPECT_THROW(Array({2, 3}, std::vector<double>(5)), vms::ShapeMismatch);
  const Array a({2, 3});
  EXPECT_EQ(a.size(), 6u);
  for (double v : a.data()) EXPECT_EQ(v, 0.0);
}

TEST(Array, FlatIndexRoundTrip) {
  const vms::Shape shape{3, 4, 5};
  for (std::size_t i = 0; i < vms::shape_numel(shape); ++i) {
    const auto coords = vms::unravel_index(shape, i);
    EXPECT_EQ(vms::flat_index(shape, coords), i);
  }
}

TEST(Array, MatmulMatchesTripleLoop) {
  vms::Rng rng(3);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(7), k = 1 + rng.below(7), n = 1 + rng.below(7);
    const Array a = rng.uniform_array({m, k}, -1, 1), b = rng.uniform_array({k, n}, -1, 1);
    EXPECT_LT(oracle::rel_err(vms::matmul(a, b), oracle::matmul(a, b)), 1e-14);
  }
}

TEST(Array, MatmulRejectsMismatch) {
  EXPECT_THROW(vms::matmul(Array({2, 3}), Array({4, 2})), vms::ShapeMismatch);
}

TEST(Array, MatmulIdentity) {
  vms::Rng rng(4);
  const Array a = rng.uniform_array({5, 5}, -1, 1);
  EXPECT_EQ(vms::matmul(a, vms::identity(5)), a);
}

TEST(Array, ReverseIsInvolution) {
  vms::Rng rng(5);
  const Array a = rng.uniform_array({7, 3}, -1, 1);
  EXPECT_EQ(vms::reverse_seq(vms::reverse_seq(a)), a);
  EXPECT_EQ(vms::reverse_seq(a)(0, 1), a(6, 1));
}

TEST(Array, SliceConcatRoundTrip) {
  vms::Rng rng(6);
  const Array a = rng.uniform_array({4, 6}, -1, 1);
  const Array back = vms::concat_cols<double>({vms::slice_cols(a, 0, 2), vms::slice_cols(a, 2, 6)});
  EXPECT_EQ(back, a);
  const Array rows =
      vms::concat_rows<double>({vms::slice_rows(a, 0, 1), vms::slice_rows(a, 1, 4)});
  EXPECT_EQ(rows, a);
}

TEST(Array, CheckFiniteNamesArray) {
  Array a({2});
  a[1] = std::nan("");
  try {
    vms::check_finite(a, "probe");
    FAIL();
  } catch (const vms::NonFinite& e) {
    EXPECT_NE(std::string(e.what()).find("probe"), std::string::npos);
  }
}

TEST(Array, FloatMatmulAccumulatesInDouble) {
  vms::Rng rng(7);
  const Array a = rng.uniform_array({3, 64}, -1, 1), b = rng.uniform_array({64, 2}, -1, 1);
  const auto af = a.cast<float>(), bf = b.cast<float>();
  const Array want = oracle::matmul(af.cast<double>(), bf.cast<double>());
  const Array got = vms::matmul(af, bf).cast<double>();
  EXPECT_LT(oracle::rel_err(got, want), 1e-7);
}
