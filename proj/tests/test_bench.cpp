#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "vms/bench.hpp"
#include "vms/error.hpp"
#include "vms/rng.hpp"

using vms::BenchOp;

TEST(Bench, FrameLists) {
  EXPECT_EQ(vms::parse_frame_list("4..512"),
            (std::vector<std::size_t>{4, 8, 16, 32, 64, 128, 256, 512}));
  EXPECT_EQ(vms::parse_frame_list("3,5,9"), (std::vector<std::size_t>{3, 5, 9}));
  EXPECT_THROW(vms::parse_frame_list("8..4"), vms::InvalidArgument);
  EXPECT_THROW(vms::parse_frame_list("4,4"), vms::InvalidArgument);
  EXPECT_THROW(vms::parse_frame_list("4,x"), vms::InvalidArgument);
  EXPECT_THROW(vms::parse_frame_list("0..4"), vms::InvalidArgument);
}

TEST(Bench, OperatorNames) {
  EXPECT_EQ(vms::parse_bench_op("scan"), BenchOp::selective_scan_chunked);
  EXPECT_EQ(vms::parse_bench_op("attn"), BenchOp::attention_naive);
  EXPECT_EQ(vms::parse_bench_op("dbm_block"), BenchOp::dbm_block);
  EXPECT_THROW(vms::parse_bench_op("conv"), vms::InvalidArgument);
}

TEST(Bench, MinimalSweepHasOneRow) {
  vms::SweepConfig cfg;
  cfg.frames = {4};
  cfg.ops = {BenchOp::selective_scan};
  cfg.repeats = 3;
  const auto rows = vms::run_sweep(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].tokens, 4u * 196);
  EXPECT_TRUE(rows[0].wall_ns.has_value());
  EXPECT_EQ(rows[0].status, vms::BenchStatus::ok);
}

TEST(Bench, AttentionBudgetSkipsWithoutRunning) {
  vms::SweepConfig cfg;
  cfg.frames = {1, 2, 100000};
  cfg.tokens_per_frame = 16;
  cfg.ops = {BenchOp::attention_naive};
  cfg.repeats = 1;
  cfg.attention_budget_bytes = 1 << 20;
  const auto rows = vms::run_sweep(cfg);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].status, vms::BenchStatus::ok);
  EXPECT_EQ(rows[2].status, vms::BenchStatus::skipped);
  EXPECT_FALSE(rows[2].wall_ns.has_value());
  EXPECT_GT(rows[2].bytes_peak, cfg.attention_budget_bytes);
}

TEST(Bench, UntimedModeVerifiesInParallel) {
  setenv("VMS_THREADS", "2", 1);
  EXPECT_LE(vms::worker_threads(), 2u);
  vms::SweepConfig cfg;
  cfg.frames = {1, 2, 4};
  cfg.tokens_per_frame = 8;
  cfg.ops = {BenchOp::selective_scan_chunked, BenchOp::mamba_block, BenchOp::vim_block,
             BenchOp::dbm_block, BenchOp::attention_naive};
  cfg.timing = false;
  cfg.dtype = vms::Dtype::f32;
  const auto rows = vms::run_sweep(cfg);
  EXPECT_EQ(rows.size(), 15u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, vms::BenchStatus::verified);
    EXPECT_FALSE(r.wall_ns.has_value());
  }
  unsetenv("VMS_THREADS");
}

TEST(Bench, CsvRoundTrip) {
  std::vector<vms::BenchRecord> rows(2);
  rows[0] = {BenchOp::selective_scan_chunked, 4, 196, 784, vms::Dtype::f32, 9, 12345, 1000,
             vms::BenchStatus::ok};
  rows[1] = {BenchOp::attention_naive, 512, 196, 100352, vms::Dtype::f32, 9, std::nullopt,
             1u << 31, vms::BenchStatus::skipped};
  const std::string csv = vms::records_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), std::string(vms::kBenchCsvHeader));
  EXPECT_NE(csv.find("attention_naive,512,196,100352,f32,9,,2147483648,SKIPPED"), std::string::npos);
  const auto back = vms::records_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].wall_ns, 12345u);
  EXPECT_FALSE(back[1].wall_ns.has_value());
  EXPECT_EQ(back[1].status, vms::BenchStatus::skipped);
}

TEST(Bench, CsvValidation) {
  EXPECT_THROW(vms::records_from_csv("op,frames\n"), vms::FormatError);
  const std::string header(vms::kBenchCsvHeader);
  EXPECT_THROW(vms::records_from_csv(header + "\nselective_scan,4,196,700,f64,9,1,1,OK\n"),
               vms::FormatError);
}

TEST(Fit, ExactLinear) {
  std::vector<double> m, t;
  for (double x = 784; x <= 100352; x *= 2) {
    m.push_back(x);
    t.push_back(3.5 * x);
  }
  const auto f = vms::fit_loglog(m, t);
  EXPECT_NEAR(f.slope, 1.0, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Fit, ExactQuadratic) {
  std::vector<double> m, t;
  for (double x = 10; x <= 640; x *= 2) {
    m.push_back(x);
    t.push_back(0.1 * x * x);
  }
  EXPECT_NEAR(vms::fit_loglog(m, t).slope, 2.0, 1e-9);
}

TEST(Fit, JitteredRecoversSlope) {
  vms::Rng rng(5);
  for (double truth : {1.0, 2.0}) {
    std::vector<double> m, t;
    for (double x = 784; x <= 100352; x *= 2) {
      m.push_back(x);
      t.push_back(std::pow(x, truth) * (1.0 + rng.uniform(-0.1, 0.1)));
    }
    EXPECT_NEAR(vms::fit_loglog(m, t).slope, truth, 0.1);
  }
}

TEST(Fit, NeedsFivePointsOverTwoOctaves) {
  EXPECT_THROW(vms::fit_loglog({1, 2, 4, 8}, {1, 2, 4, 8}), vms::InsufficientPoints);
  EXPECT_THROW(vms::fit_loglog({10, 11, 12, 13, 14}, {1, 2, 3, 4, 5}), vms::InsufficientPoints);
  EXPECT_NO_THROW(vms::fit_loglog({10, 15, 20, 30, 40}, {1, 2, 3, 4, 5}));
}

TEST(Fit, GroupsSkipSkippedRows) {
  std::vector<vms::BenchRecord> rows;
  for (std::size_t f = 1; f <= 64; f *= 2) {
    rows.push_back({BenchOp::attention_naive, f, 10, f * 10, vms::Dtype::f64, 1,
                    f <= 16 ? std::optional<std::uint64_t>(f * f * 100) : std::nullopt, 0,
                    f <= 16 ? vms::BenchStatus::ok : vms::BenchStatus::skipped});
  }
  const auto fits = vms::fit_slopes(rows);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_EQ(fits[0].points, 5u);
  EXPECT_NEAR(fits[0].slope, 2.0, 1e-9);
  rows.erase(rows.begin());
  EXPECT_THROW(vms::fit_slopes(rows), vms::InsufficientPoints);
}
