#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vms {

enum class BenchOp {
  selective_scan,
  selective_scan_chunked,
  attention_naive,
  mamba_block,
  vim_block,
  dbm_block,
};

std::string_view to_string(BenchOp op);
// Accepts full names plus the aliases scan (chunked scan), scan_full, attn,
// mamba, vim, dbm.
BenchOp parse_bench_op(std::string_view name);

enum class Dtype { f32, f64 };
std::string_view to_string(Dtype dtype);
Dtype parse_dtype(std::string_view name);

struct SweepConfig {
  std::vector<std::size_t> frames{4, 8, 16, 32, 64, 128, 256, 512};
  std::size_t tokens_per_frame = 196;
  std::vector<BenchOp> ops{BenchOp::selective_scan_chunked, BenchOp::attention_naive};
  std::size_t repeats = 9;
  std::size_t warmup = 2;
  Dtype dtype = Dtype::f64;
  std::size_t width = 16;    // D for attention and blocks, d_inner for bare scans
  std::size_t d_state = 16;  // N
  std::size_t chunk = 64;    // chunk length for selective_scan_chunked
  std::size_t attention_budget_bytes = std::size_t{1} << 30;
  bool timing = true;        // false: run every point once, in parallel, untimed
  std::uint64_t seed = 0;
};

enum class BenchStatus { ok, skipped, verified };

/// One CSV row. wall_ns is empty for skipped and untimed rows.
struct BenchRecord {
  BenchOp op = BenchOp::selective_scan;
  std::size_t frames = 0;
  std::size_t tokens_per_frame = 0;
  std::size_t tokens = 0;
  Dtype dtype = Dtype::f64;
  std::size_t repeats = 0;
  std::optional<std::uint64_t> wall_ns;
  std::size_t bytes_peak = 0;
  BenchStatus status = BenchStatus::ok;
};

inline constexpr std::string_view kBenchCsvHeader =
    "operator,frames,tokens_per_frame,tokens,dtype,repeats,wall_ns,bytes_peak,status";

// "4..512" expands by doubling (4,8,...,512); "4,16,64" is taken literally.
// The result must be strictly increasing.
std::vector<std::size_t> parse_frame_list(std::string_view text);

// Analytic working-set estimate for one evaluation of `op`.
std::size_t estimate_bytes(BenchOp op, std::size_t tokens, const SweepConfig& cfg);

// Worker-thread cap from VMS_THREADS (defaults to hardware concurrency, min 1).
std::size_t worker_threads();

std::vector<BenchRecord> run_sweep(const SweepConfig& cfg);

std::string records_to_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> records_from_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_csv(const std::filesystem::path& path);

struct SlopeFit {
  BenchOp op = BenchOp::selective_scan;
  Dtype dtype = Dtype::f64;
  std::size_t points = 0;
  double slope = 0.0;  // least-squares slope of log(wall_ns) against log(tokens)
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares in log-log space over (tokens, seconds) pairs. Needs >= 5
// points spanning >= 2 octaves of tokens, else InsufficientPoints.
SlopeFit fit_loglog(const std::vector<double>& tokens, const std::vector<double>& wall);
// One fit per (operator, dtype) over timed rows.
std::vector<SlopeFit> fit_slopes(const std::vector<BenchRecord>& records);

}  // namespace vms
