#include "vms/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "vms/attention.hpp"
#include "vms/blocks.hpp"
#include "vms/error.hpp"
#include "vms/rng.hpp"
#include "vms/ssm.hpp"

namespace vms {

std::string_view to_string(BenchOp op) {
  switch (op) {
    case BenchOp::selective_scan: return "selective_scan";
    case BenchOp::selective_scan_chunked: return "selective_scan_chunked";
    case BenchOp::attention_naive: return "attention_naive";
    case BenchOp::mamba_block: return "mamba_block";
    case BenchOp::vim_block: return "vim_block";
    case BenchOp::dbm_block: return "dbm_block";
  }
  return "?";
}

BenchOp parse_bench_op(std::string_view name) {
  static const std::map<std::string_view, BenchOp> names{
      {"selective_scan", BenchOp::selective_scan},
      {"scan_full", BenchOp::selective_scan},
      {"selective_scan_chunked", BenchOp::selective_scan_chunked},
      {"scan", BenchOp::selective_scan_chunked},
      {"attention_naive", BenchOp::attention_naive},
      {"attn", BenchOp::attention_naive},
      {"mamba_block", BenchOp::mamba_block},
      {"mamba", BenchOp::mamba_block},
      {"vim_block", BenchOp::vim_block},
      {"vim", BenchOp::vim_block},
      {"dbm_block", BenchOp::dbm_block},
      {"dbm", BenchOp::dbm_block},
  };
  const auto it = names.find(name);
  if (it == names.end()) throw InvalidArgument("unknown benchmark operator '" + std::string(name) + "'");
  return it->second;
}

std::string_view to_string(Dtype dtype) { return dtype == Dtype::f32 ? "f32" : "f64"; }

Dtype parse_dtype(std::string_view name) {
  if (name == "f32") return Dtype::f32;
  if (name == "f64") return Dtype::f64;
  throw InvalidArgument("unknown dtype '" + std::string(name) + "' (expected f32|f64)");
}

namespace {

std::string_view to_string(BenchStatus s) {
  switch (s) {
    case BenchStatus::ok: return "OK";
    case BenchStatus::skipped: return "SKIPPED";
    case BenchStatus::verified: return "VERIFIED";
  }
  return "?";
}

BenchStatus parse_status(std::string_view s) {
  if (s == "OK") return BenchStatus::ok;
  if (s == "SKIPPED") return BenchStatus::skipped;
  if (s == "VERIFIED") return BenchStatus::verified;
  throw FormatError("unknown benchmark status '" + std::string(s) + "'");
}

std::size_t parse_size(std::string_view s, const char* what) {
  std::size_t pos = 0;
  const std::string str(s);
  try {
    const auto v = std::stoull(str, &pos);
    if (pos != str.size()) throw std::invalid_argument(str);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InvalidArgument(std::string(what) + ": expected a non-negative integer, got '" + str + "'");
  }
}

std::size_t dt_rank_for(std::size_t width) { return (width + 15) / 16; }

BlockKind block_kind_of(BenchOp op) {
  switch (op) {
    case BenchOp::vim_block: return BlockKind::vim;
    case BenchOp::dbm_block: return BlockKind::dbm;
    default: return BlockKind::mamba;
  }
}

// A prepared benchmark point: inputs built once, `run` evaluates the operator.
template <class T>
std::function<double()> prepare(BenchOp op, std::size_t tokens, const SweepConfig& cfg) {
  Rng rng(cfg.seed ^ (static_cast<std::uint64_t>(op) << 32) ^ tokens);
  const std::size_t w = cfg.width;
  auto x = std::make_shared<BasicArray<T>>(rng.uniform_array({tokens, w}, -1.0, 1.0).cast<T>());
  auto first = [](const BasicArray<T>& y) { return y.empty() ? 0.0 : static_cast<double>(y[0]); };

  switch (op) {
    case BenchOp::selective_scan:
    case BenchOp::selective_scan_chunked: {
      auto p = std::make_shared<BasicSsmParams<T>>(
          init_ssm_params({w, cfg.d_state, dt_rank_for(w)}, rng).cast<T>());
      const std::size_t chunk = op == BenchOp::selective_scan ? 0 : cfg.chunk;
      return [=] {
        return first(chunk ? selective_scan_chunked(*p, *x, chunk) : selective_scan(*p, *x));
      };
    }
    case BenchOp::attention_naive: {
      auto aw = std::make_shared<BasicAttentionWeights<T>>(make_attention_weights(w, rng).cast<T>());
      return [=] { return first(attention_naive(*x, *aw)); };
    }
    default: {
      BlockConfig bc;
      bc.kind = block_kind_of(op);
      bc.d_model = w;
      bc.d_state = cfg.d_state;
      bc.seed = cfg.seed;
      const Block block = make_block(bc);
      if constexpr (std::is_same_v<T, float>) {
        auto b = std::make_shared<BlockF>(to_float(block));
        return [=] { return first(block_forward(*b, *x)); };
      } else {
        auto b = std::make_shared<Block>(block);
        return [=] { return first(block_forward(*b, *x)); };
      }
    }
  }
}

std::function<double()> prepare_point(BenchOp op, std::size_t tokens, const SweepConfig& cfg) {
  return cfg.dtype == Dtype::f32 ? prepare<float>(op, tokens, cfg) : prepare<double>(op, tokens, cfg);
}

std::uint64_t median_ns(const std::function<double()>& run, std::size_t warmup, std::size_t repeats) {
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < warmup; ++i) sink = sink + run();
  std::vector<std::uint64_t> times;
  times.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    sink = sink + run();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : (times[n / 2 - 1] + times[n / 2]) / 2;
}

}  // namespace

std::vector<std::size_t> parse_frame_list(std::string_view text) {
  std::vector<std::size_t> frames;
  const auto dots = text.find("..");
  if (dots != std::string_view::npos) {
    const std::size_t lo = parse_size(text.substr(0, dots), "--frames");
    const std::size_t hi = parse_size(text.substr(dots + 2), "--frames");
    if (lo == 0 || hi < lo) throw InvalidArgument("--frames: range must satisfy 1 <= lo <= hi");
    for (std::size_t f = lo; f <= hi; f *= 2) frames.push_back(f);
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const auto end = comma == std::string_view::npos ? text.size() : comma;
      frames.push_back(parse_size(text.substr(start, end - start), "--frames"));
      start = end + 1;
    }
  }
  if (frames.empty()) throw InvalidArgument("--frames: empty list");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i] == 0 || (i && frames[i] <= frames[i - 1])) {
      throw InvalidArgument("--frames: list must be positive and strictly increasing");
    }
  }
  return frames;
}

std::size_t estimate_bytes(BenchOp op, std::size_t tokens, const SweepConfig& cfg) {
  const std::size_t s = cfg.dtype == Dtype::f32 ? 4 : 8;
  const std::size_t w = cfg.width, n = cfg.d_state;
  auto scan_bytes = [&](std::size_t width, std::size_t rows_resident) {
    // x, y and the per-chunk copy, plus per-row projections and the state.
    const std::size_t r = dt_rank_for(cfg.width);
    return s * (3 * tokens * width + rows_resident * (r + width + 2 * n) + width * n);
  };
  switch (op) {
    case BenchOp::selective_scan: return scan_bytes(w, tokens);
    case BenchOp::selective_scan_chunked: return scan_bytes(w, std::min(cfg.chunk, tokens));
    case BenchOp::attention_naive: return attention_working_set(tokens, w, s);
    case BenchOp::mamba_block:
    case BenchOp::vim_block:
    case BenchOp::dbm_block: {
      const std::size_t di = 2 * w;
      const std::size_t branches = op == BenchOp::vim_block ? 2 : 1;
      // in_proj output, conv and silu streams, gated mix and output.
      const std::size_t dense = s * tokens * (2 * di + 2 * branches * di + di + 2 * w);
      const std::size_t branch_width = op == BenchOp::dbm_block ? di / 2 : di;
      const std::size_t scan_dirs = op == BenchOp::mamba_block ? 1 : 2;
      return dense + scan_dirs * scan_bytes(branch_width, tokens);
    }
  }
  return 0;
}

std::size_t worker_threads() {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("VMS_THREADS")) {
    const std::size_t cap = parse_size(env, "VMS_THREADS");
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

std::vector<BenchRecord> run_sweep(const SweepConfig& cfg) {
  if (cfg.frames.empty() || cfg.ops.empty()) throw InvalidArgument("sweep: no frames or operators");
  for (std::size_t i = 1; i < cfg.frames.size(); ++i) {
    if (cfg.frames[i] <= cfg.frames[i - 1]) {
      throw InvalidArgument("sweep: frame list must be strictly increasing");
    }
  }
  if (cfg.tokens_per_frame == 0 || cfg.width == 0 || cfg.chunk == 0) {
    throw InvalidArgument("sweep: tokens_per_frame, width and chunk must be >= 1");
  }
  if (cfg.timing && cfg.repeats == 0) throw InvalidArgument("sweep: repeats must be >= 1");

  std::vector<BenchRecord> records;
  for (BenchOp op : cfg.ops) {
    for (std::size_t f : cfg.frames) {
      BenchRecord r;
      r.op = op;
      r.frames = f;
      r.tokens_per_frame = cfg.tokens_per_frame;
      r.tokens = f * cfg.tokens_per_frame;
      r.dtype = cfg.dtype;
      r.repeats = cfg.timing ? cfg.repeats : 1;
      r.bytes_peak = estimate_bytes(op, r.tokens, cfg);
      r.status = BenchStatus::ok;
      if (op == BenchOp::attention_naive && r.bytes_peak > cfg.attention_budget_bytes) {
        r.status = BenchStatus::skipped;
      }
      records.push_back(r);
    }
  }

  if (cfg.timing) {
    // Timed points run one at a time.
    for (auto& r : records) {
      if (r.status == BenchStatus::skipped) continue;
      const auto run = prepare_point(r.op, r.tokens, cfg);
      r.wall_ns = median_ns(run, cfg.warmup, cfg.repeats);
    }
    return records;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(records.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      auto& r = records[i];
      if (r.status == BenchStatus::skipped) continue;
      try {
        prepare_point(r.op, r.tokens, cfg)();
        r.status = BenchStatus::verified;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = std::min(worker_threads(), records.size());
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

std::string records_to_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  os << kBenchCsvHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.op) << ',' << r.frames << ',' << r.tokens_per_frame << ',' << r.tokens << ','
       << to_string(r.dtype) << ',' << r.repeats << ',';
    if (r.wall_ns) os << *r.wall_ns;
    os << ',' << r.bytes_peak << ',' << to_string(r.status) << '\n';
  }
  return os.str();
}

std::vector<BenchRecord> records_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kBenchCsvHeader) {
    throw FormatError("benchmark CSV: header must be exactly '" + std::string(kBenchCsvHeader) + "'");
  }
  std::vector<BenchRecord> records;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) {
      throw FormatError("benchmark CSV line " + std::to_string(lineno) + ": expected 9 fields");
    }
    try {
      BenchRecord r;
      r.op = parse_bench_op(cells[0]);
      r.frames = parse_size(cells[1], "frames");
      r.tokens_per_frame = parse_size(cells[2], "tokens_per_frame");
      r.tokens = parse_size(cells[3], "tokens");
      r.dtype = parse_dtype(cells[4]);
      r.repeats = parse_size(cells[5], "repeats");
      if (!cells[6].empty()) r.wall_ns = parse_size(cells[6], "wall_ns");
      r.bytes_peak = parse_size(cells[7], "bytes_peak");
      r.status = parse_status(cells[8]);
      if (r.tokens != r.frames * r.tokens_per_frame) {
        throw FormatError("tokens != frames * tokens_per_frame");
      }
      records.push_back(r);
    } catch (const Error& e) {
      throw FormatError("benchmark CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f << records_to_csv(records);
}

std::vector<BenchRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return records_from_csv(ss.str());
}

SlopeFit fit_loglog(const std::vector<double>& tokens, const std::vector<double>& wall) {
  if (tokens.size() != wall.size()) throw InvalidArgument("fit_loglog: length mismatch");
  if (tokens.size() < 5) {
    throw InsufficientPoints("slope fit needs >= 5 points, got " + std::to_string(tokens.size()));
  }
  const auto [lo, hi] = std::minmax_element(tokens.begin(), tokens.end());
  if (*hi < 4.0 * *lo) throw InsufficientPoints("slope fit points must span >= 2 octaves");

  const std::size_t n = tokens.size();
  double sx = 0, sy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(tokens[i] > 0) || !(wall[i] > 0)) throw InvalidArgument("fit_loglog: values must be > 0");
    lx[i] = std::log(tokens[i]);
    ly[i] = std::log(wall[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += e * e;
  }
  fit.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

std::vector<SlopeFit> fit_slopes(const std::vector<BenchRecord>& records) {
  std::map<std::pair<BenchOp, Dtype>, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<std::pair<BenchOp, Dtype>> order;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.op, r.dtype);
    if (!groups.count(key)) order.push_back(key);
    auto& g = groups[key];
    if (r.status != BenchStatus::ok || !r.wall_ns) continue;
    g.first.push_back(static_cast<double>(r.tokens));
    g.second.push_back(static_cast<double>(*r.wall_ns));
  }
  std::vector<SlopeFit> fits;
  for (const auto& key : order) {
    const auto& g = groups[key];
    SlopeFit fit;
    try {
      fit = fit_loglog(g.first, g.second);
    } catch (const InsufficientPoints& e) {
      throw InsufficientPoints(std::string(to_string(key.first)) + ": " + e.what());
    }
    fit.op = key.first;
    fit.dtype = key.second;
    fits.push_back(fit);
  }
  return fits;
}

}  // namespace vms
