// vms: benchmark sweeps, parameter audit, toy training and golden vectors.
//
// Exit codes: 0 success, 2 validation error, 3 acceptance-check failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vms/audit.hpp"
#include "vms/bench.hpp"
#include "vms/error.hpp"
#include "vms/golden.hpp"
#include "vms/train.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kCheckFailed = 3;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw vms::InvalidArgument("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct SweepArgs {
  std::string frames = "4..512";
  std::string ops = "scan,attn";
  std::string dtype = "f64";
  std::string out;
  std::size_t budget_mib = 1024;
  bool untimed = false;
  vms::SweepConfig cfg;
};

int cmd_sweep(SweepArgs& a) {
  a.cfg.frames = vms::parse_frame_list(a.frames);
  a.cfg.ops.clear();
  for (const auto& op : split_commas(a.ops)) a.cfg.ops.push_back(vms::parse_bench_op(op));
  a.cfg.dtype = vms::parse_dtype(a.dtype);
  a.cfg.attention_budget_bytes = a.budget_mib << 20;
  a.cfg.timing = !a.untimed;

  std::cerr << "# CPU wall-clock sweep; the log-log slope is the quantity of interest, "
               "absolute times are machine-specific\n";
  const auto records = vms::run_sweep(a.cfg);
  if (a.out.empty()) {
    std::cout << vms::records_to_csv(records);
  } else {
    vms::write_csv(a.out, records);
    std::cerr << "wrote " << records.size() << " rows to " << a.out << '\n';
  }
  return kOk;
}

struct FitArgs {
  std::string in;
  bool check = false;
};

int cmd_fit(const FitArgs& a) {
  const auto fits = vms::fit_slopes(vms::read_csv(a.in));
  bool ok = true;
  std::printf("%-24s %-5s %6s %8s %8s  %s\n", "operator", "dtype", "points", "slope", "r2",
              a.check ? "check" : "");
  for (const auto& f : fits) {
    std::string verdict;
    if (a.check) {
      double lo = 0, hi = 0;
      if (f.op == vms::BenchOp::selective_scan_chunked || f.op == vms::BenchOp::selective_scan) {
        lo = 0.85, hi = 1.15;
      } else if (f.op == vms::BenchOp::attention_naive) {
        lo = 1.7, hi = 2.3;
      }
      if (hi > 0) {
        const bool pass = f.slope >= lo && f.slope <= hi;
        ok = ok && pass;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s [%.2f, %.2f]", pass ? "ok" : "OUT", lo, hi);
        verdict = buf;
      }
    }
    std::printf("%-24s %-5s %6zu %8.4f %8.5f  %s\n", std::string(vms::to_string(f.op)).c_str(),
                std::string(vms::to_string(f.dtype)).c_str(), f.points, f.slope, f.r2,
                verdict.c_str());
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_audit(const std::string& config) {
  const auto cfg = config.empty() ? vms::default_audit_config()
                                  : vms::parse_audit_config(read_file(config));
  const auto report = vms::param_audit(cfg);
  std::cout << report.to_text();
  vms::require_audit_pass(report);
  return kOk;
}

struct TrainArgs {
  std::string block = "dbm";
  std::string out;
  bool check = false;
  vms::TrainConfig cfg;
};

int cmd_train(TrainArgs& a) {
  a.cfg.kind = vms::parse_block_kind(a.block);
  const auto losses = vms::toy_train(a.cfg);
  if (a.out.empty()) {
    std::cout << vms::loss_curve_csv(losses);
  } else {
    vms::write_loss_curve(a.out, losses);
  }
  const double ratio = losses.front() / losses.back();
  std::fprintf(stderr, "%s: loss %.6g -> %.6g (%.1fx) over %zu steps\n", a.block.c_str(),
               losses.front(), losses.back(), ratio, a.cfg.steps);
  if (a.check && !(ratio >= 10.0)) {
    std::fprintf(stderr, "check failed: loss reduction below 10x\n");
    return kCheckFailed;
  }
  return kOk;
}

int cmd_golden(const std::string& mode, const std::string& dir) {
  if (mode == "generate") {
    vms::golden_generate(dir);
    std::cerr << "golden vectors written to " << dir << '\n';
    return kOk;
  }
  const auto report = vms::golden_verify(dir);
  std::cout << report.to_text();
  vms::require_golden_pass(report);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective-scan kernels, bidirectional blocks and their benchmark harness"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Scaling benchmark");
  bench->require_subcommand(1);
  SweepArgs sweep;
  auto* sweep_cmd = bench->add_subcommand("sweep", "Time operators over growing frame counts");
  sweep_cmd->add_option("--frames", sweep.frames, "lo..hi (doubling) or a comma list")
      ->capture_default_str();
  sweep_cmd->add_option("--tokens-per-frame", sweep.cfg.tokens_per_frame)->capture_default_str();
  sweep_cmd->add_option("--ops", sweep.ops, "scan,scan_full,attn,mamba,vim,dbm")
      ->capture_default_str();
  sweep_cmd->add_option("--repeats", sweep.cfg.repeats)->capture_default_str();
  sweep_cmd->add_option("--warmup", sweep.cfg.warmup)->capture_default_str();
  sweep_cmd->add_option("--dtype", sweep.dtype, "f32|f64")->capture_default_str();
  sweep_cmd->add_option("--width", sweep.cfg.width, "model / channel width")->capture_default_str();
  sweep_cmd->add_option("--d-state", sweep.cfg.d_state)->capture_default_str();
  sweep_cmd->add_option("--chunk", sweep.cfg.chunk)->capture_default_str();
  sweep_cmd->add_option("--budget-mib", sweep.budget_mib, "attention memory budget")
      ->capture_default_str();
  sweep_cmd->add_flag("--untimed", sweep.untimed, "run each point once, in parallel");
  sweep_cmd->add_option("--seed", sweep.cfg.seed)->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "CSV path (stdout if omitted)");

  FitArgs fit;
  auto* fit_cmd = bench->add_subcommand("fit", "Log-log slope per operator");
  fit_cmd->add_option("--in", fit.in)->required();
  fit_cmd->add_flag("--check", fit.check, "require scan slope in [0.85,1.15], attention in [1.7,2.3]");

  std::string audit_config;
  auto* audit_cmd = app.add_subcommand("audit", "Static/dynamic parameter audit");
  audit_cmd->add_option("--config", audit_config, "JSON block list (default: built-in grid)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Toy denoising run");
  train_cmd->add_option("--block", train.block, "mamba|vim|dbm")->capture_default_str();
  train_cmd->add_option("--seed", train.cfg.seed)->capture_default_str();
  train_cmd->add_option("--steps", train.cfg.steps)->capture_default_str();
  train_cmd->add_option("--lr", train.cfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--out", train.out, "loss CSV path (stdout if omitted)");
  train_cmd->add_flag("--check", train.check, "require a 10x loss reduction");

  std::string golden_mode, golden_dir;
  auto* golden_cmd = app.add_subcommand("golden", "Generate or verify golden vectors");
  golden_cmd->add_option("mode", golden_mode)
      ->required()
      ->check(CLI::IsMember({"generate", "verify"}));
  golden_cmd->add_option("--dir", golden_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*fit_cmd) return cmd_fit(fit);
    if (*audit_cmd) return cmd_audit(audit_config);
    if (*train_cmd) return cmd_train(train);
    if (*golden_cmd) return cmd_golden(golden_mode, golden_dir);
  } catch (const vms::RatioMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const vms::GoldenMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const vms::DivergedLoss& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const vms::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
