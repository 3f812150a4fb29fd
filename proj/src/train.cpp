#include "vms/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "vms/error.hpp"
#include "vms/rng.hpp"

namespace vms {

Array smooth3(const Array& x) {
  require_rank(x.shape(), 2, "smooth3");
  const std::size_t m = x.extent(0), d = x.extent(1);
  Array out({m, d});
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t lo = t == 0 ? 0 : t - 1, hi = std::min(t + 1, m - 1);
    const double n = static_cast<double>(hi - lo + 1);
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t u = lo; u <= hi; ++u) s += x(u, c);
      out(t, c) = s / n;
    }
  }
  return out;
}

DenoiseTask make_denoise_task(const TrainConfig& cfg) {
  Rng rng(cfg.seed ^ 0xD3A0'15E5ULL);
  DenoiseTask task;
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    Array x({cfg.seq_len, cfg.d_model});
    for (std::size_t c = 0; c < cfg.d_model; ++c) {
      const double freq = rng.uniform(0.05, 0.25), phase = rng.uniform(0.0, 2 * std::numbers::pi);
      const double amp = rng.uniform(0.5, 1.0);
      for (std::size_t t = 0; t < cfg.seq_len; ++t) {
        x(t, c) = amp * std::sin(2 * std::numbers::pi * freq * t + phase) + cfg.noise * rng.normal();
      }
    }
    task.targets.push_back(smooth3(x));
    task.inputs.push_back(std::move(x));
  }
  return task;
}

namespace {

std::vector<Array*> tensors_of(Block& block) {
  std::vector<Array*> out;
  for_each_tensor(block, [&](const std::string&, Array& a) { out.push_back(&a); });
  return out;
}

}  // namespace

std::vector<double> toy_train(const TrainConfig& cfg) {
  if (cfg.seq_len == 0 || cfg.d_model == 0 || cfg.batch == 0) {
    throw InvalidArgument("toy_train: seq_len, d_model and batch must be >= 1");
  }
  BlockConfig bc;
  bc.kind = cfg.kind;
  bc.d_model = cfg.d_model;
  bc.seed = cfg.seed;
  Block block = make_block(bc);
  const DenoiseTask task = make_denoise_task(cfg);

  const auto params = tensors_of(block);
  std::vector<Array> m1, m2;
  for (const Array* p : params) {
    m1.emplace_back(p->shape());
    m2.emplace_back(p->shape());
  }
  const double count = static_cast<double>(cfg.batch * cfg.seq_len * cfg.d_model);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  std::vector<double> losses;
  for (std::size_t step = 0;; ++step) {
    double loss = 0.0;
    Block grad = zero_block(bc);
    const auto grads = tensors_of(grad);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const Array y = block_forward(block, task.inputs[b]);
      Array dy = sub(y, task.targets[b]);
      loss += sum_squares(dy);
      for (auto& v : dy.data()) v *= 2.0 / count;
      if (step == cfg.steps) continue;
      Block g = block_backward(block, task.inputs[b], dy).params;
      const auto gs = tensors_of(g);
      for (std::size_t i = 0; i < gs.size(); ++i) {
        auto dst = grads[i]->data();
        const auto src = gs[i]->data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
    loss /= count;
    if (!std::isfinite(loss)) {
      throw DivergedLoss("toy_train: loss is not finite at step " + std::to_string(step));
    }
    losses.push_back(loss);
    if (step == cfg.steps) break;

    const double t = static_cast<double>(step + 1);
    const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      const auto g = grads[i]->data();
      auto a = m1[i].data();
      auto v = m2[i].data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        a[k] = beta1 * a[k] + (1 - beta1) * g[k];
        v[k] = beta2 * v[k] + (1 - beta2) * g[k] * g[k];
        p[k] -= cfg.learning_rate * (a[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      }
    }
  }
  return losses;
}

std::string loss_curve_csv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, losses[i]);
    out += buf;
  }
  return out;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<double>& losses) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f << loss_curve_csv(losses);
}

}  // namespace vms
