#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vms/blocks.hpp"

namespace vms {

struct TrainConfig {
  BlockKind kind = BlockKind::dbm;
  std::uint64_t seed = 7;
  std::size_t steps = 200;
  std::size_t d_model = 8;
  std::size_t seq_len = 32;
  std::size_t batch = 4;       // fixed training set, full-batch steps
  double noise = 0.1;          // std of the additive input noise
  double learning_rate = 1e-2;
};

/// Synthetic denoising task: each input channel is a random sinusoid plus
/// Gaussian noise; the target is the centered 3-tap moving average of the
/// noisy input (edges use the available neighbours). Inputs and targets are
/// [batch][seq_len, d_model].
struct DenoiseTask {
  std::vector<Array> inputs;
  std::vector<Array> targets;
};

DenoiseTask make_denoise_task(const TrainConfig& cfg);

// Centered 3-tap moving average along the sequence axis.
Array smooth3(const Array& x);

/// Full-batch Adam on mean squared error. losses[0] is the loss before any
/// update and losses[i] the loss after i updates, so the curve holds steps+1
/// values. Throws DivergedLoss on a non-finite loss.
std::vector<double> toy_train(const TrainConfig& cfg);

std::string loss_curve_csv(const std::vector<double>& losses);
void write_loss_curve(const std::filesystem::path& path, const std::vector<double>& losses);

}  // namespace vms
