#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "avdoa/kv_file.hpp"
#include "avdoa/nn/adam.hpp"
#include "avdoa/nn/model.hpp"
#include "avdoa/nn/target.hpp"

namespace avdoa::nn {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  AdamConfig adam{};
  std::vector<std::size_t> hidden = {1000, 1000, 1000};
  std::size_t weight_hidden = 64;
  double target_sigma_deg = kDefaultTargetSigmaDeg;
  std::uint64_t seed = 0;

  // Keys: epochs, batch, lr, beta1, beta2, adam_eps, widths (comma list),
  // weight_hidden, sigma_theta, seed. Missing keys keep their defaults.
  static TrainConfig from_kv(const KeyValueFile& kv);
  KeyValueFile to_kv() const;
  // Throws InvalidArgument on non-positive sizes, rates or widths.
  void validate() const;
};

// Row-aligned network inputs and soft targets.
struct TrainingSet {
  Tensor gcc;     // n x 306
  Tensor vis;     // n x 102 (may be empty for the GCC-only model)
  Tensor target;  // n x 360

  std::size_t size() const { return gcc.rows(); }
};

struct TrainResult {
  Network network;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Seeded shuffling, MSE loss, Adam. Batches of a single sample are skipped
// (batch norm needs two); loss and outputs are checked for NaN/Inf on every step.
TrainResult train(ModelKind kind, const TrainingSet& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

ModelConfig model_config_for(ModelKind kind, const TrainingSet& data, const TrainConfig& config);

}  // namespace avdoa::nn
