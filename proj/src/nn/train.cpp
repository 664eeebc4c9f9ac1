#include "avdoa/nn/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "avdoa/error.hpp"
#include "avdoa/rng.hpp"

namespace avdoa::nn {

TrainConfig TrainConfig::from_kv(const KeyValueFile& kv) {
  TrainConfig c;
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    require(v >= 0, ErrorCode::InvalidArgument, std::string(key) + " must not be negative");
    return static_cast<std::size_t>(v);
  };
  c.epochs = count("epochs", c.epochs);
  c.batch_size = count("batch", c.batch_size);
  c.adam.learning_rate = kv.get_double("lr", c.adam.learning_rate);
  c.adam.beta1 = kv.get_double("beta1", c.adam.beta1);
  c.adam.beta2 = kv.get_double("beta2", c.adam.beta2);
  c.adam.epsilon = kv.get_double("adam_eps", c.adam.epsilon);
  if (kv.has("widths")) {
    c.hidden.clear();
    for (double w : kv.get_doubles("widths")) {
      require(w >= 1 && w == static_cast<double>(static_cast<std::size_t>(w)), ErrorCode::FormatError,
              "widths must be positive integers");
      c.hidden.push_back(static_cast<std::size_t>(w));
    }
  }
  c.weight_hidden = count("weight_hidden", c.weight_hidden);
  c.target_sigma_deg = kv.get_double("sigma_theta", c.target_sigma_deg);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::InvalidArgument, "epochs must be at least 1");
  require(batch_size >= 2, ErrorCode::InvalidArgument, "batch size must be at least 2");
  require(adam.learning_rate > 0, ErrorCode::InvalidArgument, "learning rate must be positive");
  require(!hidden.empty(), ErrorCode::InvalidArgument, "at least one hidden layer is required");
  for (std::size_t w : hidden) require(w >= 1, ErrorCode::InvalidArgument, "hidden widths must be positive");
  require(weight_hidden >= 1, ErrorCode::InvalidArgument, "weight_hidden must be positive");
  require(target_sigma_deg > 0, ErrorCode::InvalidArgument, "sigma_theta must be positive");
}

KeyValueFile TrainConfig::to_kv() const {
  KeyValueFile kv;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  std::string widths;
  for (std::size_t i = 0; i < hidden.size(); ++i) widths += (i ? "," : "") + std::to_string(hidden[i]);
  kv.set("epochs", std::to_string(epochs));
  kv.set("batch", std::to_string(batch_size));
  kv.set("lr", num(adam.learning_rate));
  kv.set("beta1", num(adam.beta1));
  kv.set("beta2", num(adam.beta2));
  kv.set("adam_eps", num(adam.epsilon));
  kv.set("widths", widths);
  kv.set("weight_hidden", std::to_string(weight_hidden));
  kv.set("sigma_theta", num(target_sigma_deg));
  kv.set("seed", std::to_string(seed));
  return kv;
}

ModelConfig model_config_for(ModelKind kind, const TrainingSet& data, const TrainConfig& config) {
  ModelConfig mc;
  mc.kind = kind;
  mc.gcc_dim = data.gcc.cols();
  mc.vis_dim = kind == ModelKind::GccOnly ? 102 : data.vis.cols();
  mc.hidden = config.hidden;
  mc.weight_hidden = config.weight_hidden;
  mc.outputs = data.target.cols();
  return mc;
}

TrainResult train(ModelKind kind, const TrainingSet& data, const TrainConfig& config, const EpochCallback& on_epoch) {
  const std::size_t n = data.size();
  require(n > 0, ErrorCode::EmptyDataset, "training set is empty");
  require(n >= 2, ErrorCode::BatchTooSmall, "training needs at least two samples");
  require(data.target.rows() == n, ErrorCode::ShapeMismatch, "target row count");
  if (kind != ModelKind::GccOnly) require(data.vis.rows() == n, ErrorCode::ShapeMismatch, "visual row count");
  config.validate();

  TrainResult result{Network(model_config_for(kind, data, config), mix_seed(config.seed, 1)), {}};
  Network& net = result.network;
  Adam adam(config.adam);
  Rng shuffle_rng(mix_seed(config.seed, 2));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Tensor no_vis;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      if (stop - start < 2) continue;
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Tensor gcc = gather_rows(data.gcc, idx);
      const Tensor vis = kind == ModelKind::GccOnly ? no_vis : gather_rows(data.vis, idx);
      const Tensor target = gather_rows(data.target, idx);

      const ModelOutput out = net.forward(gcc, vis, Mode::Train);
      const LossResult loss = mse_loss(out.posterior, target);
      if (!std::isfinite(loss.loss)) {
        throw Error(ErrorCode::NaNLoss, "loss became non-finite in epoch " + std::to_string(epoch) + ", batch " +
                                            std::to_string(batches));
      }
      net.backward(loss.grad);
      const auto params = net.parameters();
      adam.step(params);
      for (const auto& p : params) {
        for (double v : p.value) {
          if (!std::isfinite(v)) throw Error(ErrorCode::NaNLoss, "parameter became non-finite");
        }
      }
      loss_sum += loss.loss;
      ++batches;
    }
    const double mean = loss_sum / static_cast<double>(batches);
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace avdoa::nn
