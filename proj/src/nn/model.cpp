#include "avdoa/nn/model.hpp"

#include "avdoa/error.hpp"

namespace avdoa::nn {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Avc: return "avc";
    case ModelKind::Avaw: return "avaw";
    case ModelKind::GccOnly: return "gcc_only";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "avc") return ModelKind::Avc;
  if (name == "avaw") return ModelKind::Avaw;
  if (name == "gcc_only" || name == "gcc") return ModelKind::GccOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + name + "'");
}

Network::Network(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  require(!config_.hidden.empty(), ErrorCode::InvalidArgument, "need at least one hidden layer");
  require(config_.vis_dim % 2 == 0, ErrorCode::InvalidArgument, "visual dimension must hold two rows");
  Rng rng(seed);
  if (config_.kind == ModelKind::Avaw) {
    weight_net_.emplace_back(config_.gcc_dim + config_.vis_dim, config_.weight_hidden);
    weight_net_.emplace_back(config_.weight_hidden, 3);
  }
  std::size_t width = config_.trunk_input();
  for (std::size_t h : config_.hidden) {
    dense_.emplace_back(width, h);
    norm_.emplace_back(h);
    width = h;
  }
  dense_.emplace_back(width, config_.outputs);
  for (auto& d : weight_net_) d.init(rng);
  for (auto& d : dense_) d.init(rng);
}

Tensor Network::trunk_input(const Tensor& gcc, const Tensor& vis) const {
  require(gcc.cols() == config_.gcc_dim, ErrorCode::ShapeMismatch,
          "gcc input has " + std::to_string(gcc.cols()) + " features, expected " + std::to_string(config_.gcc_dim));
  if (config_.kind == ModelKind::GccOnly) return gcc;
  require(vis.cols() == config_.vis_dim, ErrorCode::ShapeMismatch,
          "visual input has " + std::to_string(vis.cols()) + " features, expected " +
              std::to_string(config_.vis_dim));
  return hconcat(gcc, vis);
}

Tensor Network::scale_blocks(const Tensor& input, const Tensor& weights) const {
  Tensor out = input;
  const std::size_t row = config_.vis_dim / 2;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto x = out.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) {
      const std::size_t block = c < config_.gcc_dim ? 0 : (c < config_.gcc_dim + row ? 1 : 2);
      x[c] *= weights(r, block);
    }
  }
  return out;
}

ModelOutput Network::run(const Tensor& gcc, const Tensor& vis, Mode mode, Cache* cache) {
  ModelOutput out;
  Tensor x = trunk_input(gcc, vis);
  if (cache) {
    cache->mode = mode;
    cache->input = x;
    cache->dense_in.clear();
    cache->bn.assign(norm_.size(), {});
    cache->bn_out.clear();
  }
  if (config_.kind == ModelKind::Avaw) {
    Tensor pre = weight_net_[0].forward(x);
    Tensor hidden = relu_forward(pre);
    out.weights = softmax_forward(weight_net_[1].forward(hidden));
    if (cache) {
      cache->wn_pre = std::move(pre);
      cache->wn_hidden = std::move(hidden);
      cache->weights = out.weights;
    }
    x = scale_blocks(x, out.weights);
  }
  for (std::size_t i = 0; i < norm_.size(); ++i) {
    if (cache) cache->dense_in.push_back(x);
    Tensor z = dense_[i].forward(x);
    z = norm_[i].forward(z, mode, cache ? &cache->bn[i] : nullptr);
    if (cache) cache->bn_out.push_back(z);
    x = relu_forward(z);
  }
  if (cache) cache->dense_in.push_back(x);
  out.posterior = sigmoid_forward(dense_.back().forward(x));
  require_finite(out.posterior, "network output");
  if (cache) cache->posterior = out.posterior;
  return out;
}

ModelOutput Network::run_eval(const Tensor& gcc, const Tensor& vis) const {
  ModelOutput out;
  Tensor x = trunk_input(gcc, vis);
  if (config_.kind == ModelKind::Avaw) {
    out.weights = softmax_forward(weight_net_[1].forward(relu_forward(weight_net_[0].forward(x))));
    x = scale_blocks(x, out.weights);
  }
  for (std::size_t i = 0; i < norm_.size(); ++i) x = relu_forward(norm_[i].forward_eval(dense_[i].forward(x)));
  out.posterior = sigmoid_forward(dense_.back().forward(x));
  require_finite(out.posterior, "network output");
  return out;
}

ModelOutput Network::forward(const Tensor& gcc, const Tensor& vis, Mode mode) {
  cache_.emplace();
  return run(gcc, vis, mode, &*cache_);
}

ModelOutput Network::predict(const Tensor& gcc, const Tensor& vis) const { return run_eval(gcc, vis); }

void Network::backward(const Tensor& d_posterior) {
  require(cache_.has_value(), ErrorCode::InvalidArgument, "backward() without a preceding forward()");
  Cache& c = *cache_;
  require(c.mode == Mode::Train || norm_.empty(), ErrorCode::InvalidArgument, "backward() needs a train-mode forward");
  require_same_shape(c.posterior, d_posterior, "posterior gradient");

  Tensor g = sigmoid_backward(c.posterior, d_posterior);
  g = dense_.back().backward(c.dense_in.back(), g);
  for (std::size_t i = norm_.size(); i-- > 0;) {
    g = relu_backward(c.bn_out[i], g);
    g = norm_[i].backward(c.bn[i], g);
    g = dense_[i].backward(c.dense_in[i], g);
  }

  if (config_.kind == ModelKind::Avaw) {
    // g is dL/d(scaled input); the weights enter as s_c = w_block(c) * x_c.
    const std::size_t row = config_.vis_dim / 2;
    Tensor d_weights(c.input.rows(), 3);
    for (std::size_t r = 0; r < c.input.rows(); ++r) {
      for (std::size_t col = 0; col < c.input.cols(); ++col) {
        const std::size_t block = col < config_.gcc_dim ? 0 : (col < config_.gcc_dim + row ? 1 : 2);
        d_weights(r, block) += g(r, col) * c.input(r, col);
      }
    }
    Tensor d_logits = softmax_backward(c.weights, d_weights);
    Tensor d_hidden = weight_net_[1].backward(c.wn_hidden, d_logits);
    weight_net_[0].backward(c.input, relu_backward(c.wn_pre, d_hidden));
  }
}

std::vector<ParamRef> Network::parameters() {
  std::vector<ParamRef> out;
  auto add_dense = [&](Dense& d) {
    out.push_back({d.weight.data(), d.grad_weight.data()});
    out.push_back({d.bias.data(), d.grad_bias.data()});
  };
  for (auto& d : weight_net_) add_dense(d);
  for (std::size_t i = 0; i < norm_.size(); ++i) {
    add_dense(dense_[i]);
    out.push_back({norm_[i].gamma, norm_[i].grad_gamma});
    out.push_back({norm_[i].beta, norm_[i].grad_beta});
  }
  add_dense(dense_.back());
  return out;
}

}  // namespace avdoa::nn
