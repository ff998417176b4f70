#include "poselift/network.hpp"

#include <string>

namespace poselift {

void NetworkConfig::validate() const {
  if (n_in_joints < 1 || n_out_joints < 1) {
    throw ArgumentError("NetworkConfig: joint counts must be positive");
  }
  if (hidden_dim < 1) {
    throw ArgumentError("NetworkConfig: hidden_dim must be at least 1");
  }
  if (n_blocks < 1) {
    throw ArgumentError("NetworkConfig: n_blocks must be at least 1");
  }
  if (!(keep_prob > 0.0) || keep_prob > 1.0) {
    throw ArgumentError("NetworkConfig: keep_prob must be in (0, 1]");
  }
  if (!(bn_eps > 0.0)) {
    throw ArgumentError("NetworkConfig: bn_eps must be positive");
  }
  if (bn_momentum < 0.0 || bn_momentum > 1.0) {
    throw ArgumentError("NetworkConfig: bn_momentum must be in [0, 1]");
  }
}

DenseUnit::DenseUnit(Index out_dim, Index in_dim, const NetworkConfig& cfg)
    : linear(out_dim, in_dim),
      bn(out_dim, cfg.bn_eps, cfg.bn_momentum),
      dropout(cfg.keep_prob),
      use_bn(cfg.batch_norm) {}

Matrix DenseUnit::forward(const Matrix& x, Mode mode, Rng* rng) {
  Matrix h = linear.forward(x, mode);
  if (use_bn) {
    h = bn.forward(h, mode);
  }
  h = dropout.forward(h, mode, rng);
  return relu.forward(h, mode);
}

Matrix DenseUnit::backward(const Matrix& dy) {
  Matrix d = relu.backward(dy);
  d = dropout.backward(d);
  if (use_bn) {
    d = bn.backward(d);
  }
  return linear.backward(d);
}

ResidualBlock::ResidualBlock(Index dim, const NetworkConfig& cfg)
    : first(dim, dim, cfg), second(dim, dim, cfg), skip(cfg.residual) {}

Matrix ResidualBlock::forward(const Matrix& x, Mode mode, Rng* rng) {
  Matrix f = second.forward(first.forward(x, mode, rng), mode, rng);
  if (skip) {
    f += x;
  }
  return f;
}

Matrix ResidualBlock::backward(const Matrix& dy) {
  Matrix dx = first.backward(second.backward(dy));
  if (skip) {
    dx += dy;
  }
  return dx;
}

Network::Network(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  input_ = DenseUnit(cfg_.hidden_dim, cfg_.in_dim(), cfg_);
  blocks_.reserve(static_cast<std::size_t>(cfg_.n_blocks));
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    blocks_.emplace_back(cfg_.hidden_dim, cfg_);
  }
  output_ = LinearLayer(cfg_.out_dim(), cfg_.hidden_dim);
}

Matrix Network::forward(const Matrix& x, Mode mode, Rng* rng) {
  if (x.cols() != cfg_.in_dim()) {
    throw ShapeError("Network::forward: expected " +
                     std::to_string(cfg_.in_dim()) + " input columns, got " +
                     std::to_string(x.cols()));
  }
  Matrix h = input_.forward(x, mode, rng);
  for (auto& block : blocks_) {
    h = block.forward(h, mode, rng);
  }
  forwarded_ = mode == Mode::kTrain;
  return output_.forward(h, mode);
}

Matrix Network::backward(const Matrix& d_out) {
  if (!forwarded_) {
    throw StateError("Network::backward: no cached forward pass");
  }
  Matrix d = output_.backward(d_out);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    d = it->backward(d);
  }
  return input_.backward(d);
}

void Network::zero_grad() {
  auto zero_unit = [](DenseUnit& u) {
    u.linear.zero_grad();
    u.bn.zero_grad();
  };
  zero_unit(input_);
  for (auto& block : blocks_) {
    zero_unit(block.first);
    zero_unit(block.second);
  }
  output_.zero_grad();
}

namespace {

void push_linear(std::vector<ParamRef>& out, const std::string& prefix,
                 LinearLayer& l) {
  out.push_back({prefix + ".w", l.w.data(), l.w_grad.data(), l.w.rows(),
                 l.w.cols(), true});
  out.push_back({prefix + ".b", l.b.data(), l.b_grad.data(), l.b.size(), 1,
                 false});
}

void push_bn(std::vector<ParamRef>& out, const std::string& prefix,
             BatchNormLayer& bn) {
  out.push_back({prefix + ".gamma", bn.gamma.data(), bn.gamma_grad.data(),
                 bn.gamma.size(), 1, false});
  out.push_back({prefix + ".beta", bn.beta.data(), bn.beta_grad.data(),
                 bn.beta.size(), 1, false});
}

void push_bn_running(std::vector<ParamRef>& out, const std::string& prefix,
                     BatchNormLayer& bn) {
  out.push_back({prefix + ".running_mean", bn.running_mean.data(), nullptr,
                 bn.running_mean.size(), 1, false});
  out.push_back({prefix + ".running_var", bn.running_var.data(), nullptr,
                 bn.running_var.size(), 1, false});
}

}  // namespace

std::vector<ParamRef> Network::params() {
  std::vector<ParamRef> out;
  auto push_unit = [&](const std::string& prefix, DenseUnit& u) {
    push_linear(out, prefix + ".linear", u.linear);
    if (u.use_bn) {
      push_bn(out, prefix + ".bn", u.bn);
    }
  };
  push_unit("input", input_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "block" + std::to_string(i);
    push_unit(prefix + ".first", blocks_[i].first);
    push_unit(prefix + ".second", blocks_[i].second);
  }
  push_linear(out, "output", output_);
  return out;
}

std::vector<ParamRef> Network::state_tensors() {
  std::vector<ParamRef> out = params();
  if (cfg_.batch_norm) {
    push_bn_running(out, "input.bn", input_.bn);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const std::string prefix = "block" + std::to_string(i);
      push_bn_running(out, prefix + ".first.bn", blocks_[i].first.bn);
      push_bn_running(out, prefix + ".second.bn", blocks_[i].second.bn);
    }
  }
  return out;
}

std::int64_t Network::param_count() const {
  auto unit_count = [](const DenseUnit& u) {
    std::int64_t n = u.linear.w.size() + u.linear.b.size();
    if (u.use_bn) {
      n += u.bn.gamma.size() + u.bn.beta.size();
    }
    return n;
  };
  std::int64_t total = unit_count(input_);
  for (const auto& block : blocks_) {
    total += unit_count(block.first) + unit_count(block.second);
  }
  return total + output_.w.size() + output_.b.size();
}

int Network::linear_layer_count() const {
  return 2 + 2 * cfg_.n_blocks;
}

std::vector<LinearLayer*> Network::linear_layers() {
  std::vector<LinearLayer*> out;
  out.push_back(&input_.linear);
  for (auto& block : blocks_) {
    out.push_back(&block.first.linear);
    out.push_back(&block.second.linear);
  }
  out.push_back(&output_);
  return out;
}

}  // namespace poselift
