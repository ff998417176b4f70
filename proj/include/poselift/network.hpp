#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/layers.hpp"

namespace poselift {

struct NetworkConfig {
  int n_in_joints = 16;   // 2d joints fed to the network
  int n_out_joints = 16;  // 3d joints predicted (root excluded)
  int hidden_dim = 1024;
  int n_blocks = 2;
  double keep_prob = 0.5;
  bool batch_norm = true;
  bool residual = true;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  Index in_dim() const { return 2 * static_cast<Index>(n_in_joints); }
  Index out_dim() const { return 3 * static_cast<Index>(n_out_joints); }
  void validate() const;
};

// Named view of one parameter tensor and its gradient buffer. Running
// statistics are exposed with grad == nullptr. Data is row-major.
struct ParamRef {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  Index rows = 0;
  Index cols = 1;
  bool weight_matrix = false;  // rows are fan-in vectors (max-norm target)

  Index size() const { return rows * cols; }
};

// Linear -> batch norm -> dropout -> RELU.
struct DenseUnit {
  LinearLayer linear;
  BatchNormLayer bn;
  DropoutLayer dropout;
  ReluLayer relu;
  bool use_bn = true;

  DenseUnit() = default;
  DenseUnit(Index out_dim, Index in_dim, const NetworkConfig& cfg);

  Matrix forward(const Matrix& x, Mode mode, Rng* rng);
  Matrix backward(const Matrix& dy);
};

// Two dense units wrapped in an identity skip: y = x + f(x).
// With `skip` false the units are simply chained.
struct ResidualBlock {
  DenseUnit first;
  DenseUnit second;
  bool skip = true;

  ResidualBlock() = default;
  ResidualBlock(Index dim, const NetworkConfig& cfg);

  Matrix forward(const Matrix& x, Mode mode, Rng* rng);
  Matrix backward(const Matrix& dy);
};

// The lifting network: an input unit taking the flattened 2d pose to
// hidden_dim, n_blocks residual blocks, and a bare linear output layer
// producing the flattened root-excluded 3d pose.
class Network {
 public:
  explicit Network(const NetworkConfig& cfg);

  const NetworkConfig& config() const { return cfg_; }

  // x is batch x (2 * n_in_joints). Train mode needs an Rng when any
  // dropout layer actually samples (keep_prob < 1 and not frozen).
  Matrix forward(const Matrix& x, Mode mode, Rng* rng = nullptr);

  // Accumulates parameter gradients from d(loss)/d(output); returns
  // d(loss)/d(input). Requires a cached forward pass.
  Matrix backward(const Matrix& d_out);

  void zero_grad();

  // Stable, named enumeration of trainable parameters.
  std::vector<ParamRef> params();
  // Parameters plus batch-norm running statistics, for checkpointing.
  std::vector<ParamRef> state_tensors();

  std::int64_t param_count() const;
  int linear_layer_count() const;
  std::vector<LinearLayer*> linear_layers();

  DenseUnit& input_unit() { return input_; }
  std::vector<ResidualBlock>& blocks() { return blocks_; }
  LinearLayer& output_layer() { return output_; }

 private:
  NetworkConfig cfg_;
  DenseUnit input_;
  std::vector<ResidualBlock> blocks_;
  LinearLayer output_;
  bool forwarded_ = false;
};

}  // namespace poselift
