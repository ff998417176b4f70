#pragma once

#include "poselift/numerics.hpp"

namespace poselift {

enum class Mode { kTrain, kEval };

// Layer caching discipline: train-mode forward stores whatever backward
// needs; eval-mode forward leaves the layer untouched, so a frozen network
// may serve concurrent eval passes. backward after an eval-only forward is
// a StateError.

// Fully connected layer, y = x * w^T + b. Weights are stored out x in so
// each row is the incoming-weight vector of one output unit (the unit the
// max-norm constraint applies to). Gradients accumulate across backward
// calls until zero_grad().
struct LinearLayer {
  Matrix w;  // out x in
  Vector b;  // out
  Matrix w_grad;
  Vector b_grad;

  LinearLayer() = default;
  LinearLayer(Index out_dim, Index in_dim);

  Index in_dim() const { return w.cols(); }
  Index out_dim() const { return w.rows(); }

  Matrix forward(const Matrix& x, Mode mode);
  Matrix backward(const Matrix& dy);
  void zero_grad();

  Matrix x_cache;
  bool has_cache = false;
};

// Per-feature batch normalization over the batch dimension. Train mode
// normalizes by batch statistics (biased variance) and folds them into the
// running estimates; eval mode normalizes by the running estimates alone
// and caches nothing. Setting frozen_stats makes train mode normalize by
// the running estimates too, treated as constants in backward — that is
// how the composed network is gradient-checked without the batch-coupling
// terms of live statistics.
struct BatchNormLayer {
  Vector gamma, beta;
  Vector running_mean, running_var;
  Vector gamma_grad, beta_grad;
  double eps = 1e-5;
  double momentum = 0.1;  // weight of the newest batch statistic
  bool frozen_stats = false;

  BatchNormLayer() = default;
  explicit BatchNormLayer(Index dim, double eps = 1e-5, double momentum = 0.1);

  Index dim() const { return gamma.size(); }

  Matrix forward(const Matrix& x, Mode mode);
  Matrix backward(const Matrix& dy);
  void zero_grad();

  Matrix xhat_cache;
  Vector inv_std_cache;
  bool batch_stats_cache = false;  // backward formula selector
  bool has_cache = false;
};

// Inverted dropout: train mode zeroes each activation with probability
// 1 - keep_prob and scales survivors by 1/keep_prob, so eval mode is the
// identity. Masks are sampled in row-major element order. Tests may pin
// `mask` and set mask_frozen to bypass sampling.
struct DropoutLayer {
  double keep_prob = 1.0;
  Matrix mask;  // entries in {0, 1/keep_prob}
  bool mask_frozen = false;

  DropoutLayer() = default;
  explicit DropoutLayer(double keep_prob);

  Matrix forward(const Matrix& x, Mode mode, Rng* rng);
  Matrix backward(const Matrix& dy);

  bool passthrough_cache = true;
  bool has_cache = false;
};

struct ReluLayer {
  Matrix forward(const Matrix& x, Mode mode);
  Matrix backward(const Matrix& dy);

  Matrix positive_cache;  // 1 where the input was > 0
  bool has_cache = false;
};

}  // namespace poselift
