#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "poselift/data.hpp"
#include "poselift/network.hpp"

namespace poselift {

struct TrainConfig {
  double lr0 = 0.001;
  double decay_factor = 0.96;
  std::int64_t decay_steps = 100000;  // optimizer steps per decay period
  Index batch_size = 64;
  std::int64_t epochs = 200;
  double max_norm_cap = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Weights ~ N(0, sqrt(2/fan_in)), biases zero. Draws row-major from `rng`.
void kaiming_init(Rng& rng, LinearLayer& layer);

// Kaiming over every linear layer, input to output. Batch-norm layers
// keep their construction state (gamma 1, beta 0, fresh running stats).
void init_network(Network& net, Rng& rng);

// Continuously decayed rate: lr0 * decay_factor^(step / decay_steps).
double lr_at(const TrainConfig& cfg, std::int64_t step);

// Bias-corrected Adam over a fixed parameter list. Moment buffers are laid
// out at construction; step() must be fed the same list (same order and
// shapes) every time.
class AdamState {
 public:
  explicit AdamState(const std::vector<ParamRef>& params, double beta1 = 0.9,
                     double beta2 = 0.999, double eps = 1e-8);

  void step(const std::vector<ParamRef>& params, double lr);

  std::int64_t t() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Eigen::ArrayXd> m_, v_;
};

// Rescales every weight row whose L2 norm exceeds the cap down to the cap;
// rows within the cap are untouched bit-for-bit (a relative slack of 1e-11
// on the comparison keeps re-projection a no-op). Biases and batch-norm
// parameters are exempt by design: the constraint regularizes fan-in
// weight vectors.
void maxnorm_project(LinearLayer& layer, double cap);
void maxnorm_project_all(Network& net, double cap);

// Mean squared error over every element (batch x coordinates), and its
// gradient 2 (pred - target) / (batch * coords).
double mse(const Matrix& pred, const Matrix& target);
Matrix mse_gradient(const Matrix& pred, const Matrix& target);

struct TrainHooks {
  // After each optimizer step (post max-norm projection).
  std::function<void(std::int64_t step, double lr, double loss, Network& net)>
      on_step;
  // After each full pass over the data.
  std::function<void(std::int64_t epoch, Network& net)> on_epoch_end;
};

struct TrainResult {
  std::vector<double> loss_history;  // one entry per optimizer step
  std::int64_t steps = 0;
};

// The training loop over normalized (2d, 3d) pairs: per epoch a fresh
// shuffle into minibatches, per batch forward (train mode) → MSE →
// backward → Adam (decayed lr) → max-norm projection. Shuffling and
// dropout run on independent streams forked from cfg.seed, so the batch
// order never depends on how much randomness dropout consumed. If
// `loss_log` is given, one "step lr loss" line per step is written with
// round-trip-exact number formatting. A non-finite loss aborts with
// NumericError; the caller owns whatever checkpointing should happen then.
TrainResult train(Network& net, const PairSet& pairs, const TrainConfig& cfg,
                  std::ostream* loss_log = nullptr,
                  const TrainHooks& hooks = {});

struct FitResult {
  Network net;
  NormStats stats;
  PreprocessOptions preprocess;
  TrainResult train;
  // A non-finite loss stops training but still hands the partial state
  // back, so the caller can persist a flagged checkpoint before failing.
  bool aborted = false;
  std::string abort_reason;
};

// The one train-from-scratch recipe: preprocess the training split, fit
// normalization statistics on it, Kaiming-initialize from the seed, run
// the training loop. The training command and the ablation harness both
// call this, so a "same seed" claim means the same thing everywhere.
FitResult fit(const Dataset& train_ds, const NetworkConfig& ncfg,
              const TrainConfig& tcfg, bool camera_frame = true,
              std::ostream* loss_log = nullptr, const TrainHooks& hooks = {});

}  // namespace poselift
