#include "poselift/optim.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "poselift/textio.hpp"

namespace poselift {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) {
    throw ArgumentError("TrainConfig: lr0 must be positive");
  }
  if (!(decay_factor > 0.0) || decay_factor > 1.0) {
    throw ArgumentError("TrainConfig: decay_factor must be in (0, 1]");
  }
  if (decay_steps < 1) {
    throw ArgumentError("TrainConfig: decay_steps must be at least 1");
  }
  if (batch_size < 2) {
    throw ArgumentError("TrainConfig: batch_size must be at least 2");
  }
  if (epochs < 1) {
    throw ArgumentError("TrainConfig: epochs must be at least 1");
  }
  if (!(max_norm_cap > 0.0)) {
    throw ArgumentError("TrainConfig: max_norm_cap must be positive");
  }
}

void kaiming_init(Rng& rng, LinearLayer& layer) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(layer.in_dim()));
  layer.w = rng.gauss_matrix(layer.out_dim(), layer.in_dim(), 0.0, stddev);
  layer.b.setZero();
}

void init_network(Network& net, Rng& rng) {
  for (LinearLayer* layer : net.linear_layers()) {
    kaiming_init(rng, *layer);
  }
}

double lr_at(const TrainConfig& cfg, std::int64_t step) {
  if (step < 0) {
    throw ArgumentError("lr_at: step must be nonnegative");
  }
  const double periods =
      static_cast<double>(step) / static_cast<double>(cfg.decay_steps);
  return cfg.lr0 * std::pow(cfg.decay_factor, periods);
}

AdamState::AdamState(const std::vector<ParamRef>& params, double beta1,
                     double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    if (p.grad == nullptr) {
      throw ArgumentError("AdamState: parameter '" + p.name +
                          "' has no gradient buffer");
    }
    m_.push_back(Eigen::ArrayXd::Zero(p.size()));
    v_.push_back(Eigen::ArrayXd::Zero(p.size()));
  }
}

void AdamState::step(const std::vector<ParamRef>& params, double lr) {
  if (!(lr > 0.0)) {
    throw ArgumentError("AdamState::step: lr must be positive");
  }
  if (params.size() != m_.size()) {
    throw ShapeError("AdamState::step: parameter list size changed");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& ref = params[k];
    if (ref.size() != m_[k].size()) {
      throw ShapeError("AdamState::step: parameter '" + ref.name +
                       "' changed shape");
    }
    Eigen::Map<Eigen::ArrayXd> p(ref.value, ref.size());
    Eigen::Map<const Eigen::ArrayXd> g(ref.grad, ref.size());
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g.square();
    p -= lr * (m_[k] / bc1) / ((v_[k] / bc2).sqrt() + eps_);
  }
}

void maxnorm_project(LinearLayer& layer, double cap) {
  if (!(cap > 0.0)) {
    throw ArgumentError("maxnorm_project: cap must be positive");
  }
  // The slack keeps projection idempotent: a freshly rescaled row lands
  // within a few ulps of the cap and must not be rescaled again.
  const double threshold = cap * (1.0 + 1e-11);
  for (Index i = 0; i < layer.w.rows(); ++i) {
    const double norm = layer.w.row(i).norm();
    if (norm > threshold) {
      layer.w.row(i) *= cap / norm;
    }
  }
}

void maxnorm_project_all(Network& net, double cap) {
  for (LinearLayer* layer : net.linear_layers()) {
    maxnorm_project(*layer, cap);
  }
}

double mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse: prediction and target shapes differ");
  }
  return (pred - target).array().square().mean();
}

Matrix mse_gradient(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse_gradient: prediction and target shapes differ");
  }
  return (2.0 / static_cast<double>(pred.size())) * (pred - target);
}

TrainResult train(Network& net, const PairSet& pairs, const TrainConfig& cfg,
                  std::ostream* loss_log, const TrainHooks& hooks) {
  cfg.validate();
  if (pairs.x2d.rows() == 0) {
    throw ArgumentError("train: no training pairs");
  }
  if (pairs.x2d.rows() != pairs.y3d.rows()) {
    throw ShapeError("train: 2d and 3d pair counts differ");
  }
  if (pairs.x2d.cols() != net.config().in_dim()) {
    throw ShapeError("train: pair width " + std::to_string(pairs.x2d.cols()) +
                     " does not match network input " +
                     std::to_string(net.config().in_dim()));
  }
  if (pairs.y3d.cols() != net.config().out_dim()) {
    throw ShapeError("train: target width " +
                     std::to_string(pairs.y3d.cols()) +
                     " does not match network output " +
                     std::to_string(net.config().out_dim()));
  }

  Rng root(cfg.seed);
  Rng shuffle_rng = root.fork(1);
  Rng dropout_rng = root.fork(2);

  AdamState adam(net.params());
  TrainResult result;
  result.loss_history.reserve(
      static_cast<std::size_t>(cfg.epochs) *
      static_cast<std::size_t>(
          (pairs.x2d.rows() + cfg.batch_size - 1) / cfg.batch_size));

  std::int64_t step = 0;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches =
        batch_indices(pairs.x2d.rows(), cfg.batch_size, shuffle_rng);
    for (const auto& rows : batches) {
      const Matrix x = take_rows(pairs.x2d, rows);
      const Matrix y = take_rows(pairs.y3d, rows);

      net.zero_grad();
      const Matrix pred = net.forward(x, Mode::kTrain, &dropout_rng);
      const double loss = mse(pred, y);
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at step " +
                           std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + ")");
      }
      net.backward(mse_gradient(pred, y));

      const double lr = lr_at(cfg, step);
      adam.step(net.params(), lr);
      maxnorm_project_all(net, cfg.max_norm_cap);

      if (loss_log != nullptr) {
        *loss_log << format_int(step) << " " << format_double(lr) << " "
                  << format_double(loss) << "\n";
      }
      result.loss_history.push_back(loss);
      if (hooks.on_step) {
        hooks.on_step(step, lr, loss, net);
      }
      ++step;
    }
    if (hooks.on_epoch_end) {
      hooks.on_epoch_end(epoch, net);
    }
  }
  result.steps = step;
  return result;
}

FitResult fit(const Dataset& train_ds, const NetworkConfig& ncfg,
              const TrainConfig& tcfg, bool camera_frame,
              std::ostream* loss_log, const TrainHooks& hooks) {
  ncfg.validate();
  tcfg.validate();
  const auto& sk = train_ds.skeleton;
  if (static_cast<Index>(ncfg.n_in_joints) != sk.n_input_joints() ||
      static_cast<Index>(ncfg.n_out_joints) != sk.n_output_joints()) {
    throw ArgumentError(
        "fit: network is configured for " +
        std::to_string(ncfg.n_in_joints) + " input / " +
        std::to_string(ncfg.n_out_joints) + " output joints, skeleton has " +
        std::to_string(sk.n_input_joints()) + " / " +
        std::to_string(sk.n_output_joints()));
  }

  const PairSet raw = build_pairs(train_ds, {camera_frame});
  NormStats stats = fit_stats(raw.x2d, raw.y3d);
  PairSet norm;
  norm.x2d = normalize(raw.x2d, stats.mean2d, stats.std2d);
  norm.y3d = normalize(raw.y3d, stats.mean3d, stats.std3d);

  Network net(ncfg);
  Rng init_rng = Rng(tcfg.seed).fork(0);
  init_network(net, init_rng);
  FitResult result{std::move(net), std::move(stats), {camera_frame}, {}};
  try {
    result.train = train(result.net, norm, tcfg, loss_log, hooks);
  } catch (const NumericError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }
  return result;
}

}  // namespace poselift
