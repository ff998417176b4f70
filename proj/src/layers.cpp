#include "poselift/layers.hpp"

#include <string>

namespace poselift {

namespace {

void check_width(Index got, Index want, const char* who) {
  if (got != want) {
    throw ShapeError(std::string(who) + ": expected " + std::to_string(want) +
                     " columns, got " + std::to_string(got));
  }
}

}  // namespace

LinearLayer::LinearLayer(Index out_dim, Index in_dim)
    : w(Matrix::Zero(out_dim, in_dim)),
      b(Vector::Zero(out_dim)),
      w_grad(Matrix::Zero(out_dim, in_dim)),
      b_grad(Vector::Zero(out_dim)) {}

Matrix LinearLayer::forward(const Matrix& x, Mode mode) {
  check_width(x.cols(), in_dim(), "LinearLayer::forward");
  if (mode == Mode::kTrain) {
    x_cache = x;
    has_cache = true;
  }
  Matrix y(x.rows(), out_dim());
  y.noalias() = x * w.transpose();
  y.rowwise() += b.transpose();
  return y;
}

Matrix LinearLayer::backward(const Matrix& dy) {
  if (!has_cache) {
    throw StateError("LinearLayer::backward: no cached train-mode forward");
  }
  check_width(dy.cols(), out_dim(), "LinearLayer::backward");
  if (dy.rows() != x_cache.rows()) {
    throw ShapeError("LinearLayer::backward: batch size mismatch");
  }
  w_grad.noalias() += dy.transpose() * x_cache;
  b_grad.noalias() += dy.colwise().sum().transpose();
  Matrix dx(dy.rows(), in_dim());
  dx.noalias() = dy * w;
  return dx;
}

void LinearLayer::zero_grad() {
  w_grad.setZero();
  b_grad.setZero();
}

BatchNormLayer::BatchNormLayer(Index dim, double eps, double momentum)
    : gamma(Vector::Ones(dim)),
      beta(Vector::Zero(dim)),
      running_mean(Vector::Zero(dim)),
      running_var(Vector::Ones(dim)),
      gamma_grad(Vector::Zero(dim)),
      beta_grad(Vector::Zero(dim)),
      eps(eps),
      momentum(momentum) {}

Matrix BatchNormLayer::forward(const Matrix& x, Mode mode) {
  check_width(x.cols(), dim(), "BatchNormLayer::forward");
  Vector mean, inv_std;
  if (mode == Mode::kTrain && !frozen_stats) {
    const Index batch = x.rows();
    if (batch < 2) {
      throw ArgumentError(
          "BatchNormLayer::forward: train mode needs a batch of at least 2, "
          "got " +
          std::to_string(batch));
    }
    mean = x.colwise().mean().transpose();
    const Vector var =
        ((x.rowwise() - mean.transpose()).array().square().colwise().sum() /
         static_cast<double>(batch))
            .transpose();
    inv_std = (var.array() + eps).rsqrt();
    // Running stats track the unbiased variance estimate.
    const double unbias =
        static_cast<double>(batch) / static_cast<double>(batch - 1);
    running_mean = (1.0 - momentum) * running_mean + momentum * mean;
    running_var = (1.0 - momentum) * running_var + momentum * unbias * var;
  } else {
    mean = running_mean;
    inv_std = (running_var.array() + eps).rsqrt();
  }
  Matrix xhat = (x.rowwise() - mean.transpose()).array().rowwise() *
                inv_std.transpose().array();
  Matrix y = xhat.array().rowwise() * gamma.transpose().array();
  y.rowwise() += beta.transpose();
  if (mode == Mode::kTrain) {
    batch_stats_cache = !frozen_stats;
    inv_std_cache = std::move(inv_std);
    xhat_cache = std::move(xhat);
    has_cache = true;
  }
  return y;
}

Matrix BatchNormLayer::backward(const Matrix& dy) {
  if (!has_cache) {
    throw StateError("BatchNormLayer::backward: no cached train-mode forward");
  }
  check_width(dy.cols(), dim(), "BatchNormLayer::backward");
  if (dy.rows() != xhat_cache.rows()) {
    throw ShapeError("BatchNormLayer::backward: batch size mismatch");
  }
  gamma_grad.noalias() +=
      (dy.array() * xhat_cache.array()).colwise().sum().matrix().transpose();
  beta_grad.noalias() += dy.colwise().sum().transpose();

  const Matrix dxhat = dy.array().rowwise() * gamma.transpose().array();
  if (!batch_stats_cache) {
    // Frozen statistics are constants; the map is affine per feature.
    return dxhat.array().rowwise() * inv_std_cache.transpose().array();
  }
  const double batch = static_cast<double>(dy.rows());
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dxhat_xhat =
      (dxhat.array() * xhat_cache.array()).colwise().sum();
  Matrix dx = batch * dxhat;
  dx.rowwise() -= sum_dxhat;
  dx.array() -= xhat_cache.array().rowwise() * sum_dxhat_xhat.array();
  dx.array().rowwise() *= (inv_std_cache / batch).transpose().array();
  return dx;
}

void BatchNormLayer::zero_grad() {
  gamma_grad.setZero();
  beta_grad.setZero();
}

DropoutLayer::DropoutLayer(double keep_prob) : keep_prob(keep_prob) {
  if (!(keep_prob > 0.0) || keep_prob > 1.0) {
    throw ArgumentError("DropoutLayer: keep_prob must be in (0, 1], got " +
                        std::to_string(keep_prob));
  }
}

Matrix DropoutLayer::forward(const Matrix& x, Mode mode, Rng* rng) {
  if (mode == Mode::kEval) {
    return x;
  }
  has_cache = true;
  if (keep_prob == 1.0 && !mask_frozen) {
    passthrough_cache = true;
    return x;
  }
  if (!mask_frozen) {
    if (rng == nullptr) {
      throw StateError("DropoutLayer::forward: train mode needs an Rng");
    }
    mask.resize(x.rows(), x.cols());
    const double scale = 1.0 / keep_prob;
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) {
        mask(i, j) = rng->uniform() < keep_prob ? scale : 0.0;
      }
    }
  } else if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw ShapeError("DropoutLayer::forward: frozen mask shape mismatch");
  }
  passthrough_cache = false;
  return x.array() * mask.array();
}

Matrix DropoutLayer::backward(const Matrix& dy) {
  if (!has_cache) {
    throw StateError("DropoutLayer::backward: no cached train-mode forward");
  }
  if (passthrough_cache) {
    return dy;
  }
  if (dy.rows() != mask.rows() || dy.cols() != mask.cols()) {
    throw ShapeError("DropoutLayer::backward: shape mismatch");
  }
  return dy.array() * mask.array();
}

Matrix ReluLayer::forward(const Matrix& x, Mode mode) {
  if (mode == Mode::kTrain) {
    positive_cache = (x.array() > 0.0).cast<double>();
    has_cache = true;
  }
  return x.cwiseMax(0.0);
}

Matrix ReluLayer::backward(const Matrix& dy) {
  if (!has_cache) {
    throw StateError("ReluLayer::backward: no cached train-mode forward");
  }
  if (dy.rows() != positive_cache.rows() ||
      dy.cols() != positive_cache.cols()) {
    throw ShapeError("ReluLayer::backward: shape mismatch");
  }
  return dy.array() * positive_cache.array();
}

}  // namespace poselift
