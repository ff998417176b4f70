#include "poselift/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "poselift/layers.hpp"
#include "poselift/network.hpp"
#include "poselift/optim.hpp"

namespace poselift {

namespace {

// One differentiable buffer: the values to perturb and the analytic
// gradient to compare against.
struct Slot {
  double* value;
  const double* grad;
  Index size;
};

double rel_err(double analytic, double numeric) {
  const double denom =
      std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
  return std::abs(analytic - numeric) / denom;
}

// Central differences of `loss` over every slot element against the
// stored analytic gradients. `loss` must be a pure function of the slot
// values (stochastic pieces frozen by the caller).
double max_rel_err(const std::vector<Slot>& slots,
                   const std::function<double()>& loss) {
  double worst = 0.0;
  for (const auto& slot : slots) {
    for (Index i = 0; i < slot.size; ++i) {
      const double saved = slot.value[i];
      slot.value[i] = saved + kGradCheckStep;
      const double up = loss();
      slot.value[i] = saved - kGradCheckStep;
      const double down = loss();
      slot.value[i] = saved;
      const double numeric = (up - down) / (2.0 * kGradCheckStep);
      worst = std::max(worst, rel_err(slot.grad[i], numeric));
    }
  }
  return worst;
}

// The scalar objective for isolated layers: sum(output .* weight) with a
// fixed random weighting, whose output-gradient is simply the weighting.
struct WeightedSum {
  Matrix g;
  double operator()(const Matrix& y) const { return (y.array() * g.array()).sum(); }
};

GradCheckEntry check_linear(Rng& rng) {
  const Index batch = 5, in = 7, out = 6;
  LinearLayer layer(out, in);
  layer.w = rng.gauss_matrix(out, in, 0.0, 1.0);
  layer.b = rng.gauss_matrix(out, 1, 0.0, 1.0);
  Matrix x = rng.gauss_matrix(batch, in, 0.0, 1.0);
  const WeightedSum obj{rng.gauss_matrix(batch, out, 0.0, 1.0)};

  layer.zero_grad();
  layer.forward(x, Mode::kTrain);
  Matrix dx = layer.backward(obj.g);
  // Eval-mode forward computes the same map without disturbing the caches
  // the analytic pass left behind.
  auto loss = [&] { return obj(layer.forward(x, Mode::kEval)); };
  const std::vector<Slot> slots = {
      {layer.w.data(), layer.w_grad.data(), layer.w.size()},
      {layer.b.data(), layer.b_grad.data(), layer.b.size()},
      {x.data(), dx.data(), x.size()},
  };
  return {"linear", max_rel_err(slots, loss)};
}

GradCheckEntry check_batch_norm(Rng& rng, bool frozen) {
  const Index batch = 6, dim = 5;
  BatchNormLayer layer(dim);
  layer.gamma = rng.gauss_matrix(dim, 1, 1.0, 0.3);
  layer.beta = rng.gauss_matrix(dim, 1, 0.0, 0.5);
  layer.frozen_stats = frozen;
  if (frozen) {
    layer.running_mean = rng.gauss_matrix(dim, 1, 0.0, 1.0);
    layer.running_var =
        rng.gauss_matrix(dim, 1, 1.0, 0.2).cwiseAbs().array() + 0.5;
  }
  Matrix x = rng.gauss_matrix(batch, dim, 0.0, 1.5);
  const WeightedSum obj{rng.gauss_matrix(batch, dim, 0.0, 1.0)};

  layer.zero_grad();
  layer.forward(x, Mode::kTrain);
  Matrix dx = layer.backward(obj.g);
  // The probes run on a throwaway copy so the running-statistic updates of
  // repeated train-mode forwards never leak into `layer`.
  auto loss = [&] {
    BatchNormLayer probe = layer;
    return obj(probe.forward(x, Mode::kTrain));
  };
  const std::vector<Slot> slots = {
      {layer.gamma.data(), layer.gamma_grad.data(), layer.gamma.size()},
      {layer.beta.data(), layer.beta_grad.data(), layer.beta.size()},
      {x.data(), dx.data(), x.size()},
  };
  return {frozen ? "batch_norm_frozen" : "batch_norm",
          max_rel_err(slots, loss)};
}

GradCheckEntry check_dropout(Rng& rng) {
  const Index batch = 5, dim = 8;
  DropoutLayer layer(0.6);
  Matrix x = rng.gauss_matrix(batch, dim, 0.0, 1.0);
  const WeightedSum obj{rng.gauss_matrix(batch, dim, 0.0, 1.0)};

  layer.forward(x, Mode::kTrain, &rng);  // sample a mask...
  layer.mask_frozen = true;              // ...then pin it
  layer.forward(x, Mode::kTrain, nullptr);
  Matrix dx = layer.backward(obj.g);
  auto loss = [&] { return obj(layer.forward(x, Mode::kTrain, nullptr)); };
  const std::vector<Slot> slots = {{x.data(), dx.data(), x.size()}};
  return {"dropout", max_rel_err(slots, loss)};
}

GradCheckEntry check_relu(Rng& rng) {
  const Index batch = 5, dim = 8;
  ReluLayer layer;
  // Keep inputs clear of the kink at zero so the central difference never
  // straddles it.
  Matrix x = rng.gauss_matrix(batch, dim, 0.0, 1.0);
  for (Index i = 0; i < x.size(); ++i) {
    double& v = x.data()[i];
    if (std::abs(v) < 0.05) v = v < 0.0 ? v - 0.05 : v + 0.05;
  }
  const WeightedSum obj{rng.gauss_matrix(batch, dim, 0.0, 1.0)};

  layer.forward(x, Mode::kTrain);
  Matrix dx = layer.backward(obj.g);
  auto loss = [&] { return obj(layer.forward(x, Mode::kEval)); };
  const std::vector<Slot> slots = {{x.data(), dx.data(), x.size()}};
  return {"relu", max_rel_err(slots, loss)};
}

GradCheckEntry check_composed(Rng& rng) {
  NetworkConfig cfg;
  cfg.n_in_joints = 2;   // in_dim 4
  cfg.n_out_joints = 2;  // out_dim 6
  cfg.hidden_dim = 8;
  cfg.n_blocks = 1;
  cfg.keep_prob = 0.7;
  Network net(cfg);
  Rng init_rng = rng.fork(1);
  init_network(net, init_rng);

  const Index batch = 4;
  Matrix x = rng.gauss_matrix(batch, cfg.in_dim(), 0.0, 1.0);
  const Matrix target = rng.gauss_matrix(batch, cfg.out_dim(), 0.0, 1.0);

  // Warm the running statistics away from their construction values, then
  // freeze them and the dropout masks: the loss becomes a deterministic
  // function of parameters and input.
  Rng warm_rng = rng.fork(2);
  for (int i = 0; i < 3; ++i) {
    net.forward(rng.gauss_matrix(batch, cfg.in_dim(), 0.0, 1.0),
                Mode::kTrain, &warm_rng);
  }
  net.forward(x, Mode::kTrain, &warm_rng);  // sample masks at x's shape
  auto freeze_unit = [](DenseUnit& u) {
    u.bn.frozen_stats = true;
    u.dropout.mask_frozen = true;
  };
  freeze_unit(net.input_unit());
  for (auto& block : net.blocks()) {
    freeze_unit(block.first);
    freeze_unit(block.second);
  }

  net.zero_grad();
  const Matrix pred = net.forward(x, Mode::kTrain, nullptr);
  Matrix dx = net.backward(mse_gradient(pred, target));

  auto loss = [&] {
    return mse(net.forward(x, Mode::kTrain, nullptr), target);
  };
  std::vector<Slot> slots;
  for (const auto& ref : net.params()) {
    slots.push_back({ref.value, ref.grad, ref.size()});
  }
  slots.push_back({x.data(), dx.data(), x.size()});
  return {"composed", max_rel_err(slots, loss)};
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckEntry> entries;
  Rng r1 = rng.fork(11);
  entries.push_back(check_linear(r1));
  Rng r2 = rng.fork(12);
  entries.push_back(check_batch_norm(r2, /*frozen=*/false));
  Rng r3 = rng.fork(13);
  entries.push_back(check_batch_norm(r3, /*frozen=*/true));
  Rng r4 = rng.fork(14);
  entries.push_back(check_dropout(r4));
  Rng r5 = rng.fork(15);
  entries.push_back(check_relu(r5));
  Rng r6 = rng.fork(16);
  entries.push_back(check_composed(r6));
  return entries;
}

bool gradcheck_passed(const std::vector<GradCheckEntry>& entries) {
  for (const auto& e : entries) {
    if (!(e.max_rel_err < kGradCheckTol)) return false;
  }
  return true;
}

}  // namespace poselift
