#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "poselift/data.hpp"
#include "poselift/network.hpp"
#include "poselift/optim.hpp"
#include "poselift/textio.hpp"

using namespace poselift;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.n_in_joints = 2;
  cfg.n_out_joints = 2;
  cfg.hidden_dim = 8;
  cfg.n_blocks = 1;
  cfg.keep_prob = 0.8;
  return cfg;
}

PairSet random_pairs(Index n, Index in_cols, Index out_cols,
                     std::uint64_t seed) {
  Rng rng(seed);
  PairSet p;
  p.x2d = rng.gauss_matrix(n, in_cols, 0.0, 1.0);
  p.y3d = rng.gauss_matrix(n, out_cols, 0.0, 1.0);
  return p;
}

}  // namespace

TEST_CASE("learning rate decays continuously") {
  TrainConfig cfg;  // lr0 1e-3, factor 0.96 per 100000 steps
  CHECK(lr_at(cfg, 0) == 0.001);
  CHECK(lr_at(cfg, 100000) == doctest::Approx(0.00096).epsilon(1e-12));
  CHECK(lr_at(cfg, 200000) ==
        doctest::Approx(0.001 * 0.96 * 0.96).epsilon(1e-12));
  // Halfway through a period: factor^(1/2), not a step function.
  CHECK(lr_at(cfg, 50000) ==
        doctest::Approx(0.0009797958971132711).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(cfg, -1), ArgumentError);
}

TEST_CASE("adam's first step matches the hand-computed update") {
  Matrix w(1, 1);
  w << 1.0;
  Matrix g(1, 1);
  g << 0.5;
  std::vector<ParamRef> params{
      {"w", w.data(), g.data(), 1, 1, true}};
  AdamState adam(params);
  adam.step(params, 0.1);
  // m-hat = g, v-hat = g^2, so the update is lr * g / (|g| + eps).
  CHECK(w(0, 0) == doctest::Approx(0.900000002).epsilon(1e-12));
  CHECK(adam.t() == 1);
}

TEST_CASE("adam tracks an independent reference over several steps") {
  // Two parameters, synthetic gradient schedule, reference loop computed
  // with the same update equations written out longhand.
  Matrix w(1, 2);
  w << 0.3, -0.7;
  Matrix g(1, 2);
  std::vector<ParamRef> params{{"w", w.data(), g.data(), 1, 2, true}};
  AdamState adam(params);

  double rw[2] = {0.3, -0.7};
  double m[2] = {0, 0}, v[2] = {0, 0};
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.01;
  for (int t = 1; t <= 7; ++t) {
    const double grads[2] = {std::sin(0.3 * t), std::cos(0.2 * t)};
    g << grads[0], grads[1];
    adam.step(params, lr);
    for (int k = 0; k < 2; ++k) {
      m[k] = b1 * m[k] + (1 - b1) * grads[k];
      v[k] = b2 * v[k] + (1 - b2) * grads[k] * grads[k];
      const double mh = m[k] / (1 - std::pow(b1, t));
      const double vh = v[k] / (1 - std::pow(b2, t));
      rw[k] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
  CHECK(w(0, 0) == doctest::Approx(rw[0]).epsilon(1e-14));
  CHECK(w(0, 1) == doctest::Approx(rw[1]).epsilon(1e-14));
}

TEST_CASE("adam validates its inputs") {
  Matrix w(1, 1), g(1, 1);
  w << 1.0;
  g << 1.0;
  std::vector<ParamRef> params{{"w", w.data(), g.data(), 1, 1, true}};
  AdamState adam(params);
  CHECK_THROWS_AS(adam.step(params, 0.0), ArgumentError);
  CHECK_THROWS_AS(adam.step(params, -0.1), ArgumentError);

  std::vector<ParamRef> wrong{{"w", w.data(), g.data(), 1, 1, true},
                              {"x", w.data(), g.data(), 1, 1, true}};
  CHECK_THROWS_AS(adam.step(wrong, 0.1), ShapeError);

  std::vector<ParamRef> stat{{"s", w.data(), nullptr, 1, 1, false}};
  CHECK_THROWS_AS(AdamState{stat}, ArgumentError);
}

TEST_CASE("kaiming init has the right spread and zero biases") {
  LinearLayer lin(400, 200);
  Rng rng(21);
  kaiming_init(rng, lin);
  CHECK(lin.b.cwiseAbs().maxCoeff() == 0.0);
  const double mean = lin.w.mean();
  const double std =
      std::sqrt((lin.w.array() - mean).square().sum() / lin.w.size());
  CHECK(std::abs(mean) < 0.002);
  CHECK(std == doctest::Approx(std::sqrt(2.0 / 200.0)).epsilon(0.02));

  // Deterministic per stream.
  LinearLayer lin2(400, 200);
  Rng rng2(21);
  kaiming_init(rng2, lin2);
  CHECK((lin.w - lin2.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("max-norm projection caps rows and leaves the rest untouched") {
  LinearLayer lin(3, 4);
  lin.w.row(0) << 10.0, 0.0, 0.0, 0.0;
  lin.w.row(1) << 0.3, 0.4, 0.0, 0.0;  // norm 0.5
  lin.w.row(2) << 0.5, 0.5, 0.5, 0.5;  // norm 1.0, exactly at the cap
  const Matrix before = lin.w;
  maxnorm_project(lin, 1.0);
  CHECK(lin.w.row(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((lin.w.row(1) - before.row(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lin.w.row(2) - before.row(2)).cwiseAbs().maxCoeff() == 0.0);

  // Idempotent to the bit: projecting again changes nothing.
  const Matrix once = lin.w;
  maxnorm_project(lin, 1.0);
  CHECK((lin.w - once).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(maxnorm_project(lin, 0.0), ArgumentError);
}

TEST_CASE("mse and its gradient agree with the definition") {
  Matrix pred(2, 3), target(2, 3);
  pred << 1, 2, 3, 4, 5, 6;
  target << 1, 1, 1, 1, 1, 1;
  // squared errors: 0,1,4,9,16,25 -> mean over 6 entries = 55/6
  CHECK(mse(pred, target) == doctest::Approx(55.0 / 6.0).epsilon(1e-15));
  const Matrix g = mse_gradient(pred, target);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 2) == doctest::Approx(2.0 * 5.0 / 6.0).epsilon(1e-15));
  CHECK_THROWS_AS(mse(pred, Matrix::Zero(2, 2)), ShapeError);
}

TEST_CASE("training drives the loss down and logs every step") {
  NetworkConfig ncfg = tiny_config();
  Network net(ncfg);
  Rng init_rng(30);
  init_network(net, init_rng);
  // Learnable task: targets are a fixed linear map of the inputs.
  PairSet pairs = random_pairs(64, 4, 6, 31);
  Rng map_rng(32);
  const Matrix a = map_rng.gauss_matrix(4, 6, 0.0, 0.5);
  pairs.y3d = pairs.x2d * a;
  TrainConfig tcfg;
  tcfg.epochs = 30;
  tcfg.batch_size = 16;
  tcfg.lr0 = 0.005;
  std::ostringstream log;
  const TrainResult result = train(net, pairs, tcfg, &log);

  CHECK(result.steps == 30 * 4);
  CHECK(result.loss_history.size() == 120);
  CHECK(result.loss_history.back() < 0.5 * result.loss_history.front());

  // One "step lr loss" line per step, all three fields round-trip.
  std::istringstream lines(log.str());
  std::string line;
  std::int64_t n = 0;
  while (std::getline(lines, line)) {
    const auto tokens = split_tokens(line);
    REQUIRE(tokens.size() == 3);
    CHECK(parse_int(tokens[0], "log") == n);
    const double lr = parse_double(tokens[1], "log");
    CHECK(lr == lr_at(tcfg, n));
    CHECK(parse_double(tokens[2], "log") ==
          result.loss_history[static_cast<std::size_t>(n)]);
    ++n;
  }
  CHECK(n == 120);
}

TEST_CASE("the same seed reproduces the loss log bit for bit") {
  const PairSet pairs = random_pairs(48, 4, 6, 40);
  TrainConfig tcfg;
  tcfg.epochs = 5;
  tcfg.batch_size = 16;
  tcfg.seed = 99;

  std::string logs[2];
  for (auto& log_text : logs) {
    Network net(tiny_config());
    Rng init_rng = Rng(tcfg.seed).fork(0);
    init_network(net, init_rng);
    std::ostringstream log;
    train(net, pairs, tcfg, &log);
    log_text = log.str();
  }
  CHECK(logs[0].size() > 0);
  CHECK(logs[0] == logs[1]);
}

TEST_CASE("training raises NumericError on a non-finite loss") {
  Network net(tiny_config());
  Rng init_rng(50);
  init_network(net, init_rng);
  PairSet pairs = random_pairs(16, 4, 6, 51);
  pairs.y3d(3, 2) = std::numeric_limits<double>::infinity();
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.batch_size = 16;
  CHECK_THROWS_AS(train(net, pairs, tcfg), NumericError);
}

TEST_CASE("train validates shapes and emptiness") {
  Network net(tiny_config());
  Rng init_rng(52);
  init_network(net, init_rng);
  TrainConfig tcfg;
  CHECK_THROWS_AS(train(net, PairSet{}, tcfg), ArgumentError);
  PairSet wrong = random_pairs(8, 5, 6, 53);
  CHECK_THROWS_AS(train(net, wrong, tcfg), ShapeError);
}

TEST_CASE("fit glues preprocessing, stats, init and training together") {
  Rng rng(60);
  Dataset ds = synth_generate(Skeleton::human17(), 120, 1, rng);
  NetworkConfig ncfg;
  ncfg.n_in_joints = 16;
  ncfg.n_out_joints = 16;
  ncfg.hidden_dim = 16;
  ncfg.n_blocks = 1;
  TrainConfig tcfg;
  tcfg.epochs = 4;
  tcfg.batch_size = 32;
  const FitResult fr = fit(ds, ncfg, tcfg);
  CHECK_FALSE(fr.aborted);
  CHECK(fr.train.steps == 4 * 4);
  CHECK(fr.stats.mean2d.size() == 32);
  CHECK(fr.stats.mean3d.size() == 48);
  CHECK(fr.preprocess.camera_frame);
  CHECK(fr.train.loss_history.back() < fr.train.loss_history.front());

  // Joint-count mismatch between config and skeleton is refused.
  NetworkConfig off = ncfg;
  off.n_in_joints = 15;
  CHECK_THROWS_AS(fit(ds, off, tcfg), ArgumentError);
}

TEST_CASE("an aborting fit still returns the partial state, flagged") {
  Rng rng(61);
  Dataset ds = synth_generate(Skeleton::human17(), 60, 1, rng);
  NetworkConfig ncfg;
  ncfg.n_in_joints = 16;
  ncfg.n_out_joints = 16;
  ncfg.hidden_dim = 8;
  ncfg.n_blocks = 1;
  TrainConfig tcfg;
  tcfg.epochs = 50;
  tcfg.batch_size = 16;
  // Max-norm reins the weight rows back in and batch norm re-normalizes
  // whatever explodes, so a merely huge rate keeps the loss finite. This
  // one pushes the unclamped biases far enough that squaring them in the
  // batch-variance pass overflows to infinity.
  tcfg.lr0 = 1e200;
  const FitResult fr = fit(ds, ncfg, tcfg);
  CHECK(fr.aborted);
  CHECK(fr.abort_reason.find("non-finite") != std::string::npos);
}

TEST_CASE("TrainConfig validation bounds") {
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = TrainConfig{};
  cfg.lr0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = TrainConfig{};
  cfg.decay_factor = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}
