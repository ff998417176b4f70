// poselift command line.
//
// Subcommands: synth, train, eval, noise-sweep, ablate, predict,
// gradcheck. Every command resolves its configuration (flags > config
// file > built-in defaults), prints the resolved values before doing any
// work, and embeds the same text verbatim — plus its fnv1a64 fingerprint
// — in whatever artifacts it writes. Exit codes follow the error classes:
// 0 ok, 2 arguments, 3 io, 4 schema, 5 numeric, 1 anything else.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poselift/checkpoint.hpp"
#include "poselift/data.hpp"
#include "poselift/error.hpp"
#include "poselift/eval.hpp"
#include "poselift/geometry.hpp"
#include "poselift/gradcheck.hpp"
#include "poselift/network.hpp"
#include "poselift/numerics.hpp"
#include "poselift/optim.hpp"
#include "poselift/textio.hpp"

namespace {

using namespace poselift;

// Resolved-configuration text: one "key value" line per setting, in
// declaration order. The printed startup block, the comment header of
// text artifacts, and the fingerprint hashed into checkpoints and reports
// are all this same string.
struct Provenance {
  std::string text;

  void kv(const std::string& key, const std::string& value) {
    text += key + " " + value + "\n";
  }
  void kv(const std::string& key, const char* value) {
    kv(key, std::string(value));
  }
  void kv(const std::string& key, std::int64_t value) {
    kv(key, format_int(value));
  }
  void kv(const std::string& key, int value) {
    kv(key, format_int(value));
  }
  void kv(const std::string& key, std::uint64_t value) {
    kv(key, std::to_string(value));
  }
  void kv(const std::string& key, double value) {
    kv(key, format_double(value));
  }
  void kv(const std::string& key, bool value) {
    kv(key, value ? "true" : "false");
  }
  void kv(const std::string& key, const std::vector<std::string>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) joined += ",";
      joined += values[i];
    }
    kv(key, joined);
  }
  void kv(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) joined += ",";
      joined += format_double(values[i]);
    }
    kv(key, joined);
  }

  std::uint64_t fingerprint() const { return fnv1a64(text); }

  // Lines for the "# ..." comment header of text artifacts.
  std::vector<std::string> comment_lines() const {
    std::vector<std::string> lines;
    std::string::size_type pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      lines.push_back(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
    lines.push_back("fingerprint " + std::to_string(fingerprint()));
    return lines;
  }

  void print() const {
    std::cout << text << "fingerprint " << fingerprint() << "\n\n";
  }
};

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return (std::filesystem::path(dir) / name).string();
}

void refuse_overwrite(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw IoError("refusing to overwrite existing file " + path +
                  " (pass --force to allow)");
  }
}

// Keep only the samples of the named subjects; an empty list keeps all.
Dataset filter_subjects(const Dataset& ds,
                        const std::vector<std::string>& subjects) {
  if (subjects.empty()) return ds;
  Split split = split_by_subject(ds, subjects, {});
  if (split.train.samples.empty()) {
    std::string joined;
    for (const auto& s : subjects) joined += (joined.empty() ? "" : ",") + s;
    throw ArgumentError("no samples match subjects " + joined);
  }
  return std::move(split.train);
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// ---------------------------------------------------------------------
// shared option bundles

struct NetOpts {
  std::int64_t hidden = 1024;
  std::int64_t blocks = 2;
  double keep_prob = 0.5;
  bool no_batch_norm = false;
  bool no_residual = false;
};

struct TrainOpts {
  double lr = 0.001;
  double decay_factor = 0.96;
  std::int64_t decay_steps = 100000;
  std::int64_t batch = 64;
  std::int64_t epochs = 200;
  double max_norm = 1.0;
  std::uint64_t seed = 1;
};

void add_net_options(CLI::App& cmd, NetOpts& o) {
  cmd.add_option("--hidden", o.hidden, "width of every hidden linear layer");
  cmd.add_option("--blocks", o.blocks, "number of residual blocks");
  cmd.add_option("--keep-prob", o.keep_prob,
                 "dropout keep probability in (0, 1]");
  cmd.add_flag("--no-batch-norm", o.no_batch_norm,
               "drop the batch-norm stages");
  cmd.add_flag("--no-residual", o.no_residual, "drop the skip connections");
}

void add_train_options(CLI::App& cmd, TrainOpts& o) {
  cmd.add_option("--lr", o.lr, "initial Adam learning rate");
  cmd.add_option("--decay-factor", o.decay_factor,
                 "learning-rate decay per decay period");
  cmd.add_option("--decay-steps", o.decay_steps,
                 "optimizer steps per decay period");
  cmd.add_option("--batch", o.batch, "minibatch size (>= 2)");
  cmd.add_option("--epochs", o.epochs, "passes over the training split");
  cmd.add_option("--max-norm", o.max_norm, "per-row weight norm cap");
  cmd.add_option("--seed", o.seed, "master seed for init/shuffle/dropout");
}

NetworkConfig make_net_config(const Skeleton& sk, const NetOpts& o) {
  NetworkConfig cfg;
  cfg.n_in_joints = sk.n_input_joints();
  cfg.n_out_joints = sk.n_output_joints();
  cfg.hidden_dim = o.hidden;
  cfg.n_blocks = o.blocks;
  cfg.keep_prob = o.keep_prob;
  cfg.batch_norm = !o.no_batch_norm;
  cfg.residual = !o.no_residual;
  return cfg;
}

TrainConfig make_train_config(const TrainOpts& o) {
  TrainConfig cfg;
  cfg.lr0 = o.lr;
  cfg.decay_factor = o.decay_factor;
  cfg.decay_steps = o.decay_steps;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.max_norm_cap = o.max_norm;
  cfg.seed = o.seed;
  return cfg;
}

void prov_net(Provenance& p, const NetOpts& o) {
  p.kv("hidden", o.hidden);
  p.kv("blocks", o.blocks);
  p.kv("keep-prob", o.keep_prob);
  p.kv("batch-norm", !o.no_batch_norm);
  p.kv("residual", !o.no_residual);
}

void prov_train(Provenance& p, const TrainOpts& o) {
  p.kv("lr", o.lr);
  p.kv("decay-factor", o.decay_factor);
  p.kv("decay-steps", o.decay_steps);
  p.kv("batch", o.batch);
  p.kv("epochs", o.epochs);
  p.kv("max-norm", o.max_norm);
  p.kv("seed", o.seed);
}

// ---------------------------------------------------------------------
// synth

struct SynthOpts {
  std::int64_t frames = 10000;
  int cameras = 4;
  std::uint64_t seed = 1;
  std::string dataset_path;
  std::string cameras_path;
  bool force = false;
};

void run_synth(const std::string& out_dir, SynthOpts o) {
  if (o.dataset_path.empty()) o.dataset_path = join_path(out_dir, "synth.dataset");
  if (o.cameras_path.empty()) o.cameras_path = join_path(out_dir, "synth.cameras");

  Provenance prov;
  prov.kv("command", "synth");
  prov.kv("frames", o.frames);
  prov.kv("cameras", o.cameras);
  prov.kv("seed", o.seed);
  prov.kv("dataset", o.dataset_path);
  prov.kv("camera-file", o.cameras_path);
  prov.print();

  refuse_overwrite(o.dataset_path, o.force);
  refuse_overwrite(o.cameras_path, o.force);

  Skeleton sk = Skeleton::human17();
  Rng rng(o.seed);
  Dataset ds = synth_generate(sk, o.frames, o.cameras, rng);
  save_dataset(ds, o.dataset_path, prov.comment_lines());
  save_cameras(o.cameras_path, ds.cameras, prov.comment_lines());

  std::cout << "generated " << ds.samples.size() << " samples ("
            << ds.samples.size() / ds.cameras.size() << " poses x "
            << ds.cameras.size() << " cameras), " << sk.n_joints()
            << " joints (" << sk.n_input_joints() << " in the 2d input)\n"
            << "wrote " << o.dataset_path << "\n"
            << "wrote " << o.cameras_path << "\n";
}

// ---------------------------------------------------------------------
// train

struct TrainCmdOpts {
  std::string dataset_path;
  std::string cameras_path;
  std::string checkpoint_path;
  std::string loss_log_path;
  std::vector<std::string> subjects = {"S1", "S5", "S6", "S7", "S8"};
  bool world_frame = false;
  std::int64_t checkpoint_every = 0;
  NetOpts net;
  TrainOpts train;
};

void run_train(const std::string& out_dir, TrainCmdOpts o) {
  if (o.checkpoint_path.empty())
    o.checkpoint_path = join_path(out_dir, "model.ckpt");
  if (o.loss_log_path.empty()) o.loss_log_path = join_path(out_dir, "loss.log");

  Provenance prov;
  prov.kv("command", "train");
  prov.kv("dataset", o.dataset_path);
  prov.kv("camera-file", o.cameras_path);
  prov.kv("checkpoint", o.checkpoint_path);
  prov.kv("loss-log", o.loss_log_path);
  prov.kv("train-subjects", o.subjects);
  prov.kv("camera-frame", !o.world_frame);
  prov.kv("checkpoint-every", o.checkpoint_every);
  prov_net(prov, o.net);
  prov_train(prov, o.train);
  prov.print();

  const Dataset full = load_dataset(o.dataset_path, o.cameras_path);
  const Dataset tr = filter_subjects(full, o.subjects);
  const bool camera_frame = !o.world_frame;

  const NetworkConfig ncfg = make_net_config(tr.skeleton, o.net);
  const TrainConfig tcfg = make_train_config(o.train);

  std::ofstream loss_log(o.loss_log_path);
  if (!loss_log) {
    throw IoError("train: cannot open loss log " + o.loss_log_path);
  }

  CheckpointMeta meta;
  meta.provenance = prov.text;
  meta.fingerprint = prov.fingerprint();
  meta.seed = tcfg.seed;
  meta.camera_frame = camera_frame;

  // Progress + periodic checkpoints. The epoch hook needs the
  // normalization statistics before fit() returns them, and they are a
  // pure function of the training split, so recompute the same values
  // here when checkpointing is on.
  TrainHooks hooks;
  double last_loss = 0.0;
  hooks.on_step = [&](std::int64_t, double, double loss, Network&) {
    last_loss = loss;
  };
  NormStats hook_stats;
  if (o.checkpoint_every > 0) {
    const PairSet raw = build_pairs(tr, {camera_frame});
    hook_stats = fit_stats(raw.x2d, raw.y3d);
  }
  hooks.on_epoch_end = [&](std::int64_t epoch, Network& net) {
    std::cout << "epoch " << (epoch + 1) << "/" << tcfg.epochs << " loss "
              << format_double(last_loss) << "\n";
    if (o.checkpoint_every > 0 && (epoch + 1) % o.checkpoint_every == 0 &&
        epoch + 1 < tcfg.epochs) {
      const std::string path =
          o.checkpoint_path + ".epoch" + format_int(epoch + 1);
      save_checkpoint(make_checkpoint(net, tr.skeleton, hook_stats, meta),
                      path);
      std::cout << "wrote " << path << "\n";
    }
  };

  FitResult fr = fit(tr, ncfg, tcfg, camera_frame, &loss_log, hooks);

  // An aborted run still leaves a checkpoint behind — flagged, so nothing
  // downstream mistakes it for a finished model.
  meta.aborted = fr.aborted;
  save_checkpoint(make_checkpoint(fr.net, tr.skeleton, fr.stats, meta),
                  o.checkpoint_path);

  std::cout << "trained " << fr.train.steps << " steps over "
            << fr.net.param_count() << " parameters\n"
            << "wrote " << o.checkpoint_path << "\n"
            << "wrote " << o.loss_log_path << "\n";
  if (fr.aborted) {
    std::cout << "checkpoint flagged aborted\n";
    throw NumericError(fr.abort_reason);
  }
}

// ---------------------------------------------------------------------
// eval

struct EvalCmdOpts {
  std::string checkpoint_path;
  std::string dataset_path;
  std::string cameras_path;
  std::string report_path;
  std::vector<std::string> subjects = {"S9", "S11"};
  int protocol = 1;
  bool oracle = false;
  bool include_root = false;
  bool with_scale = false;
  bool verify = false;
};

void run_eval(const std::string& out_dir, EvalCmdOpts o) {
  if (o.report_path.empty()) o.report_path = join_path(out_dir, "eval.report");
  if (!o.oracle && o.checkpoint_path.empty()) {
    throw ArgumentError("eval: --checkpoint is required unless --oracle");
  }

  Provenance prov;
  prov.kv("command", "eval");
  prov.kv("checkpoint", o.checkpoint_path);
  prov.kv("dataset", o.dataset_path);
  prov.kv("camera-file", o.cameras_path);
  prov.kv("report", o.report_path);
  prov.kv("subjects", o.subjects);
  prov.kv("protocol", o.protocol);
  prov.kv("oracle", o.oracle);
  prov.kv("include-root", o.include_root);
  prov.kv("procrustes-scale", o.with_scale);
  prov.kv("verify", o.verify);
  prov.print();

  const Dataset full = load_dataset(o.dataset_path, o.cameras_path);
  const Dataset ds = filter_subjects(full, o.subjects);

  EvalOptions opt;
  opt.protocol = o.protocol;
  opt.include_root = o.include_root;
  opt.with_scale = o.with_scale;

  Matrix pred;
  if (o.oracle) {
    // Ground truth fed back as the prediction: a pipeline identity check
    // that must come out at exactly zero error.
    opt.fingerprint = prov.fingerprint();
    pred = build_pairs(ds, {opt.camera_frame}).y3d;
  } else {
    const Checkpoint ck = load_checkpoint(o.checkpoint_path);
    if (!(ck.skeleton == full.skeleton)) {
      throw SchemaError(
          "eval: checkpoint skeleton does not match the dataset skeleton");
    }
    if (ck.meta.aborted) {
      std::cerr << "warning: checkpoint " << o.checkpoint_path
                << " is flagged aborted\n";
    }
    Network net = restore_network(ck);
    opt.camera_frame = ck.meta.camera_frame;
    opt.fingerprint = ck.meta.fingerprint;
    const PairSet pairs = build_pairs(ds, {opt.camera_frame});
    pred = predict_rows(net, pairs.x2d, ck.stats);
  }

  const EvalReport report = evaluate_predictions(pred, ds, opt);

  if (o.verify) {
    // Protocol 2 minimizes the per-frame SSE over rigid alignments, and
    // the identity alignment reproduces protocol 1 — so p2 <= p1 frame by
    // frame, up to rounding in the SVD.
    const auto sse = per_frame_sse(pred, ds, opt);
    std::int64_t violations = 0;
    for (const auto& s : sse) {
      if (s.p2 > s.p1 * (1.0 + 1e-9) + 1e-9) ++violations;
    }
    if (violations > 0) {
      throw NumericError("verify: protocol-2 SSE exceeds protocol-1 SSE on " +
                         std::to_string(violations) + " of " +
                         std::to_string(sse.size()) + " frames");
    }
    std::cout << "verify: protocol-2 SSE <= protocol-1 SSE on all "
              << sse.size() << " frames\n";
  }

  std::cout << format_report_table(report);
  save_report(report, o.report_path, prov.comment_lines());
  std::cout << "wrote " << o.report_path << "\n";
}

// ---------------------------------------------------------------------
// noise-sweep

struct SweepCmdOpts {
  std::string checkpoint_path;
  std::string dataset_path;
  std::string cameras_path;
  std::string report_path;
  std::vector<std::string> subjects = {"S9", "S11"};
  std::vector<double> sigmas = {0.0, 5.0, 10.0, 15.0, 20.0};
  std::uint64_t seed = 1;
};

void run_noise_sweep(const std::string& out_dir, SweepCmdOpts o) {
  if (o.report_path.empty()) o.report_path = join_path(out_dir, "noise.report");

  Provenance prov;
  prov.kv("command", "noise-sweep");
  prov.kv("checkpoint", o.checkpoint_path);
  prov.kv("dataset", o.dataset_path);
  prov.kv("camera-file", o.cameras_path);
  prov.kv("report", o.report_path);
  prov.kv("subjects", o.subjects);
  prov.kv("sigmas", o.sigmas);
  prov.kv("seed", o.seed);
  prov.print();

  const Dataset full = load_dataset(o.dataset_path, o.cameras_path);
  const Dataset ds = filter_subjects(full, o.subjects);
  const Checkpoint ck = load_checkpoint(o.checkpoint_path);
  if (!(ck.skeleton == full.skeleton)) {
    throw SchemaError(
        "noise-sweep: checkpoint skeleton does not match the dataset "
        "skeleton");
  }
  Network net = restore_network(ck);

  EvalOptions opt;
  opt.camera_frame = ck.meta.camera_frame;
  opt.fingerprint = ck.meta.fingerprint;

  Rng rng(o.seed);
  const auto rows = noise_sweep(net, ds, ck.stats, o.sigmas, rng, opt);

  std::cout << "sigma_px  mpjpe_p2_mm\n";
  std::ofstream out(o.report_path);
  if (!out) {
    throw IoError("noise-sweep: cannot open " + o.report_path);
  }
  out << "poselift.sweep.v1\n";
  for (const auto& line : prov.comment_lines()) out << "# " << line << "\n";
  for (const auto& [sigma, err] : rows) {
    std::printf("%8s  %s\n", fixed2(sigma).c_str(), fixed2(err).c_str());
    out << "sigma " << format_double(sigma) << " " << format_double(err)
        << "\n";
  }
  std::cout << "wrote " << o.report_path << "\n";
}

// ---------------------------------------------------------------------
// ablate

struct AblateCmdOpts {
  std::string dataset_path;
  std::string cameras_path;
  std::string report_path;
  std::vector<std::string> variants;  // empty = the canonical list
  std::vector<std::string> train_subjects = {"S1", "S5", "S6", "S7", "S8"};
  std::vector<std::string> test_subjects = {"S9", "S11"};
  NetOpts net;
  TrainOpts train;
};

void run_ablate(const std::string& out_dir, AblateCmdOpts o) {
  if (o.report_path.empty())
    o.report_path = join_path(out_dir, "ablation.report");
  if (o.variants.empty()) o.variants = ablation_variants();

  Provenance prov;
  prov.kv("command", "ablate");
  prov.kv("dataset", o.dataset_path);
  prov.kv("camera-file", o.cameras_path);
  prov.kv("report", o.report_path);
  prov.kv("variants", o.variants);
  prov.kv("train-subjects", o.train_subjects);
  prov.kv("test-subjects", o.test_subjects);
  prov_net(prov, o.net);
  prov_train(prov, o.train);
  prov.print();

  const Dataset full = load_dataset(o.dataset_path, o.cameras_path);

  AblationSettings settings;
  settings.net = make_net_config(full.skeleton, o.net);
  settings.train = make_train_config(o.train);
  settings.train_subjects = o.train_subjects;
  settings.test_subjects = o.test_subjects;

  const auto rows = ablate(settings, full, o.variants);

  double base = 0.0;
  bool have_base = false;
  for (const auto& r : rows) {
    if (r.variant == "base") {
      base = r.mpjpe_p1;
      have_base = true;
    }
  }

  std::printf("%-18s %12s %12s %10s\n", "variant", "params", "mpjpe_p1",
              "vs_base");
  std::ofstream out(o.report_path);
  if (!out) {
    throw IoError("ablate: cannot open " + o.report_path);
  }
  out << "poselift.ablation.v1\n";
  for (const auto& line : prov.comment_lines()) out << "# " << line << "\n";
  for (const auto& r : rows) {
    std::string delta = "-";
    if (have_base && r.variant != "base") {
      const double d = r.mpjpe_p1 - base;
      delta = (d >= 0 ? "+" : "") + fixed2(d);
    }
    std::printf("%-18s %12s %12s %10s\n", r.variant.c_str(),
                format_int(r.param_count).c_str(), fixed2(r.mpjpe_p1).c_str(),
                delta.c_str());
    out << "variant " << r.variant << " " << format_int(r.param_count) << " "
        << format_double(r.mpjpe_p1) << "\n";
  }
  std::cout << "wrote " << o.report_path << "\n";
}

// ---------------------------------------------------------------------
// predict

struct PredictCmdOpts {
  std::string checkpoint_path;
  std::string dataset_path;
  std::string cameras_path;
  std::string out_path;
  std::string plot_path;  // empty = no plot data
  std::vector<std::string> subjects;  // empty = all
  std::int64_t plot_frame = 0;
};

void run_predict(const std::string& out_dir, PredictCmdOpts o) {
  if (o.out_path.empty()) o.out_path = join_path(out_dir, "predictions.txt");

  Provenance prov;
  prov.kv("command", "predict");
  prov.kv("checkpoint", o.checkpoint_path);
  prov.kv("dataset", o.dataset_path);
  prov.kv("camera-file", o.cameras_path);
  prov.kv("out", o.out_path);
  prov.kv("subjects", o.subjects);
  prov.kv("plot-data", o.plot_path);
  prov.kv("plot-frame", o.plot_frame);
  prov.print();

  const Dataset full = load_dataset(o.dataset_path, o.cameras_path);
  const Dataset ds = filter_subjects(full, o.subjects);
  const Checkpoint ck = load_checkpoint(o.checkpoint_path);
  if (!(ck.skeleton == full.skeleton)) {
    throw SchemaError(
        "predict: checkpoint skeleton does not match the dataset skeleton");
  }
  Network net = restore_network(ck);

  const PairSet pairs = build_pairs(ds, {ck.meta.camera_frame});
  const Matrix pred = predict_rows(net, pairs.x2d, ck.stats);

  const Skeleton& sk = ds.skeleton;
  const auto out_map = sk.output_joint_map();

  std::ofstream out(o.out_path);
  if (!out) {
    throw IoError("predict: cannot open " + o.out_path);
  }
  out << "poselift.predictions.v1\n";
  for (const auto& line : prov.comment_lines()) out << "# " << line << "\n";
  // Root-centered camera-frame (or world-frame) mm, root excluded; joint
  // order matches the skeleton with the root dropped.
  for (Index i = 0; i < pred.rows(); ++i) {
    const auto& s = ds.samples[static_cast<std::size_t>(i)];
    out << "pose " << s.subject << " " << s.action << " " << s.camera_id << " "
        << format_int(s.frame);
    for (Index j = 0; j < pred.cols(); ++j) {
      out << " " << format_double(pred(i, j));
    }
    out << "\n";
  }
  std::cout << "wrote " << pred.rows() << " predictions to " << o.out_path
            << "\n";

  if (!o.plot_path.empty()) {
    if (o.plot_frame < 0 || o.plot_frame >= pred.rows()) {
      throw ArgumentError("predict: --plot-frame " + format_int(o.plot_frame) +
                          " out of range [0, " + format_int(pred.rows()) +
                          ")");
    }
    // One full pose with the root restored at the origin, plus the bone
    // list — enough for any plotting tool to draw the skeleton.
    Matrix pose = Matrix::Zero(sk.n_joints(), 3);
    for (std::size_t k = 0; k < out_map.size(); ++k) {
      for (Index c = 0; c < 3; ++c) {
        pose(out_map[k], c) = pred(o.plot_frame, static_cast<Index>(3 * k) + c);
      }
    }
    std::ofstream plot(o.plot_path);
    if (!plot) {
      throw IoError("predict: cannot open " + o.plot_path);
    }
    plot << "poselift.plotdata.v1\n";
    for (const auto& line : prov.comment_lines()) plot << "# " << line << "\n";
    for (Index j = 0; j < sk.n_joints(); ++j) {
      plot << "joint " << sk.joints[static_cast<std::size_t>(j)].name;
      for (Index c = 0; c < 3; ++c) {
        plot << " " << format_double(pose(j, c));
      }
      plot << "\n";
    }
    for (Index j = 0; j < sk.n_joints(); ++j) {
      const int parent = sk.joints[static_cast<std::size_t>(j)].parent;
      if (parent >= 0) {
        plot << "edge " << parent << " " << j << "\n";
      }
    }
    std::cout << "wrote " << o.plot_path << "\n";
  }
}

// ---------------------------------------------------------------------
// gradcheck

void run_gradcheck_cmd(std::uint64_t seed) {
  Provenance prov;
  prov.kv("command", "gradcheck");
  prov.kv("seed", seed);
  prov.print();

  const auto entries = run_gradcheck(seed);
  for (const auto& e : entries) {
    std::printf("%-20s %.3e\n", e.name.c_str(), e.max_rel_err);
  }
  std::printf("tolerance            %.3e\n", kGradCheckTol);
  if (!gradcheck_passed(entries)) {
    throw NumericError("gradient check failed: analytic and numeric "
                       "gradients disagree beyond tolerance");
  }
  std::cout << "gradient check passed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "poselift — lift 2d joint detections to 3d poses with a residual "
      "MLP trained on synthetic mocap"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "read options from a config file (one [section] per "
                 "command); flags override the file");

  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir,
                 "directory for default output paths")
      ->envname("POSELIFT_OUT_DIR");

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  c_synth->add_option("--frames", synth.frames, "number of samples to emit")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--cameras", synth.cameras, "cameras on the ring")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.seed, "generator seed");
  c_synth->add_option("--dataset", synth.dataset_path, "output dataset path");
  c_synth->add_option("--camera-file", synth.cameras_path,
                      "output camera path");
  c_synth->add_flag("--force", synth.force, "overwrite existing outputs");

  TrainCmdOpts train;
  auto* c_train = app.add_subcommand("train", "train a lifting model");
  c_train->add_option("--dataset", train.dataset_path, "input dataset")
      ->required();
  c_train->add_option("--camera-file", train.cameras_path, "input cameras")
      ->required();
  c_train->add_option("--checkpoint", train.checkpoint_path,
                      "output checkpoint path");
  c_train->add_option("--loss-log", train.loss_log_path,
                      "output per-step loss log");
  c_train
      ->add_option("--train-subjects", train.subjects,
                   "subjects to train on (empty = all)")
      ->delimiter(',');
  c_train->add_flag("--world-frame", train.world_frame,
                    "skip the world->camera target transform");
  c_train->add_option("--checkpoint-every", train.checkpoint_every,
                      "also checkpoint every k epochs (0 = off)");
  add_net_options(*c_train, train.net);
  add_train_options(*c_train, train.train);

  EvalCmdOpts eval;
  auto* c_eval = app.add_subcommand("eval", "score a checkpoint");
  c_eval->add_option("--checkpoint", eval.checkpoint_path, "trained model");
  c_eval->add_option("--dataset", eval.dataset_path, "input dataset")
      ->required();
  c_eval->add_option("--camera-file", eval.cameras_path, "input cameras")
      ->required();
  c_eval->add_option("--report", eval.report_path, "output report path");
  c_eval
      ->add_option("--subjects", eval.subjects,
                   "subjects to evaluate (empty = all)")
      ->delimiter(',');
  c_eval->add_option("--protocol", eval.protocol, "1 root-aligned, 2 rigid")
      ->check(CLI::Range(1, 2));
  c_eval->add_flag("--oracle", eval.oracle,
                   "score ground truth against itself (must be 0)");
  c_eval->add_flag("--include-root", eval.include_root,
                   "count the root joint in the error");
  c_eval->add_flag("--procrustes-scale", eval.with_scale,
                   "allow a similarity scale in protocol 2");
  c_eval->add_flag("--verify", eval.verify,
                   "assert per-frame protocol-2 SSE <= protocol-1 SSE");

  SweepCmdOpts sweep;
  auto* c_sweep = app.add_subcommand(
      "noise-sweep", "protocol-2 error vs 2d input noise level");
  c_sweep->add_option("--checkpoint", sweep.checkpoint_path, "trained model")
      ->required();
  c_sweep->add_option("--dataset", sweep.dataset_path, "input dataset")
      ->required();
  c_sweep->add_option("--camera-file", sweep.cameras_path, "input cameras")
      ->required();
  c_sweep->add_option("--report", sweep.report_path, "output report path");
  c_sweep
      ->add_option("--subjects", sweep.subjects,
                   "subjects to evaluate (empty = all)")
      ->delimiter(',');
  c_sweep->add_option("--sigmas", sweep.sigmas, "noise levels in px")
      ->delimiter(',');
  c_sweep->add_option("--seed", sweep.seed, "noise seed");

  AblateCmdOpts ablate_opts;
  auto* c_ablate = app.add_subcommand(
      "ablate", "retrain structural variants and compare protocol-1 error");
  c_ablate->add_option("--dataset", ablate_opts.dataset_path, "input dataset")
      ->required();
  c_ablate
      ->add_option("--camera-file", ablate_opts.cameras_path, "input cameras")
      ->required();
  c_ablate->add_option("--report", ablate_opts.report_path,
                       "output report path");
  c_ablate
      ->add_option("--variants", ablate_opts.variants,
                   "variant names (default: the canonical list)")
      ->delimiter(',');
  c_ablate
      ->add_option("--train-subjects", ablate_opts.train_subjects,
                   "subjects to train on")
      ->delimiter(',');
  c_ablate
      ->add_option("--test-subjects", ablate_opts.test_subjects,
                   "subjects to evaluate")
      ->delimiter(',');
  add_net_options(*c_ablate, ablate_opts.net);
  add_train_options(*c_ablate, ablate_opts.train);

  PredictCmdOpts predict;
  auto* c_predict =
      app.add_subcommand("predict", "emit per-frame 3d joint predictions");
  c_predict->add_option("--checkpoint", predict.checkpoint_path,
                        "trained model")
      ->required();
  c_predict->add_option("--dataset", predict.dataset_path, "input dataset")
      ->required();
  c_predict->add_option("--camera-file", predict.cameras_path,
                        "input cameras")
      ->required();
  c_predict->add_option("--out", predict.out_path, "output predictions path");
  c_predict
      ->add_option("--subjects", predict.subjects,
                   "subjects to predict (empty = all)")
      ->delimiter(',');
  c_predict->add_option("--plot-data", predict.plot_path,
                        "also write one pose as joints + bone edges");
  c_predict->add_option("--plot-frame", predict.plot_frame,
                        "prediction row for --plot-data");

  std::uint64_t gradcheck_seed = 20;
  auto* c_gradcheck = app.add_subcommand(
      "gradcheck", "verify every backward pass against central differences");
  c_gradcheck->add_option("--seed", gradcheck_seed, "check seed");

  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
    if (c_synth->parsed()) run_synth(out_dir, synth);
    if (c_train->parsed()) run_train(out_dir, train);
    if (c_eval->parsed()) run_eval(out_dir, eval);
    if (c_sweep->parsed()) run_noise_sweep(out_dir, sweep);
    if (c_ablate->parsed()) run_ablate(out_dir, ablate_opts);
    if (c_predict->parsed()) run_predict(out_dir, predict);
    if (c_gradcheck->parsed()) run_gradcheck_cmd(gradcheck_seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? poselift::kExitOk : poselift::kExitArgument;
  } catch (const poselift::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return poselift::kExitFailure;
  }
  return poselift::kExitOk;
}
