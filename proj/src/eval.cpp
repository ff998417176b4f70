#include "poselift/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "poselift/textio.hpp"

namespace poselift {

const char kReportFileMagic[] = "poselift.report.v";
const int kReportFileVersion = 1;

double mpjpe(const Matrix& pred, const Matrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw ShapeError("mpjpe: pose shapes differ");
  }
  if (pred.cols() != 3 || pred.rows() == 0) {
    throw ShapeError("mpjpe: expected nonempty n x 3 poses");
  }
  return (pred - gt).rowwise().norm().mean();
}

RigidTransform procrustes_align(const Matrix& pred, const Matrix& gt,
                                bool with_scale) {
  if (pred.rows() != gt.rows() || pred.cols() != 3 || gt.cols() != 3) {
    throw ShapeError("procrustes_align: expected matching n x 3 poses");
  }
  if (pred.rows() < 3) {
    throw NumericError("procrustes_align: needs at least 3 joints, got " +
                       std::to_string(pred.rows()));
  }
  const Eigen::RowVector3d pbar = pred.colwise().mean();
  const Eigen::RowVector3d gbar = gt.colwise().mean();
  const Matrix pc = pred.rowwise() - pbar;
  const Matrix gc = gt.rowwise() - gbar;

  Matrix a(3, 3);
  a.noalias() = gc.transpose() * pc;
  const Svd dec = svd(a);
  // A collinear (or collapsed) joint set leaves the rotation about the
  // line unconstrained: the second singular value vanishes.
  if (!(dec.s[0] > 0.0) || dec.s[1] <= 1e-9 * dec.s[0]) {
    throw NumericError(
        "procrustes_align: degenerate joint configuration (collinear or "
        "collapsed)");
  }
  const double d = (Eigen::Matrix3d(dec.u * dec.vt).determinant() < 0.0)
                       ? -1.0
                       : 1.0;
  RigidTransform tf;
  tf.r = dec.u * Eigen::Vector3d(1.0, 1.0, d).asDiagonal() * dec.vt;
  if (with_scale) {
    const double var_p = pc.array().square().sum();
    tf.scale = (dec.s[0] + dec.s[1] + d * dec.s[2]) / var_p;
  }
  tf.t = gbar.transpose() - tf.scale * tf.r * pbar.transpose();
  return tf;
}

Matrix apply_alignment(const Matrix& p, const RigidTransform& tf) {
  if (p.cols() != 3) {
    throw ShapeError("apply_alignment: expected n x 3 points");
  }
  return ((tf.scale * p) * tf.r.transpose()).rowwise() + tf.t.transpose();
}

void NeumaierSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

Matrix predict_rows(Network& net, const Matrix& x2d_raw,
                    const NormStats& stats) {
  const Matrix xn = normalize(x2d_raw, stats.mean2d, stats.std2d);
  Matrix pred(xn.rows(), net.config().out_dim());
  constexpr Index kChunk = 1024;
  for (Index start = 0; start < xn.rows(); start += kChunk) {
    const Index n = std::min(kChunk, xn.rows() - start);
    pred.middleRows(start, n) =
        net.forward(xn.middleRows(start, n), Mode::kEval);
  }
  return denormalize(pred, stats.mean3d, stats.std3d);
}

namespace {

// Rebuilds the included-joint pose matrix from a flattened root-excluded
// row: just a reshape, plus a zero root row when the root is counted.
Matrix unflatten_pose(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                      const Skeleton& sk, bool include_root) {
  const Index n_out = sk.n_output_joints();
  Matrix pose = include_root ? Matrix::Zero(n_out + 1, 3)
                             : Matrix(n_out, 3);
  const auto out_map = sk.output_joint_map();
  for (Index j = 0; j < n_out; ++j) {
    // Output order skips the root; with the root included, joints keep
    // their skeleton indices (the root row stays zero).
    const Index dst = include_root ? out_map[static_cast<std::size_t>(j)] : j;
    pose(dst, 0) = row[3 * j];
    pose(dst, 1) = row[3 * j + 1];
    pose(dst, 2) = row[3 * j + 2];
  }
  return pose;
}

void check_predictions(const Matrix& pred3d, const Dataset& ds) {
  const Index want_cols = 3 * ds.skeleton.n_output_joints();
  if (pred3d.rows() != static_cast<Index>(ds.samples.size()) ||
      pred3d.cols() != want_cols) {
    throw ShapeError("evaluate: predictions are " +
                     std::to_string(pred3d.rows()) + "x" +
                     std::to_string(pred3d.cols()) + ", dataset wants " +
                     std::to_string(ds.samples.size()) + "x" +
                     std::to_string(want_cols));
  }
}

std::string format_fixed(double value, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value,
                           std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

}  // namespace

EvalReport evaluate_predictions(const Matrix& pred3d, const Dataset& ds,
                                const EvalOptions& opt) {
  if (opt.protocol != 1 && opt.protocol != 2) {
    throw ArgumentError("evaluate: protocol must be 1 or 2, got " +
                        std::to_string(opt.protocol));
  }
  check_predictions(pred3d, ds);
  const PairSet gt = build_pairs(ds, {opt.camera_frame});

  std::map<std::string, std::pair<NeumaierSum, std::int64_t>> by_action;
  NeumaierSum total;
  for (Index i = 0; i < pred3d.rows(); ++i) {
    Matrix p = unflatten_pose(pred3d.row(i), ds.skeleton, opt.include_root);
    const Matrix g =
        unflatten_pose(gt.y3d.row(i), ds.skeleton, opt.include_root);
    if (opt.protocol == 2) {
      p = apply_alignment(p, procrustes_align(p, g, opt.with_scale));
    }
    const double err = mpjpe(p, g);
    auto& slot = by_action[ds.samples[static_cast<std::size_t>(i)].action];
    slot.first.add(err);
    ++slot.second;
    total.add(err);
  }

  EvalReport report;
  report.protocol = opt.protocol;
  report.fingerprint = opt.fingerprint;
  report.n_frames = pred3d.rows();
  for (const auto& [action, slot] : by_action) {
    report.actions.push_back(action);
    report.per_action_mpjpe.push_back(slot.first.value() /
                                      static_cast<double>(slot.second));
    report.per_action_frames.push_back(slot.second);
  }
  report.overall_mpjpe =
      report.n_frames > 0
          ? total.value() / static_cast<double>(report.n_frames)
          : 0.0;
  return report;
}

EvalReport evaluate(Network& net, const Dataset& test, const NormStats& stats,
                    const EvalOptions& opt) {
  const PairSet pairs = build_pairs(test, {opt.camera_frame});
  const Matrix pred = predict_rows(net, pairs.x2d, stats);
  return evaluate_predictions(pred, test, opt);
}

std::vector<ProtocolSse> per_frame_sse(const Matrix& pred3d, const Dataset& ds,
                                       const EvalOptions& opt) {
  check_predictions(pred3d, ds);
  const PairSet gt = build_pairs(ds, {opt.camera_frame});
  std::vector<ProtocolSse> out;
  out.reserve(static_cast<std::size_t>(pred3d.rows()));
  for (Index i = 0; i < pred3d.rows(); ++i) {
    const Matrix p =
        unflatten_pose(pred3d.row(i), ds.skeleton, opt.include_root);
    const Matrix g =
        unflatten_pose(gt.y3d.row(i), ds.skeleton, opt.include_root);
    ProtocolSse sse;
    sse.p1 = (p - g).array().square().sum();
    const Matrix aligned =
        apply_alignment(p, procrustes_align(p, g, opt.with_scale));
    sse.p2 = (aligned - g).array().square().sum();
    out.push_back(sse);
  }
  return out;
}

std::vector<std::pair<double, double>> noise_sweep(
    Network& net, const Dataset& test, const NormStats& stats,
    const std::vector<double>& sigmas, Rng& rng, const EvalOptions& opt) {
  EvalOptions sweep_opt = opt;
  sweep_opt.protocol = 2;
  const PairSet pairs = build_pairs(test, {opt.camera_frame});
  std::vector<std::pair<double, double>> table;
  table.reserve(sigmas.size());
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    Rng noise_rng = rng.fork(k);
    const Matrix noisy = add_noise(pairs.x2d, sigmas[k], noise_rng);
    const Matrix pred = predict_rows(net, noisy, stats);
    const EvalReport report = evaluate_predictions(pred, test, sweep_opt);
    table.emplace_back(sigmas[k], report.overall_mpjpe);
  }
  return table;
}

std::vector<std::string> ablation_variants() {
  return {"base",        "no-batch-norm", "no-dropout",
          "no-residual", "no-camera-coords", "blocks-1",
          "blocks-2",    "blocks-4",      "blocks-8"};
}

VariantConfig apply_variant(const NetworkConfig& base,
                            const std::string& variant) {
  VariantConfig vc{base, true};
  if (variant == "base") {
    return vc;
  }
  if (variant == "no-batch-norm") {
    vc.net.batch_norm = false;
    return vc;
  }
  if (variant == "no-dropout") {
    vc.net.keep_prob = 1.0;
    return vc;
  }
  if (variant == "no-residual") {
    vc.net.residual = false;
    return vc;
  }
  if (variant == "no-camera-coords") {
    vc.camera_frame = false;
    return vc;
  }
  if (variant.starts_with("blocks-")) {
    const std::string count = variant.substr(7);
    vc.net.n_blocks = static_cast<int>(
        parse_int(count, "ablation variant '" + variant + "'"));
    if (vc.net.n_blocks < 1 || vc.net.n_blocks > 64) {
      throw ArgumentError("ablation variant '" + variant +
                          "': block count out of range");
    }
    return vc;
  }
  throw ArgumentError("unknown ablation variant '" + variant + "'");
}

std::vector<AblationRow> ablate(const AblationSettings& settings,
                                const Dataset& ds,
                                const std::vector<std::string>& variants) {
  // Resolve every variant before spending any training time on them.
  for (const auto& name : variants) {
    apply_variant(settings.net, name);
  }
  const Split split =
      split_by_subject(ds, settings.train_subjects, settings.test_subjects);
  if (split.train.samples.empty() || split.test.samples.empty()) {
    throw ArgumentError("ablate: empty train or test split");
  }
  std::vector<AblationRow> rows;
  rows.reserve(variants.size());
  for (const auto& name : variants) {
    const VariantConfig vc = apply_variant(settings.net, name);
    FitResult fr =
        fit(split.train, vc.net, settings.train, vc.camera_frame, nullptr, {});
    if (fr.aborted) {
      throw NumericError("ablate: variant '" + name + "': " + fr.abort_reason);
    }
    EvalOptions opt;
    opt.protocol = 1;
    opt.camera_frame = vc.camera_frame;
    const EvalReport report = evaluate(fr.net, split.test, fr.stats, opt);
    rows.push_back({name, report.overall_mpjpe, fr.net.param_count()});
  }
  return rows;
}

std::string format_report_table(const EvalReport& report) {
  std::vector<std::string> headers = report.actions;
  headers.push_back("Avg");
  std::vector<std::string> values;
  for (double v : report.per_action_mpjpe) {
    values.push_back(format_fixed(v, 2));
  }
  values.push_back(format_fixed(report.overall_mpjpe, 2));

  const std::string label = "protocol #" + std::to_string(report.protocol);
  const std::string row_label = "mpjpe (mm)";
  const std::size_t label_w = std::max(label.size(), row_label.size());
  std::string header_line = label + std::string(label_w - label.size(), ' ');
  std::string value_line =
      row_label + std::string(label_w - row_label.size(), ' ');
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t width =
        std::max(headers[i].size(), values[i].size()) + 2;
    header_line += std::string(width - headers[i].size(), ' ') + headers[i];
    value_line += std::string(width - values[i].size(), ' ') + values[i];
  }
  return header_line + "\n" + value_line + "\n";
}

void save_report(const EvalReport& report, const std::string& path,
                 const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << kReportFileMagic << kReportFileVersion << "\n";
  for (const auto& line : comments) {
    out << "# " << line << "\n";
  }
  out << "protocol " << report.protocol << "\n";
  out << "fingerprint " << std::to_string(report.fingerprint) << "\n";
  out << "frames " << format_int(report.n_frames) << "\n";
  for (std::size_t i = 0; i < report.actions.size(); ++i) {
    out << "action " << report.actions[i] << " "
        << format_int(report.per_action_frames[i]) << " "
        << format_double(report.per_action_mpjpe[i]) << "\n";
  }
  out << "overall " << format_double(report.overall_mpjpe) << "\n";
  if (!out.flush()) {
    throw IoError("failed writing '" + path + "'");
  }
}

}  // namespace poselift
