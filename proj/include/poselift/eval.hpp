#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poselift/checkpoint.hpp"
#include "poselift/data.hpp"
#include "poselift/geometry.hpp"
#include "poselift/network.hpp"
#include "poselift/optim.hpp"

namespace poselift {

// Mean per-joint position error: the average Euclidean distance between
// matching rows, in the units of the inputs (mm here). Callers pass
// root-centered (and, for protocol #2, aligned) poses.
double mpjpe(const Matrix& pred, const Matrix& gt);

// Least-squares rigid fit pred -> gt: rotation (det +1 enforced through
// the SVD sign correction), translation, and optionally a similarity
// scale — the non-default with_scale mode. Needs >= 3 joints in general
// position; collinear configurations are NumericErrors.
struct RigidTransform {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double scale = 1.0;
};

RigidTransform procrustes_align(const Matrix& pred, const Matrix& gt,
                                bool with_scale = false);
Matrix apply_alignment(const Matrix& p, const RigidTransform& tf);

struct EvalOptions {
  int protocol = 1;          // 1 = root-aligned, 2 = Procrustes-aligned
  bool include_root = false; // count the root joint in the average
  bool with_scale = false;   // protocol 2 similarity alignment (non-default)
  bool camera_frame = true;  // must match the training-time preprocessing
  std::uint64_t fingerprint = 0;  // run-config fingerprint to embed
};

struct EvalReport {
  int protocol = 1;
  std::vector<std::string> actions;  // sorted unique tags
  std::vector<double> per_action_mpjpe;
  std::vector<std::int64_t> per_action_frames;
  double overall_mpjpe = 0.0;
  std::int64_t n_frames = 0;
  std::uint64_t fingerprint = 0;
};

// Compensated (Neumaier) accumulation so aggregates are stable to 1e-12
// no matter how frames are partitioned or reordered.
class NeumaierSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Normalize raw 2d rows with the training stats, run the network in eval
// mode (chunked), and denormalize back to mm. The inference path every
// consumer shares.
Matrix predict_rows(Network& net, const Matrix& x2d_raw,
                    const NormStats& stats);

// Scores denormalized root-excluded predictions (row i against
// ds.samples[i]) under the chosen protocol, aggregated per action.
EvalReport evaluate_predictions(const Matrix& pred3d, const Dataset& ds,
                                const EvalOptions& opt);

// Full path: preprocess ds, predict, score.
EvalReport evaluate(Network& net, const Dataset& test, const NormStats& stats,
                    const EvalOptions& opt);

// Per-frame squared-error totals under protocol 1 vs protocol 2 — the
// alignment-optimality check (protocol 2 can never be worse).
struct ProtocolSse {
  double p1 = 0.0;
  double p2 = 0.0;
};
std::vector<ProtocolSse> per_frame_sse(const Matrix& pred3d, const Dataset& ds,
                                       const EvalOptions& opt);

// Protocol-#2 error after perturbing the raw 2d inputs with pixel noise of
// each level, renormalizing with the training stats. Each sigma gets an
// independent stream forked from `rng`, so the table is seed-stable.
std::vector<std::pair<double, double>> noise_sweep(
    Network& net, const Dataset& test, const NormStats& stats,
    const std::vector<double>& sigmas, Rng& rng, const EvalOptions& opt);

// One ablation run: a named structural variant trained from the same seed
// as the base and scored with protocol #1.
struct AblationSettings {
  NetworkConfig net;
  TrainConfig train;
  std::vector<std::string> train_subjects = {"S1", "S5", "S6", "S7", "S8"};
  std::vector<std::string> test_subjects = {"S9", "S11"};
};

struct AblationRow {
  std::string variant;
  double mpjpe_p1 = 0.0;
  std::int64_t param_count = 0;
};

// The canonical variant list: base, no-batch-norm, no-dropout,
// no-residual, no-camera-coords, blocks-1, blocks-2, blocks-4, blocks-8.
std::vector<std::string> ablation_variants();

// Applies a variant name to the base configs; "no-camera-coords" flips
// the preprocessing instead. Unknown names are ArgumentErrors.
struct VariantConfig {
  NetworkConfig net;
  bool camera_frame = true;
};
VariantConfig apply_variant(const NetworkConfig& base,
                            const std::string& variant);

std::vector<AblationRow> ablate(const AblationSettings& settings,
                                const Dataset& ds,
                                const std::vector<std::string>& variants);

// Table-style rendering: one column per action plus Avg.
std::string format_report_table(const EvalReport& report);

// Machine-readable report file ("poselift.report.v1").
extern const char kReportFileMagic[];
extern const int kReportFileVersion;
void save_report(const EvalReport& report, const std::string& path,
                 const std::vector<std::string>& comments = {});

}  // namespace poselift
