#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/geometry.hpp"
#include "poselift/numerics.hpp"

namespace poselift {

// Kinematic tree plus the static measurements the generator and the
// preprocessing pipeline share. `bone_lengths[j]` is the parent→joint
// distance in mm; the root entry is unused and held at zero.
// `input_joint_map` lists the joints present in the 2d input, in input
// order — the 2d joint set may be smaller than the 3d skeleton.
struct Skeleton {
  struct Joint {
    std::string name;
    int parent;  // -1 for the root
  };

  std::vector<Joint> joints;
  Index root_idx = 0;
  std::vector<double> bone_lengths;
  std::vector<Index> input_joint_map;

  Index n_joints() const { return static_cast<Index>(joints.size()); }
  Index n_input_joints() const {
    return static_cast<Index>(input_joint_map.size());
  }
  // Targets exclude the (always-zero) root.
  Index n_output_joints() const { return n_joints() - 1; }

  // Joint indices in target order: every joint except the root.
  std::vector<Index> output_joint_map() const;

  // Throws ArgumentError unless the parent graph is a tree rooted at
  // root_idx, bone lengths of non-root joints are positive, and the
  // input map indexes real joints without repeats.
  void validate() const;

  // 17-joint body used by the synthetic generator: hip root, legs, spine,
  // thorax, neck, head, arms. The 2d input carries every joint except the
  // spine (16 joints).
  static Skeleton human17();
};

bool operator==(const Skeleton::Joint& a, const Skeleton::Joint& b);
bool operator==(const Skeleton& a, const Skeleton& b);

// One observed frame: a world-space pose tagged by subject, action,
// camera and frame number, with an optional 2d observation (0x0 when
// absent — e.g. before an external detector has filled it).
struct PoseSample {
  std::string subject;
  std::string action;
  std::string camera_id;
  std::int64_t frame = 0;
  Matrix joints3d_world;  // n_joints x 3, mm
  Matrix joints2d;        // n_input_joints x 2, px; 0x0 when absent

  bool has_2d() const { return joints2d.size() > 0; }
};

struct Dataset {
  Skeleton skeleton;
  std::vector<Camera> cameras;
  std::vector<PoseSample> samples;

  const Camera& camera(const std::string& id) const;  // SchemaError if absent
  // Checks sample shapes against the skeleton, 3d finiteness, and that
  // every camera_id resolves.
  void validate() const;
};

// Desk-scale stand-in for a mocap corpus: seven subjects (S1, S5, S6, S7,
// S8 train-style / S9, S11 test-style) with per-subject bone-length
// variation, three action styles, poses sampled as a smoothed bounded
// random walk in joint-angle space down the kinematic tree, and
// `n_cameras` pinhole cameras on a ring looking at the scene centre.
// Produces exactly `n_frames` samples; each pose is emitted once per
// camera with exact-projection 2d.
Dataset synth_generate(const Skeleton& skeleton, std::int64_t n_frames,
                       int n_cameras, Rng& rng);

extern const char kDatasetFileMagic[];  // "poselift.dataset.v"
extern const int kDatasetFileVersion;   // 1

// One-sample-per-line text format (documented in the README). Cameras
// travel in their own file; `load_dataset` joins the two and validates
// referential integrity.
void save_dataset(const Dataset& ds, const std::string& path,
                  const std::vector<std::string>& comments = {});
Dataset load_dataset(const std::string& dataset_path,
                     const std::string& cameras_path);

// Partition by subject tag. Tag sets must be disjoint; subjects in
// neither set are dropped.
struct Split {
  Dataset train;
  Dataset test;
};
Split split_by_subject(const Dataset& ds,
                       const std::vector<std::string>& train_subjects,
                       const std::vector<std::string>& test_subjects);

// Preprocessing: 2d input rows are flattened stored (or exactly
// projected) pixel coordinates; 3d target rows are camera-frame (unless
// camera_frame is off — the world-frame ablation), root-centered,
// root-dropped, flattened. Row i corresponds to ds.samples[i].
struct PreprocessOptions {
  bool camera_frame = true;
};

struct PairSet {
  Matrix x2d;  // m x 2*n_input_joints, raw px
  Matrix y3d;  // m x 3*(n_joints-1), mm
};

// The single pipeline both training and evaluation run. Raw-unit output;
// normalize with the training-split NormStats afterwards.
PairSet build_pairs(const Dataset& ds, const PreprocessOptions& opt);

// Per-epoch minibatch index groups: a fresh shuffle per call, every index
// exactly once, all groups of size batch_size except possibly the last,
// which keeps the remainder — except that a lone trailing row is merged
// into the previous batch so batch normalization always sees at least two
// rows. batch_size < 2 is an error for the same reason.
std::vector<std::vector<Index>> batch_indices(Index n_rows, Index batch_size,
                                              Rng& rng);

Matrix take_rows(const Matrix& src, const std::vector<Index>& rows);

}  // namespace poselift
