#include "poselift/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include "poselift/textio.hpp"

namespace poselift {

const char kDatasetFileMagic[] = "poselift.dataset.v";
const int kDatasetFileVersion = 1;

std::vector<Index> Skeleton::output_joint_map() const {
  std::vector<Index> out;
  out.reserve(joints.size() - 1);
  for (Index j = 0; j < n_joints(); ++j) {
    if (j != root_idx) out.push_back(j);
  }
  return out;
}

void Skeleton::validate() const {
  const Index n = n_joints();
  if (n < 2) {
    throw ArgumentError("Skeleton: need at least a root and one child");
  }
  if (root_idx < 0 || root_idx >= n) {
    throw ArgumentError("Skeleton: root index out of range");
  }
  if (static_cast<Index>(bone_lengths.size()) != n) {
    throw ArgumentError("Skeleton: bone_lengths must have one entry per joint");
  }
  for (Index j = 0; j < n; ++j) {
    const int parent = joints[j].parent;
    if (j == root_idx) {
      if (parent != -1) {
        throw ArgumentError("Skeleton: root joint must have parent -1");
      }
      continue;
    }
    if (parent < 0 || parent >= n) {
      throw ArgumentError("Skeleton: joint '" + joints[j].name +
                          "' has parent index out of range");
    }
    if (!(bone_lengths[j] > 0.0)) {
      throw ArgumentError("Skeleton: joint '" + joints[j].name +
                          "' needs a positive bone length");
    }
    // Walk to the root; a cycle or a detached subtree never reaches it.
    Index cur = j;
    for (Index hops = 0; cur != root_idx; ++hops) {
      if (hops > n) {
        throw ArgumentError("Skeleton: joint '" + joints[j].name +
                            "' is not connected to the root (cycle?)");
      }
      cur = joints[cur].parent;
    }
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  if (input_joint_map.empty()) {
    throw ArgumentError("Skeleton: input joint map is empty");
  }
  for (Index idx : input_joint_map) {
    if (idx < 0 || idx >= n) {
      throw ArgumentError("Skeleton: input joint map index out of range");
    }
    if (seen[static_cast<std::size_t>(idx)]) {
      throw ArgumentError("Skeleton: input joint map repeats a joint");
    }
    seen[static_cast<std::size_t>(idx)] = true;
  }
}

Skeleton Skeleton::human17() {
  Skeleton s;
  // name, parent, bone length (mm). Index order is topological.
  const struct {
    const char* name;
    int parent;
    double length;
  } rows[] = {
      {"hip", -1, 0.0},           // 0, root
      {"right_hip", 0, 132.0},    // 1
      {"right_knee", 1, 442.0},   // 2
      {"right_ankle", 2, 434.0},  // 3
      {"left_hip", 0, 132.0},     // 4
      {"left_knee", 4, 442.0},    // 5
      {"left_ankle", 5, 434.0},   // 6
      {"spine", 0, 233.0},        // 7
      {"thorax", 7, 257.0},       // 8
      {"neck", 8, 121.0},         // 9
      {"head", 9, 115.0},         // 10
      {"left_shoulder", 8, 150.0},   // 11
      {"left_elbow", 11, 279.0},     // 12
      {"left_wrist", 12, 252.0},     // 13
      {"right_shoulder", 8, 150.0},  // 14
      {"right_elbow", 14, 279.0},    // 15
      {"right_wrist", 15, 252.0},    // 16
  };
  for (const auto& row : rows) {
    s.joints.push_back({row.name, row.parent});
    s.bone_lengths.push_back(row.length);
  }
  s.root_idx = 0;
  // The 2d input skips the spine, mimicking a detector joint set that is
  // smaller than the 3d skeleton.
  for (Index j = 0; j < s.n_joints(); ++j) {
    if (s.joints[j].name != "spine") s.input_joint_map.push_back(j);
  }
  s.validate();
  return s;
}

bool operator==(const Skeleton::Joint& a, const Skeleton::Joint& b) {
  return a.name == b.name && a.parent == b.parent;
}

bool operator==(const Skeleton& a, const Skeleton& b) {
  return a.joints == b.joints && a.root_idx == b.root_idx &&
         a.bone_lengths == b.bone_lengths &&
         a.input_joint_map == b.input_joint_map;
}

const Camera& Dataset::camera(const std::string& id) const {
  for (const auto& cam : cameras) {
    if (cam.id == id) return cam;
  }
  throw SchemaError("dataset references unknown camera '" + id + "'");
}

void Dataset::validate() const {
  skeleton.validate();
  for (const auto& cam : cameras) cam.validate();
  const Index n = skeleton.n_joints();
  const Index k = skeleton.n_input_joints();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string where = "sample " + std::to_string(i) + " (" +
                              s.subject + "/" + s.action + ")";
    if (s.joints3d_world.rows() != n || s.joints3d_world.cols() != 3) {
      throw SchemaError(where + ": 3d joints are " +
                        std::to_string(s.joints3d_world.rows()) + "x" +
                        std::to_string(s.joints3d_world.cols()) +
                        ", skeleton has " + std::to_string(n) + " joints");
    }
    if (!s.joints3d_world.allFinite()) {
      throw SchemaError(where + ": non-finite 3d coordinates");
    }
    if (s.has_2d() && (s.joints2d.rows() != k || s.joints2d.cols() != 2)) {
      throw SchemaError(where + ": 2d joints are " +
                        std::to_string(s.joints2d.rows()) + "x" +
                        std::to_string(s.joints2d.cols()) + ", input map has " +
                        std::to_string(k) + " joints");
    }
    camera(s.camera_id);  // throws on a dangling reference
  }
}

namespace {

// ---- synthetic generator ------------------------------------------------

const char* kSubjects[] = {"S1", "S5", "S6", "S7", "S8", "S9", "S11"};

struct ActionSpec {
  const char* tag;
  double angle_scale;  // multiplies every joint-angle limit
  double walk_scale;   // root wander amplitude, mm
};
const ActionSpec kActions[] = {
    {"calm", 0.35, 60.0},
    {"walk", 1.0, 420.0},
    {"gesture", 0.7, 150.0},
};

constexpr double kRootHeight = 900.0;  // pelvis above ground, mm
constexpr double kRingRadius = 4000.0;
constexpr double kFocalPx = 1150.0;
constexpr double kPrincipalPx = 500.0;

// Rest-pose bone direction (parent -> joint, unit) and the angle limit
// (radians) of the rotation applied to that bone. Joints not named here
// fall back to a direction cycled by index and a 0.4 rad limit, so custom
// skeletons still generate something bounded.
struct JointStyle {
  Eigen::Vector3d rest_dir;
  double angle_limit;
};

JointStyle joint_style(const Skeleton& sk, Index j) {
  static const std::unordered_map<std::string, JointStyle> table = {
      {"right_hip", {{0, -1, 0}, 0.45}},
      {"right_knee", {{0, 0, -1}, 0.8}},
      {"right_ankle", {{0, 0, -1}, 0.35}},
      {"left_hip", {{0, 1, 0}, 0.45}},
      {"left_knee", {{0, 0, -1}, 0.8}},
      {"left_ankle", {{0, 0, -1}, 0.35}},
      {"spine", {{0, 0, 1}, 0.15}},
      {"thorax", {{0, 0, 1}, 0.15}},
      {"neck", {{0, 0, 1}, 0.25}},
      {"head", {{0, 0, 1}, 0.3}},
      {"left_shoulder", {{0, 1, 0}, 0.3}},
      {"left_elbow", {{0, 1, 0}, 0.85}},
      {"left_wrist", {{0, 1, 0}, 0.4}},
      {"right_shoulder", {{0, -1, 0}, 0.3}},
      {"right_elbow", {{0, -1, 0}, 0.85}},
      {"right_wrist", {{0, -1, 0}, 0.4}},
  };
  auto it = table.find(sk.joints[j].name);
  if (it != table.end()) return it->second;
  static const Eigen::Vector3d fallback[6] = {
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
  return {fallback[j % 6], 0.4};
}

// Parents-before-children traversal order (breadth-first from the root).
std::vector<Index> topo_order(const Skeleton& sk) {
  std::vector<std::vector<Index>> children(sk.joints.size());
  for (Index j = 0; j < sk.n_joints(); ++j) {
    if (j != sk.root_idx) {
      children[static_cast<std::size_t>(sk.joints[j].parent)].push_back(j);
    }
  }
  std::vector<Index> order;
  order.reserve(sk.joints.size());
  order.push_back(sk.root_idx);
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (Index c : children[static_cast<std::size_t>(order[head])]) {
      order.push_back(c);
    }
  }
  return order;
}

Eigen::Matrix3d euler_zyx(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

// Bounded AR(1) step: smooth, mean-reverting, always inside [-1, 1].
double walk_step(double s, Rng& rng) {
  return std::clamp(0.9 * s + 0.3 * rng.gauss(0.0, 1.0), -1.0, 1.0);
}

// Generates one (subject, action) sequence. Bone lengths arrive already
// scaled for the subject.
std::vector<Matrix> generate_sequence(const Skeleton& sk,
                                      const std::vector<double>& bones,
                                      const std::vector<Index>& order,
                                      const ActionSpec& action,
                                      Index n_poses, Rng& rng) {
  const Index n = sk.n_joints();
  Matrix angle_state = Matrix::Zero(n, 3);
  double yaw = rng.uniform() * 2.0 * std::numbers::pi;
  Eigen::Vector3d root_state = Eigen::Vector3d::Zero();  // AR(1) in [-1,1]^3

  std::vector<Matrix> poses;
  poses.reserve(static_cast<std::size_t>(n_poses));
  for (Index f = 0; f < n_poses; ++f) {
    yaw += 0.05 * rng.gauss(0.0, 1.0);
    for (int a = 0; a < 3; ++a) {
      root_state[a] = walk_step(root_state[a], rng);
    }
    for (Index j = 0; j < n; ++j) {
      if (j == sk.root_idx) continue;
      for (int a = 0; a < 3; ++a) {
        angle_state(j, a) = walk_step(angle_state(j, a), rng);
      }
    }

    const Eigen::Vector3d root_pos(action.walk_scale * root_state.x(),
                                   action.walk_scale * root_state.y(),
                                   kRootHeight + 40.0 * root_state.z());
    std::vector<Eigen::Matrix3d> orient(static_cast<std::size_t>(n));
    Matrix pose(n, 3);
    for (Index j : order) {
      if (j == sk.root_idx) {
        orient[static_cast<std::size_t>(j)] = euler_zyx(0.0, 0.0, yaw);
        pose.row(j) = root_pos.transpose();
        continue;
      }
      const auto style = joint_style(sk, j);
      const double lim = style.angle_limit * action.angle_scale;
      const Eigen::Matrix3d local = euler_zyx(lim * angle_state(j, 0),
                                              lim * angle_state(j, 1),
                                              lim * angle_state(j, 2));
      const auto parent = static_cast<std::size_t>(sk.joints[j].parent);
      orient[static_cast<std::size_t>(j)] = orient[parent] * local;
      const Eigen::Vector3d offset =
          orient[static_cast<std::size_t>(j)] *
          (bones[static_cast<std::size_t>(j)] * style.rest_dir);
      pose.row(j) = pose.row(sk.joints[j].parent) + offset.transpose();
    }
    poses.push_back(std::move(pose));
  }
  return poses;
}

std::vector<Camera> ring_cameras(int n_cameras, Rng& rng) {
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(n_cameras));
  const Eigen::Vector3d target(0.0, 0.0, kRootHeight);
  for (int i = 0; i < n_cameras; ++i) {
    const double theta =
        2.0 * std::numbers::pi * (static_cast<double>(i) / n_cameras) +
        0.15 * (rng.uniform() - 0.5);
    const double radius = kRingRadius + 200.0 * (rng.uniform() - 0.5);
    const double height = 1400.0 + 400.0 * rng.uniform();
    const Eigen::Vector3d pos(radius * std::cos(theta),
                              radius * std::sin(theta), height);
    const Eigen::Vector3d z_cam = (target - pos).normalized();
    const Eigen::Vector3d x_cam =
        Eigen::Vector3d::UnitZ().cross(z_cam).normalized();
    const Eigen::Vector3d y_cam = z_cam.cross(x_cam);
    Camera cam;
    cam.id = "cam" + std::to_string(i);
    cam.r.row(0) = x_cam;
    cam.r.row(1) = y_cam;
    cam.r.row(2) = z_cam;
    cam.t = pos;
    cam.f = Eigen::Vector2d(kFocalPx, kFocalPx);
    cam.c = Eigen::Vector2d(kPrincipalPx, kPrincipalPx);
    cam.validate();
    cams.push_back(std::move(cam));
  }
  return cams;
}

Matrix select_rows(const Matrix& src, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = src.row(rows[i]);
  }
  return out;
}

}  // namespace

Dataset synth_generate(const Skeleton& skeleton, std::int64_t n_frames,
                       int n_cameras, Rng& rng) {
  skeleton.validate();
  if (n_frames < 1) {
    throw ArgumentError("synth_generate: n_frames must be at least 1");
  }
  if (n_cameras < 1) {
    throw ArgumentError("synth_generate: n_cameras must be at least 1");
  }

  Dataset ds;
  ds.skeleton = skeleton;
  ds.cameras = ring_cameras(n_cameras, rng);

  // One pose yields one sample per camera; sequence lengths split the pose
  // budget as evenly as possible across subject x action.
  const std::int64_t n_poses = (n_frames + n_cameras - 1) / n_cameras;
  constexpr int kNumSubjects = static_cast<int>(std::size(kSubjects));
  constexpr int kNumActions = static_cast<int>(std::size(kActions));
  const int n_sequences = kNumSubjects * kNumActions;
  const std::vector<Index> order = topo_order(skeleton);

  ds.samples.reserve(static_cast<std::size_t>(n_frames));
  std::int64_t emitted = 0;
  for (int si = 0; si < kNumSubjects && emitted < n_frames; ++si) {
    // Subject identity: every bone scaled by its own factor in [0.9, 1.1].
    Rng subject_rng = rng.fork(static_cast<std::uint64_t>(si + 1));
    std::vector<double> bones = skeleton.bone_lengths;
    for (Index j = 0; j < skeleton.n_joints(); ++j) {
      if (j != skeleton.root_idx) {
        bones[static_cast<std::size_t>(j)] *=
            0.9 + 0.2 * subject_rng.uniform();
      }
    }
    for (int ai = 0; ai < kNumActions && emitted < n_frames; ++ai) {
      const int seq = si * kNumActions + ai;
      const std::int64_t seq_len =
          n_poses / n_sequences + (seq < n_poses % n_sequences ? 1 : 0);
      Rng seq_rng = subject_rng.fork(static_cast<std::uint64_t>(100 + ai));
      const auto poses = generate_sequence(skeleton, bones, order,
                                           kActions[ai], seq_len, seq_rng);
      for (std::size_t f = 0; f < poses.size() && emitted < n_frames; ++f) {
        for (const auto& cam : ds.cameras) {
          if (emitted >= n_frames) break;
          PoseSample s;
          s.subject = kSubjects[si];
          s.action = kActions[ai].tag;
          s.camera_id = cam.id;
          s.frame = static_cast<std::int64_t>(f);
          s.joints3d_world = poses[f];
          s.joints2d = project(
              select_rows(world_to_camera(poses[f], cam),
                          skeleton.input_joint_map),
              cam);
          ds.samples.push_back(std::move(s));
          ++emitted;
        }
      }
    }
  }
  ds.validate();
  return ds;
}

// ---- file IO --------------------------------------------------------------

namespace {

void require_tag(const std::string& tag, const char* field) {
  if (tag.empty() || tag.find_first_of(" \t\n") != std::string::npos) {
    throw ArgumentError(std::string("save_dataset: ") + field +
                        " tag must be nonempty and whitespace-free, got '" +
                        tag + "'");
  }
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path,
                  const std::vector<std::string>& comments) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << kDatasetFileMagic << kDatasetFileVersion << "\n";
  for (const auto& line : comments) {
    out << "# " << line << "\n";
  }
  const auto& sk = ds.skeleton;
  out << "skeleton " << sk.n_joints() << " " << sk.root_idx << "\n";
  for (Index j = 0; j < sk.n_joints(); ++j) {
    require_tag(sk.joints[j].name, "joint name");
    out << "joint " << sk.joints[j].name << " " << sk.joints[j].parent << " "
        << format_double(sk.bone_lengths[static_cast<std::size_t>(j)]) << "\n";
  }
  out << "inputmap " << sk.n_input_joints();
  for (Index idx : sk.input_joint_map) out << " " << idx;
  out << "\n";
  for (const auto& s : ds.samples) {
    require_tag(s.subject, "subject");
    require_tag(s.action, "action");
    require_tag(s.camera_id, "camera_id");
    out << "sample " << s.subject << " " << s.action << " " << s.camera_id
        << " " << s.frame;
    for (Index i = 0; i < s.joints3d_world.rows(); ++i) {
      for (Index j = 0; j < 3; ++j) {
        out << " " << format_double(s.joints3d_world(i, j));
      }
    }
    if (s.has_2d()) {
      out << " 2d";
      for (Index i = 0; i < s.joints2d.rows(); ++i) {
        out << " " << format_double(s.joints2d(i, 0)) << " "
            << format_double(s.joints2d(i, 1));
      }
    }
    out << "\n";
  }
  if (!out.flush()) {
    throw IoError("failed writing '" + path + "'");
  }
}

Dataset load_dataset(const std::string& dataset_path,
                     const std::string& cameras_path) {
  std::ifstream in(dataset_path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset file '" + dataset_path + "'");
  }
  std::string line;
  std::int64_t line_no = 0;
  auto where = [&] { return dataset_path + ":" + std::to_string(line_no); };
  auto next_record = [&](std::vector<std::string_view>& tokens,
                         std::string& storage) -> bool {
    while (std::getline(in, storage)) {
      ++line_no;
      tokens = split_tokens(storage);
      if (tokens.empty() || tokens[0].starts_with('#')) continue;
      return true;
    }
    return false;
  };

  if (!std::getline(in, line)) {
    throw ParseError(dataset_path + ": empty dataset file");
  }
  ++line_no;
  check_schema_header(line, kDatasetFileMagic, kDatasetFileVersion, where());

  Dataset ds;
  ds.cameras = load_cameras(cameras_path);

  std::vector<std::string_view> tok;
  std::string storage;
  if (!next_record(tok, storage) || tok[0] != "skeleton" || tok.size() != 3) {
    throw ParseError(where() + ": expected 'skeleton <n_joints> <root_idx>'");
  }
  const auto n_joints = parse_int(tok[1], where());
  ds.skeleton.root_idx = parse_int(tok[2], where());
  if (n_joints < 2) {
    throw ParseError(where() + ": implausible joint count " +
                     format_int(n_joints));
  }
  for (std::int64_t j = 0; j < n_joints; ++j) {
    if (!next_record(tok, storage) || tok[0] != "joint" || tok.size() != 4) {
      throw ParseError(where() + ": expected 'joint <name> <parent> <length>'");
    }
    ds.skeleton.joints.push_back(
        {std::string(tok[1]), static_cast<int>(parse_int(tok[2], where()))});
    ds.skeleton.bone_lengths.push_back(parse_double(tok[3], where()));
  }
  if (!next_record(tok, storage) || tok[0] != "inputmap" || tok.size() < 2) {
    throw ParseError(where() + ": expected 'inputmap <count> <indices…>'");
  }
  const auto n_in = parse_int(tok[1], where());
  if (static_cast<std::int64_t>(tok.size()) != 2 + n_in) {
    throw ParseError(where() + ": inputmap promises " + format_int(n_in) +
                     " indices, line has " + std::to_string(tok.size() - 2));
  }
  for (std::int64_t i = 0; i < n_in; ++i) {
    ds.skeleton.input_joint_map.push_back(
        parse_int(tok[2 + static_cast<std::size_t>(i)], where()));
  }
  try {
    ds.skeleton.validate();
  } catch (const ArgumentError& e) {
    throw SchemaError(dataset_path + ": " + e.what());
  }

  const std::size_t n3 = static_cast<std::size_t>(3 * n_joints);
  const std::size_t n2 = static_cast<std::size_t>(2 * n_in);
  while (next_record(tok, storage)) {
    if (tok[0] != "sample") {
      throw ParseError(where() + ": unknown record '" + std::string(tok[0]) +
                       "'");
    }
    const std::size_t base = 5;  // sample subject action camera frame
    if (tok.size() != base + n3 && tok.size() != base + n3 + 1 + n2) {
      throw ParseError(where() + ": sample record has " +
                       std::to_string(tok.size()) + " fields, expected " +
                       std::to_string(base + n3) + " or " +
                       std::to_string(base + n3 + 1 + n2));
    }
    PoseSample s;
    s.subject = std::string(tok[1]);
    s.action = std::string(tok[2]);
    s.camera_id = std::string(tok[3]);
    s.frame = parse_int(tok[4], where());
    s.joints3d_world.resize(n_joints, 3);
    std::size_t k = base;
    for (std::int64_t i = 0; i < n_joints; ++i) {
      for (int j = 0; j < 3; ++j) {
        s.joints3d_world(i, j) = parse_double(tok[k++], where());
      }
    }
    if (tok.size() > base + n3) {
      if (tok[k] != "2d") {
        throw ParseError(where() + ": expected '2d' marker, got '" +
                         std::string(tok[k]) + "'");
      }
      ++k;
      s.joints2d.resize(n_in, 2);
      for (std::int64_t i = 0; i < n_in; ++i) {
        s.joints2d(i, 0) = parse_double(tok[k++], where());
        s.joints2d(i, 1) = parse_double(tok[k++], where());
      }
    }
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

Split split_by_subject(const Dataset& ds,
                       const std::vector<std::string>& train_subjects,
                       const std::vector<std::string>& test_subjects) {
  for (const auto& tag : train_subjects) {
    if (std::find(test_subjects.begin(), test_subjects.end(), tag) !=
        test_subjects.end()) {
      throw ArgumentError("split_by_subject: subject '" + tag +
                          "' appears in both train and test tags");
    }
  }
  auto contains = [](const std::vector<std::string>& tags,
                     const std::string& tag) {
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
  };
  Split split;
  split.train.skeleton = ds.skeleton;
  split.train.cameras = ds.cameras;
  split.test.skeleton = ds.skeleton;
  split.test.cameras = ds.cameras;
  for (const auto& s : ds.samples) {
    if (contains(train_subjects, s.subject)) {
      split.train.samples.push_back(s);
    } else if (contains(test_subjects, s.subject)) {
      split.test.samples.push_back(s);
    }
  }
  return split;
}

PairSet build_pairs(const Dataset& ds, const PreprocessOptions& opt) {
  ds.validate();
  const auto& sk = ds.skeleton;
  const auto out_map = sk.output_joint_map();
  const Index m = static_cast<Index>(ds.samples.size());
  PairSet pairs;
  pairs.x2d.resize(m, 2 * sk.n_input_joints());
  pairs.y3d.resize(m, 3 * sk.n_output_joints());
  for (Index i = 0; i < m; ++i) {
    const auto& s = ds.samples[static_cast<std::size_t>(i)];
    const Camera& cam = ds.camera(s.camera_id);

    // Target: optionally into the camera frame, then root-center and drop
    // the root. Skipping the camera transform leaves world-frame targets
    // (the "arbitrary global frame" ablation).
    Matrix p3 = opt.camera_frame ? world_to_camera(s.joints3d_world, cam)
                                 : s.joints3d_world;
    p3 = root_center(p3, sk.root_idx);
    for (std::size_t j = 0; j < out_map.size(); ++j) {
      pairs.y3d.block(i, static_cast<Index>(3 * j), 1, 3) =
          p3.row(out_map[j]);
    }

    // Input: the stored 2d observation, or the exact projection when no
    // detector output is present.
    Matrix uv = s.has_2d()
                    ? s.joints2d
                    : project(select_rows(world_to_camera(s.joints3d_world, cam),
                                          sk.input_joint_map),
                              cam);
    for (Index j = 0; j < sk.n_input_joints(); ++j) {
      pairs.x2d(i, 2 * j) = uv(j, 0);
      pairs.x2d(i, 2 * j + 1) = uv(j, 1);
    }
  }
  return pairs;
}

std::vector<std::vector<Index>> batch_indices(Index n_rows, Index batch_size,
                                              Rng& rng) {
  if (batch_size < 2) {
    throw ArgumentError(
        "batch_indices: batch_size must be at least 2 (batch norm needs "
        "more than one row)");
  }
  if (n_rows < 2) {
    throw ArgumentError("batch_indices: need at least 2 rows, got " +
                        std::to_string(n_rows));
  }
  std::vector<Index> perm(static_cast<std::size_t>(n_rows));
  for (Index i = 0; i < n_rows; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);

  std::vector<std::vector<Index>> batches;
  for (Index start = 0; start < n_rows; start += batch_size) {
    const Index end = std::min(start + batch_size, n_rows);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  // A lone trailing row would break batch normalization; fold it into the
  // previous batch instead of dropping it.
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

Matrix take_rows(const Matrix& src, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= src.rows()) {
      throw ArgumentError("take_rows: index out of range");
    }
    out.row(static_cast<Index>(i)) = src.row(rows[i]);
  }
  return out;
}

}  // namespace poselift
