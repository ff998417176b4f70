#include "poselift/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace poselift {

const char kCheckpointMagic[8] = {'P', 'L', 'I', 'F', 'T', 'C', 'P', '1'};

namespace {

constexpr std::uint32_t kVersion = 1;
// Guards length fields against garbage when a wrong or corrupt file is
// read: nothing in a checkpoint legitimately exceeds this.
constexpr std::uint64_t kSaneLength = 1ULL << 33;

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, buf, 8);
}

void put_i64(std::ostream& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  put_bytes(out, s.data(), s.size());
}

void get_bytes(std::istream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ParseError(std::string("checkpoint truncated while reading ") +
                     what);
  }
}

std::uint64_t get_u64(std::istream& in, const char* what) {
  unsigned char buf[8];
  get_bytes(in, buf, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

std::int64_t get_i64(std::istream& in, const char* what) {
  return static_cast<std::int64_t>(get_u64(in, what));
}

double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_u64(in, what));
}

std::string get_str(std::istream& in, const char* what) {
  const std::uint64_t n = get_u64(in, what);
  if (n > kSaneLength) {
    throw ParseError(std::string("checkpoint: implausible length for ") +
                     what);
  }
  std::string s(static_cast<std::size_t>(n), '\0');
  get_bytes(in, s.data(), s.size(), what);
  return s;
}

void put_vector(std::ostream& out, const Vector& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

Vector get_vector(std::istream& in, const char* what) {
  const std::uint64_t n = get_u64(in, what);
  if (n > kSaneLength) {
    throw ParseError(std::string("checkpoint: implausible length for ") +
                     what);
  }
  Vector v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v[i] = get_f64(in, what);
  return v;
}

}  // namespace

Checkpoint make_checkpoint(Network& net, const Skeleton& skeleton,
                           const NormStats& stats,
                           const CheckpointMeta& meta) {
  Checkpoint cp;
  cp.meta = meta;
  cp.config = net.config();
  cp.skeleton = skeleton;
  cp.stats = stats;
  for (const auto& ref : net.state_tensors()) {
    NamedTensor t;
    t.name = ref.name;
    t.data = Eigen::Map<const Matrix>(ref.value, ref.rows, ref.cols);
    cp.tensors.push_back(std::move(t));
  }
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  put_bytes(out, kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u64(out, kVersion);

  put_str(out, cp.meta.provenance);
  put_u64(out, cp.meta.fingerprint);
  put_u64(out, cp.meta.seed);
  put_u64(out, cp.meta.camera_frame ? 1 : 0);
  put_u64(out, cp.meta.aborted ? 1 : 0);

  const auto& c = cp.config;
  put_i64(out, c.n_in_joints);
  put_i64(out, c.n_out_joints);
  put_i64(out, c.hidden_dim);
  put_i64(out, c.n_blocks);
  put_f64(out, c.keep_prob);
  put_u64(out, c.batch_norm ? 1 : 0);
  put_u64(out, c.residual ? 1 : 0);
  put_f64(out, c.bn_eps);
  put_f64(out, c.bn_momentum);

  const auto& sk = cp.skeleton;
  put_u64(out, static_cast<std::uint64_t>(sk.n_joints()));
  put_i64(out, sk.root_idx);
  for (Index j = 0; j < sk.n_joints(); ++j) {
    put_str(out, sk.joints[static_cast<std::size_t>(j)].name);
    put_i64(out, sk.joints[static_cast<std::size_t>(j)].parent);
    put_f64(out, sk.bone_lengths[static_cast<std::size_t>(j)]);
  }
  put_u64(out, static_cast<std::uint64_t>(sk.input_joint_map.size()));
  for (Index idx : sk.input_joint_map) put_i64(out, idx);

  put_vector(out, cp.stats.mean2d);
  put_vector(out, cp.stats.std2d);
  put_vector(out, cp.stats.mean3d);
  put_vector(out, cp.stats.std3d);

  put_u64(out, cp.tensors.size());
  for (const auto& t : cp.tensors) {
    put_str(out, t.name);
    put_u64(out, static_cast<std::uint64_t>(t.data.rows()));
    put_u64(out, static_cast<std::uint64_t>(t.data.cols()));
    for (Index i = 0; i < t.data.rows(); ++i) {
      for (Index j = 0; j < t.data.cols(); ++j) {
        put_f64(out, t.data(i, j));
      }
    }
  }
  if (!out.flush()) {
    throw IoError("failed writing '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint '" + path + "'");
  }
  char magic[8];
  get_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw SchemaError(path + ": not a checkpoint file (bad magic)");
  }
  const std::uint64_t version = get_u64(in, "version");
  if (version < 1 || version > kVersion) {
    throw SchemaError(path + ": checkpoint version " +
                      std::to_string(version) +
                      " not supported (reader handles up to " +
                      std::to_string(kVersion) + ")");
  }

  Checkpoint cp;
  cp.meta.provenance = get_str(in, "provenance");
  cp.meta.fingerprint = get_u64(in, "fingerprint");
  cp.meta.seed = get_u64(in, "seed");
  cp.meta.camera_frame = get_u64(in, "camera_frame flag") != 0;
  cp.meta.aborted = get_u64(in, "aborted flag") != 0;

  auto& c = cp.config;
  c.n_in_joints = static_cast<int>(get_i64(in, "n_in_joints"));
  c.n_out_joints = static_cast<int>(get_i64(in, "n_out_joints"));
  c.hidden_dim = static_cast<int>(get_i64(in, "hidden_dim"));
  c.n_blocks = static_cast<int>(get_i64(in, "n_blocks"));
  c.keep_prob = get_f64(in, "keep_prob");
  c.batch_norm = get_u64(in, "batch_norm flag") != 0;
  c.residual = get_u64(in, "residual flag") != 0;
  c.bn_eps = get_f64(in, "bn_eps");
  c.bn_momentum = get_f64(in, "bn_momentum");

  auto& sk = cp.skeleton;
  const std::uint64_t n_joints = get_u64(in, "joint count");
  if (n_joints > kSaneLength) {
    throw ParseError(path + ": implausible joint count");
  }
  sk.root_idx = get_i64(in, "root index");
  for (std::uint64_t j = 0; j < n_joints; ++j) {
    Skeleton::Joint joint;
    joint.name = get_str(in, "joint name");
    joint.parent = static_cast<int>(get_i64(in, "joint parent"));
    sk.joints.push_back(std::move(joint));
    sk.bone_lengths.push_back(get_f64(in, "bone length"));
  }
  const std::uint64_t n_in = get_u64(in, "input map size");
  if (n_in > n_joints) {
    throw ParseError(path + ": input map larger than skeleton");
  }
  for (std::uint64_t i = 0; i < n_in; ++i) {
    sk.input_joint_map.push_back(get_i64(in, "input map entry"));
  }

  cp.stats.mean2d = get_vector(in, "mean2d");
  cp.stats.std2d = get_vector(in, "std2d");
  cp.stats.mean3d = get_vector(in, "mean3d");
  cp.stats.std3d = get_vector(in, "std3d");

  const std::uint64_t n_tensors = get_u64(in, "tensor count");
  if (n_tensors > kSaneLength) {
    throw ParseError(path + ": implausible tensor count");
  }
  for (std::uint64_t k = 0; k < n_tensors; ++k) {
    NamedTensor t;
    t.name = get_str(in, "tensor name");
    const std::uint64_t rows = get_u64(in, "tensor rows");
    const std::uint64_t cols = get_u64(in, "tensor cols");
    constexpr std::uint64_t kMaxDim = 1ULL << 24;
    if (rows > kMaxDim || cols > kMaxDim || rows * cols > kSaneLength) {
      throw ParseError(path + ": implausible tensor shape for '" + t.name +
                       "'");
    }
    t.data.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < t.data.rows(); ++i) {
      for (Index j = 0; j < t.data.cols(); ++j) {
        t.data(i, j) = get_f64(in, "tensor data");
      }
    }
    cp.tensors.push_back(std::move(t));
  }
  try {
    cp.skeleton.validate();
  } catch (const ArgumentError& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return cp;
}

Network restore_network(const Checkpoint& cp) {
  Network net(cp.config);
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& t : cp.tensors) {
    if (!by_name.emplace(t.name, &t).second) {
      throw SchemaError("checkpoint: duplicate tensor '" + t.name + "'");
    }
  }
  std::size_t used = 0;
  for (auto& ref : net.state_tensors()) {
    auto it = by_name.find(ref.name);
    if (it == by_name.end()) {
      throw SchemaError("checkpoint: missing tensor '" + ref.name + "'");
    }
    const Matrix& src = it->second->data;
    if (src.rows() != ref.rows || src.cols() != ref.cols) {
      throw SchemaError("checkpoint: tensor '" + ref.name + "' is " +
                        std::to_string(src.rows()) + "x" +
                        std::to_string(src.cols()) + ", network expects " +
                        std::to_string(ref.rows) + "x" +
                        std::to_string(ref.cols));
    }
    Eigen::Map<Matrix>(ref.value, ref.rows, ref.cols) = src;
    ++used;
  }
  if (used != cp.tensors.size()) {
    throw SchemaError("checkpoint: " +
                      std::to_string(cp.tensors.size() - used) +
                      " tensor(s) do not belong to this architecture");
  }
  return net;
}

}  // namespace poselift
