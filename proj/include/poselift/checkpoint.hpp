#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/data.hpp"
#include "poselift/geometry.hpp"
#include "poselift/network.hpp"

namespace poselift {

// Everything a later process needs to rerun or audit the run that
// produced this model.
struct CheckpointMeta {
  std::string provenance;  // resolved run configuration, verbatim text
  std::uint64_t fingerprint = 0;  // fnv1a64 of provenance
  std::uint64_t seed = 0;
  bool camera_frame = true;  // preprocessing used camera-frame targets
  bool aborted = false;      // training stopped on a non-finite loss
};

struct NamedTensor {
  std::string name;
  Matrix data;  // vectors stored as n x 1
};

// A trained model, frozen: configuration, the skeleton it was trained on,
// the training-split normalization statistics, and every parameter and
// running-statistic tensor. Binary little-endian file, bit-exact through
// save/load.
struct Checkpoint {
  CheckpointMeta meta;
  NetworkConfig config;
  Skeleton skeleton;
  NormStats stats;
  std::vector<NamedTensor> tensors;
};

extern const char kCheckpointMagic[8];  // "PLIFTCP1"

// Snapshots the network's current state_tensors().
Checkpoint make_checkpoint(Network& net, const Skeleton& skeleton,
                           const NormStats& stats, const CheckpointMeta& meta);

void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Builds a network from the checkpoint's config and installs every tensor
// by name. Missing, extra, or misshapen tensors are SchemaErrors.
Network restore_network(const Checkpoint& cp);

}  // namespace poselift
