#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/numerics.hpp"

namespace poselift {

// Analytic-vs-central-difference verification of every backward pass:
// each layer type in isolation (train mode, live batch statistics for
// batch norm) and the composed network (h=8, one block, batch 4, dropout
// masks and batch-norm statistics frozen so the loss is a deterministic
// function of the parameters). Relative error per element is
// |a - n| / max(|a| + |n|, 1e-8).

constexpr double kGradCheckStep = 1e-5;  // central-difference half-step
constexpr double kGradCheckTol = 1e-4;   // max relative error allowed

struct GradCheckEntry {
  std::string name;  // "linear", "batch_norm", "batch_norm_frozen",
                     // "dropout", "relu", "composed"
  double max_rel_err = 0.0;
};

std::vector<GradCheckEntry> run_gradcheck(std::uint64_t seed);

// True when every entry is under kGradCheckTol.
bool gradcheck_passed(const std::vector<GradCheckEntry>& entries);

}  // namespace poselift
