#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "poselift/error.hpp"

namespace poselift {

// All numeric state is dense, 64-bit and row-major.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Checked matrix product. Throws ShapeError on inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

struct Svd {
  Matrix u;   // m x k, orthonormal columns
  Vector s;   // k, nonincreasing, nonnegative
  Matrix vt;  // k x n, orthonormal rows
};

// Thin singular value decomposition, a = u * diag(s) * vt.
// Backed by Eigen's two-sided Jacobi SVD.
Svd svd(const Matrix& a);

// Deterministic random stream: xoshiro256++ seeded through splitmix64.
// A fixed seed yields the same draw sequence on every run. Never share one
// instance between concurrent tasks; derive per-task streams with fork().
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53 significant bits.
  double uniform();

  // Integer in [0, bound). bound must be positive.
  std::uint64_t next_below(std::uint64_t bound);

  // One normal draw via Box-Muller; consumes two uniforms.
  double gauss(double mean, double stddev);

  // rows x cols matrix of i.i.d. normal draws, filled in row-major order.
  Matrix gauss_matrix(Index rows, Index cols, double mean, double stddev);

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[static_cast<std::size_t>(next_below(i))]);
    }
  }

  // Independent child stream derived from the seed, not the current state:
  // fork(k) is the same stream no matter how much the parent has drawn.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace poselift
