#include "poselift/numerics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <string>

namespace poselift {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " * " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
  return a * b;
}

Svd svd(const Matrix& a) {
  if (!a.allFinite()) {
    throw ArgumentError("svd: input has non-finite entries");
  }
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw NumericError("svd: Jacobi iteration did not converge");
  }
  return Svd{dec.matrixU(), dec.singularValues(), Matrix(dec.matrixV().transpose())};
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : state_) {
    word = splitmix64(x);
  }
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) {
    throw ArgumentError("Rng::next_below: bound must be positive");
  }
  return next_u64() % bound;
}

double Rng::gauss(double mean, double stddev) {
  if (stddev < 0.0) {
    throw ArgumentError("Rng::gauss: negative standard deviation");
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix Rng::gauss_matrix(Index rows, Index cols, double mean, double stddev) {
  if (stddev < 0.0) {
    throw ArgumentError("Rng::gauss_matrix: negative standard deviation");
  }
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      out(i, j) = gauss(mean, stddev);
    }
  }
  return out;
}

Rng Rng::fork(std::uint64_t stream) const {
  std::uint64_t x = seed_ ^ (0xA24BAED4963EE407ULL * (stream + 1));
  return Rng(splitmix64(x));
}

}  // namespace poselift
