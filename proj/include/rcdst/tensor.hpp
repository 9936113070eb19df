#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rcdst {

/// Dense row-major tensor of rank 1 or 2. Rank-1 tensors are 1 x n.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  int rank = 2;

  Parameter() = default;
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols, int rank = 2);

  std::vector<std::size_t> shape() const;
  void zero_grad() { grad.setZero(); }
};

using ParameterRefs = std::vector<Parameter*>;

/// Seeded generator. Draws are computed from raw 64-bit engine output so the
/// sequence is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Fills every parameter with uniform(-scale, scale) in the given order.
void init_uniform(const ParameterRefs& params, Rng& rng, double scale = 0.1);
void zero_grads(const ParameterRefs& params);
bool all_finite(const Matrix& m);

}  // namespace rcdst
