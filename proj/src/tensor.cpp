#include "rcdst/tensor.hpp"

#include <cmath>

namespace rcdst {

Parameter::Parameter(std::string name_, Eigen::Index rows, Eigen::Index cols, int rank_)
    : name(std::move(name_)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)),
      rank(rank_) {}

std::vector<std::size_t> Parameter::shape() const {
  if (rank == 1) return {static_cast<std::size_t>(value.cols())};
  return {static_cast<std::size_t>(value.rows()), static_cast<std::size_t>(value.cols())};
}

double Rng::uniform(double lo, double hi) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::size_t Rng::below(std::size_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

void init_uniform(const ParameterRefs& params, Rng& rng, double scale) {
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.uniform(-scale, scale);
    p->zero_grad();
  }
}

void zero_grads(const ParameterRefs& params) {
  for (auto* p : params) p->zero_grad();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace rcdst
