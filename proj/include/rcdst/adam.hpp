#pragma once

#include <cstdint>
#include <vector>

#include "rcdst/tensor.hpp"

namespace rcdst {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moments are allocated on the first step and keyed by
/// position in the parameter list, so callers must pass the same list in the
/// same order every step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const ParameterRefs& params);
  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t steps_ = 0;
};

}  // namespace rcdst
