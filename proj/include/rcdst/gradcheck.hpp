#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "rcdst/tensor.hpp"

namespace rcdst {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  /// Gradients smaller than this are compared in absolute terms.
  double floor = 1e-4;
  /// Checks at most this many entries per parameter (evenly strided); 0 = all.
  std::size_t max_entries = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

/// Compares the analytic gradients already stored in `params` with central
/// differences of `loss`. Parameter values are restored afterwards.
/// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const std::function<double()>& loss, const ParameterRefs& params,
                           const GradCheckOptions& options = {});

}  // namespace rcdst
