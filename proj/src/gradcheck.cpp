#include "rcdst/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace rcdst {

GradCheckReport grad_check(const std::function<double()>& loss, const ParameterRefs& params,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  for (auto* p : params) {
    const auto n = static_cast<std::size_t>(p->value.size());
    const std::size_t stride =
        options.max_entries == 0 || n <= options.max_entries ? 1 : n / options.max_entries;
    for (std::size_t i = 0; i < n; i += stride) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + options.step;
      const double up = loss();
      x = saved - options.step;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_relative_error || !std::isfinite(rel)) {
        report.max_relative_error = rel;
        report.worst_parameter = p->name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = std::isfinite(report.max_relative_error) &&
                  report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace rcdst
