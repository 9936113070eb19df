#include "rcdst/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace rcdst {

void Adam::step(const ParameterRefs& params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("adam: parameter list changed");
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw std::logic_error("adam: shape of " + p.name + " changed");
    }
    const auto n = p.value.size();
    double* val = p.value.data();
    const double* g = p.grad.data();
    double* md = m.data();
    double* vd = v.data();
    for (Eigen::Index i = 0; i < n; ++i) {
      md[i] = b1 * md[i] + (1.0 - b1) * g[i];
      vd[i] = b2 * vd[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = md[i] / c1;
      const double vhat = vd[i] / c2;
      val[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace rcdst
