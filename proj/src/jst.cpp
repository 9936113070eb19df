#include "rcdst/jst.hpp"

#include <algorithm>
#include <stdexcept>

#include "rcdst/errors.hpp"
#include "rcdst/nn.hpp"
#include "rcdst/text.hpp"

namespace rcdst {

JstClasses JstClasses::from_ontology(const std::vector<std::string>* values) {
  JstClasses c;
  c.classes.push_back(std::nullopt);
  c.classes.emplace_back(std::string(kDontCare));
  if (!values) return c;
  std::vector<std::string> sorted;
  for (const auto& v : *values) {
    if (v != kDontCare) sorted.push_back(v);
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (auto& v : sorted) c.classes.emplace_back(std::move(v));
  return c;
}

std::optional<std::size_t> JstClasses::index_of(const Value& value) const {
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] == value) return k;
  }
  return std::nullopt;
}

JstHead::JstHead(std::size_t input, const Schema& schema, const Ontology& ontology) {
  std::vector<JstClasses> classes;
  for (const auto& slot : schema.slots()) {
    classes.push_back(JstClasses::from_ontology(ontology.values(slot.str())));
  }
  *this = JstHead(input, std::move(classes));
}

JstHead::JstHead(std::size_t input, std::vector<JstClasses> classes) : classes_(std::move(classes)) {
  for (std::size_t s = 0; s < classes_.size(); ++s) {
    const auto n = static_cast<Eigen::Index>(classes_[s].size());
    w_.emplace_back("jst.w." + std::to_string(s), static_cast<Eigen::Index>(input), n);
    b_.emplace_back("jst.b." + std::to_string(s), 1, n, 1);
  }
}

ParameterRefs JstHead::parameters() {
  ParameterRefs out;
  for (std::size_t s = 0; s < w_.size(); ++s) {
    out.push_back(&w_[s]);
    out.push_back(&b_[s]);
  }
  return out;
}

RowVector JstHead::logits(const RowVector& e, std::size_t slot) const {
  if (slot >= classes_.size()) throw std::out_of_range("jst: unknown slot " + std::to_string(slot));
  Matrix x = e;
  return affine_forward(x, w_[slot].value, b_[slot].value).row(0);
}

RowVector JstHead::probs(const RowVector& e, std::size_t slot) const {
  return softmax(logits(e, slot));
}

RowVector JstHead::backward(const RowVector& e, std::size_t slot, const RowVector& d_logits) {
  Matrix x = e;
  Matrix dy = d_logits;
  const auto g = affine_backward(x, w_.at(slot).value, dy);
  w_[slot].grad += g.dw;
  b_[slot].grad.row(0) += g.db;
  return g.dx.row(0);
}

Value jst_decode(const JstClasses& classes, const RowVector& probs) {
  if (static_cast<std::size_t>(probs.size()) != classes.size() || classes.size() == 0) {
    throw ShapeError("jst_decode: distribution does not match class list");
  }
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < probs.size(); ++k) {
    if (probs(k) > probs(best)) best = k;
  }
  return classes.classes[static_cast<std::size_t>(best)];
}

}  // namespace rcdst
