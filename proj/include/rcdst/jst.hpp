#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rcdst/corpus.hpp"
#include "rcdst/tensor.hpp"

namespace rcdst {

/// Closed class list of one slot: None, "dontcare", then the ontology values
/// in sorted order.
struct JstClasses {
  std::vector<Value> classes;

  static JstClasses from_ontology(const std::vector<std::string>* values);
  std::size_t size() const { return classes.size(); }
  /// Index of a normalized value, or nullopt when outside the class list.
  std::optional<std::size_t> index_of(const Value& value) const;
};

/// Closed-vocabulary baseline: one affine classifier per slot on the dialog
/// embedding, predicting the full state every turn.
class JstHead {
 public:
  JstHead() = default;
  JstHead(std::size_t input, const Schema& schema, const Ontology& ontology);
  JstHead(std::size_t input, std::vector<JstClasses> classes);

  ParameterRefs parameters();
  std::size_t slots() const { return classes_.size(); }
  const JstClasses& classes(std::size_t slot) const { return classes_.at(slot); }
  const std::vector<JstClasses>& all_classes() const { return classes_; }

  RowVector logits(const RowVector& e, std::size_t slot) const;
  RowVector probs(const RowVector& e, std::size_t slot) const;
  /// Accumulates this slot's weight gradients; returns dL/de.
  RowVector backward(const RowVector& e, std::size_t slot, const RowVector& d_logits);

 private:
  std::vector<JstClasses> classes_;
  std::vector<Parameter> w_;
  std::vector<Parameter> b_;
};

/// Argmax class; ties go to the earlier class.
Value jst_decode(const JstClasses& classes, const RowVector& probs);

}  // namespace rcdst
