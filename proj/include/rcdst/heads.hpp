#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "rcdst/corpus.hpp"
#include "rcdst/encoder.hpp"
#include "rcdst/tensor.hpp"

namespace rcdst {

/// P(change_i) = sigmoid(e . W_i), jointly for all M slots.
class CarryoverHead {
 public:
  CarryoverHead() = default;
  CarryoverHead(std::size_t input, std::size_t slots);

  ParameterRefs parameters() { return {&w_}; }
  const Parameter& weight() const { return w_; }
  Parameter& weight() { return w_; }

  RowVector logits(const RowVector& e) const;
  RowVector probs(const RowVector& e) const;
  /// Accumulates dW and returns dL/de.
  RowVector backward(const RowVector& e, const RowVector& d_logits);

 private:
  Parameter w_;  // input x M
};

/// P(T_i) = softmax(A (e ; q_i) + b) over Yes, No, DontCare, Span.
class TypeHead {
 public:
  TypeHead() = default;
  explicit TypeHead(std::size_t input);

  ParameterRefs parameters() { return {&w_, &b_}; }

  RowVector logits(const RowVector& e, const RowVector& q) const;
  RowVector probs(const RowVector& e, const RowVector& q) const;
  /// Accumulates dA, db; returns (dL/de, dL/dq).
  std::pair<RowVector, RowVector> backward(const RowVector& e, const RowVector& q,
                                           const RowVector& d_logits);

 private:
  Parameter w_;  // 2*input x 4
  Parameter b_;  // 1 x 4
};

struct SpanScores {
  RowVector start;  // d_x Theta_start q over positions
  RowVector end;
};

/// Start/end distributions from bilinear scores d_x Theta q.
class SpanHead {
 public:
  SpanHead() = default;
  explicit SpanHead(std::size_t input);

  ParameterRefs parameters() { return {&start_, &end_}; }
  Parameter& start() { return start_; }
  Parameter& end() { return end_; }

  SpanScores scores(const Matrix& tokens, const RowVector& q) const;
  std::pair<RowVector, RowVector> distributions(const Matrix& tokens, const RowVector& q) const;
  /// Accumulates dTheta; returns (dL/dD, dL/dq).
  std::pair<Matrix, RowVector> backward(const Matrix& tokens, const RowVector& q,
                                        const RowVector& d_start, const RowVector& d_end);

 private:
  Parameter start_;
  Parameter end_;
};

/// Best (i, i') with i <= i' (and i' - i < max_len when given) maximizing
/// p_start(i) * p_end(i'). Ties go to the smallest i, then the smallest i'.
/// Positions flagged in `blocked` may not fall inside the span. Returns
/// nullopt only when every position is blocked.
std::optional<std::pair<std::size_t, std::size_t>> decode_span(
    std::span<const double> p_start, std::span<const double> p_end,
    std::optional<std::size_t> max_len = std::nullopt, std::span<const bool> blocked = {});

}  // namespace rcdst
