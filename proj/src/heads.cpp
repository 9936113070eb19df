#include "rcdst/heads.hpp"

#include <algorithm>
#include <deque>

#include "rcdst/errors.hpp"
#include "rcdst/nn.hpp"

namespace rcdst {

CarryoverHead::CarryoverHead(std::size_t input, std::size_t slots)
    : w_("carryover.w", static_cast<Eigen::Index>(input), static_cast<Eigen::Index>(slots)) {}

RowVector CarryoverHead::logits(const RowVector& e) const {
  if (e.size() != w_.value.rows()) throw ShapeError("carryover: embedding size mismatch");
  return e * w_.value;
}

RowVector CarryoverHead::probs(const RowVector& e) const {
  RowVector z = logits(e);
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = sigmoid(z(k));
  return z;
}

RowVector CarryoverHead::backward(const RowVector& e, const RowVector& d_logits) {
  if (d_logits.size() != w_.value.cols()) throw ShapeError("carryover backward: size mismatch");
  w_.grad.noalias() += e.transpose() * d_logits;
  return d_logits * w_.value.transpose();
}

TypeHead::TypeHead(std::size_t input)
    : w_("type.w", static_cast<Eigen::Index>(2 * input), static_cast<Eigen::Index>(kSlotTypeCount)),
      b_("type.b", 1, static_cast<Eigen::Index>(kSlotTypeCount), 1) {}

RowVector TypeHead::logits(const RowVector& e, const RowVector& q) const {
  if (e.size() + q.size() != w_.value.rows()) throw ShapeError("type: input size mismatch");
  Matrix x(1, e.size() + q.size());
  x << e, q;
  return affine_forward(x, w_.value, b_.value).row(0);
}

RowVector TypeHead::probs(const RowVector& e, const RowVector& q) const {
  return softmax(logits(e, q));
}

std::pair<RowVector, RowVector> TypeHead::backward(const RowVector& e, const RowVector& q,
                                                   const RowVector& d_logits) {
  Matrix x(1, e.size() + q.size());
  x << e, q;
  Matrix dy = d_logits;
  const auto g = affine_backward(x, w_.value, dy);
  w_.grad += g.dw;
  b_.grad.row(0) += g.db;
  return {g.dx.row(0).head(e.size()), g.dx.row(0).tail(q.size())};
}

SpanHead::SpanHead(std::size_t input)
    : start_("span.start", static_cast<Eigen::Index>(input), static_cast<Eigen::Index>(input)),
      end_("span.end", static_cast<Eigen::Index>(input), static_cast<Eigen::Index>(input)) {}

SpanScores SpanHead::scores(const Matrix& tokens, const RowVector& q) const {
  if (tokens.cols() != start_.value.rows() || q.size() != start_.value.cols()) {
    throw ShapeError("span: encoding or question size mismatch");
  }
  return {(tokens * (start_.value * q.transpose())).transpose(),
          (tokens * (end_.value * q.transpose())).transpose()};
}

std::pair<RowVector, RowVector> SpanHead::distributions(const Matrix& tokens,
                                                        const RowVector& q) const {
  auto s = scores(tokens, q);
  return {softmax(s.start), softmax(s.end)};
}

std::pair<Matrix, RowVector> SpanHead::backward(const Matrix& tokens, const RowVector& q,
                                                const RowVector& d_start, const RowVector& d_end) {
  // score_x = d_x Theta q^T  =>  dTheta = D^T g q, dD = g (Theta q^T)^T, dq = g^T D Theta
  const RowVector gs_d = d_start * tokens;  // sum_x g_x d_x
  const RowVector ge_d = d_end * tokens;
  start_.grad.noalias() += gs_d.transpose() * q;
  end_.grad.noalias() += ge_d.transpose() * q;
  Matrix d_tokens = d_start.transpose() * (start_.value * q.transpose()).transpose() +
                    d_end.transpose() * (end_.value * q.transpose()).transpose();
  RowVector dq = gs_d * start_.value + ge_d * end_.value;
  return {std::move(d_tokens), std::move(dq)};
}

std::optional<std::pair<std::size_t, std::size_t>> decode_span(
    std::span<const double> p_start, std::span<const double> p_end,
    std::optional<std::size_t> max_len, std::span<const bool> blocked) {
  const std::size_t len = p_start.size();
  if (p_end.size() != len) throw ShapeError("decode_span: distributions differ in length");
  if (!blocked.empty() && blocked.size() != len) throw ShapeError("decode_span: mask length");
  if (max_len && *max_len == 0) throw std::invalid_argument("decode_span: max_len must be >= 1");

  std::optional<std::pair<std::size_t, std::size_t>> best;
  double best_score = 0.0;
  // Candidate starts for the current end, best first; on equal probability
  // the earlier start wins and so stays in front.
  std::deque<std::size_t> window;
  std::size_t segment = 0;  // first unblocked position of the current run
  for (std::size_t end = 0; end < len; ++end) {
    if (!blocked.empty() && blocked[end]) {
      window.clear();
      segment = end + 1;
      continue;
    }
    while (!window.empty() && p_start[window.back()] < p_start[end]) window.pop_back();
    window.push_back(end);
    if (max_len) {
      while (window.front() + *max_len <= end) window.pop_front();
    }
    std::size_t start = window.front();
    const double score = p_start[start] * p_end[end];
    if (score == 0.0) {
      // Every start ties at zero; the earliest admissible one wins.
      start = max_len && end + 1 > *max_len ? std::max(segment, end + 1 - *max_len) : segment;
    }
    if (!best || score > best_score || (score == best_score && start < best->first)) {
      best = std::make_pair(start, end);
      best_score = score;
    }
  }
  return best;
}

}  // namespace rcdst
