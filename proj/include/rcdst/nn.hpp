#pragma once

#include <cstddef>
#include <span>

#include "rcdst/tensor.hpp"

namespace rcdst {

// Affine map Y = X W + b over the rows of X. A single vector is a 1-row X.

/// `b` is a 1 x m row.
Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix& b);

struct AffineGrads {
  Matrix dx;
  Matrix dw;
  RowVector db;
};

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy);

// LSTM with gate blocks ordered input, forget, candidate, output:
//   a = x Wx + h_prev Wh + b
//   i = sigmoid(a_i), f = sigmoid(a_f), g = tanh(a_g), o = sigmoid(a_o)
//   c = f * c_prev + i * g,  h = o * tanh(c)

/// Views of the weight matrices; the referenced matrices must outlive it.
struct LstmWeights {
  const Matrix& wx;  // in x 4H
  const Matrix& wh;  // H x 4H
  const Matrix& b;   // 1 x 4H

  Eigen::Index hidden() const { return wh.rows(); }
  Eigen::Index input() const { return wx.rows(); }
  void check() const;
};

struct LstmStepCache {
  RowVector x, h_prev, c_prev;
  RowVector gates;  // activated i, f, g, o
  RowVector c, tanh_c;
};

struct LstmState {
  RowVector h;
  RowVector c;
};

LstmState lstm_cell(const RowVector& x, const RowVector& h_prev, const RowVector& c_prev,
                    const LstmWeights& w, LstmStepCache* cache = nullptr);

struct LstmCellGrads {
  RowVector dx, dh_prev, dc_prev;
  Matrix dwx, dwh;
  RowVector db;
};

LstmCellGrads lstm_cell_backward(const LstmStepCache& cache, const LstmWeights& w,
                                 const RowVector& dh, const RowVector& dc);

/// Cached activations for a whole sequence, stored in sequence position
/// order regardless of direction.
struct LstmSequenceCache {
  Matrix x;
  Matrix gates;  // L x 4H activated
  Matrix h;      // L x H
  Matrix c;      // L x H
  Matrix tanh_c;
  bool reverse = false;
};

/// Runs the cell over the rows of x from a zero state (right to left when
/// `reverse`). Row p of the result is the hidden state at position p.
Matrix lstm_sequence_forward(const Matrix& x, const LstmWeights& w, bool reverse,
                             LstmSequenceCache* cache = nullptr);

struct LstmSequenceGrads {
  Matrix dx;
  Matrix dwx, dwh;
  RowVector db;
};

LstmSequenceGrads lstm_sequence_backward(const LstmSequenceCache& cache, const LstmWeights& w,
                                         const Matrix& dh);

// Bilinear form d^T Theta q.

double bilinear(const RowVector& d, const Matrix& theta, const RowVector& q);

struct BilinearGrads {
  RowVector dd;
  Matrix dtheta;
  RowVector dq;
};

BilinearGrads bilinear_backward(const RowVector& d, const Matrix& theta, const RowVector& q,
                                double dy);

// Losses. Gradients are with respect to the logits.

struct LossResult {
  double loss = 0.0;
  RowVector grad;
};

/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.
LossResult sigmoid_bce_loss(const RowVector& logits, const RowVector& labels);

/// Cross-entropy of softmax(logits) against the class `label`.
LossResult softmax_ce_loss(const RowVector& logits, std::size_t label);

RowVector softmax(const RowVector& logits);
double sigmoid(double z);

}  // namespace rcdst
