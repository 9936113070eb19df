#include "rcdst/nn.hpp"

#include <cmath>
#include <string>

#include "rcdst/errors.hpp"

namespace rcdst {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
  require(x.cols() == w.rows(), "affine: input " + dims(x) + " vs weight " + dims(w));
  require(b.rows() == 1 && b.cols() == w.cols(), "affine: bias size " + std::to_string(b.size()) + " vs weight " +
                                    dims(w));
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy) {
  require(x.cols() == w.rows() && dy.rows() == x.rows() && dy.cols() == w.cols(),
          "affine backward: x " + dims(x) + ", w " + dims(w) + ", dy " + dims(dy));
  return {dy * w.transpose(), x.transpose() * dy, dy.colwise().sum()};
}

void LstmWeights::check() const {
  const auto h = wh.rows();
  require(wh.cols() == 4 * h, "lstm: Wh must be H x 4H, got " + dims(wh));
  require(wx.cols() == 4 * h, "lstm: Wx must be in x 4H, got " + dims(wx));
  require(b.rows() == 1 && b.cols() == 4 * h, "lstm: bias must be 1 x 4H");
}

namespace {

// Applies the gate nonlinearities in place to a pre-activation row.
template <typename Row>
void activate_gates(Row&& a, Eigen::Index h) {
  for (Eigen::Index k = 0; k < h; ++k) {
    a(k) = sigmoid(a(k));
    a(h + k) = sigmoid(a(h + k));
    a(2 * h + k) = std::tanh(a(2 * h + k));
    a(3 * h + k) = sigmoid(a(3 * h + k));
  }
}

// Gradient with respect to the pre-activations given dL/dc (total, including
// the path through h) and dL/dh.
template <typename Gates>
RowVector gate_preactivation_grad(const Gates& gates, const RowVector& c_prev,
                                  const RowVector& tanh_c, const RowVector& dh,
                                  RowVector& dc_total, Eigen::Index h) {
  RowVector da(4 * h);
  for (Eigen::Index k = 0; k < h; ++k) {
    const double i = gates(k), f = gates(h + k), g = gates(2 * h + k), o = gates(3 * h + k);
    const double tc = tanh_c(k);
    const double dc = dc_total(k) + dh(k) * o * (1.0 - tc * tc);
    dc_total(k) = dc;
    da(k) = dc * g * i * (1.0 - i);
    da(h + k) = dc * c_prev(k) * f * (1.0 - f);
    da(2 * h + k) = dc * i * (1.0 - g * g);
    da(3 * h + k) = dh(k) * tc * o * (1.0 - o);
  }
  return da;
}

}  // namespace

LstmState lstm_cell(const RowVector& x, const RowVector& h_prev, const RowVector& c_prev,
                    const LstmWeights& w, LstmStepCache* cache) {
  w.check();
  const auto h = w.hidden();
  require(x.size() == w.input(), "lstm cell: input size " + std::to_string(x.size()) +
                                     " vs Wx " + dims(w.wx));
  require(h_prev.size() == h && c_prev.size() == h, "lstm cell: state size mismatch");
  RowVector a = x * w.wx + h_prev * w.wh + w.b.row(0);
  activate_gates(a, h);
  LstmState out;
  out.c = a.segment(h, h).cwiseProduct(c_prev) + a.segment(0, h).cwiseProduct(a.segment(2 * h, h));
  const RowVector tanh_c = out.c.array().tanh();
  out.h = a.segment(3 * h, h).cwiseProduct(tanh_c);
  if (cache) *cache = {x, h_prev, c_prev, a, out.c, tanh_c};
  return out;
}

LstmCellGrads lstm_cell_backward(const LstmStepCache& cache, const LstmWeights& w,
                                 const RowVector& dh, const RowVector& dc) {
  const auto h = w.hidden();
  require(dh.size() == h && dc.size() == h, "lstm cell backward: gradient size mismatch");
  RowVector dc_total = dc;
  const RowVector da = gate_preactivation_grad(cache.gates, cache.c_prev, cache.tanh_c, dh,
                                               dc_total, h);
  LstmCellGrads g;
  g.dx = da * w.wx.transpose();
  g.dh_prev = da * w.wh.transpose();
  g.dc_prev = dc_total.cwiseProduct(cache.gates.segment(h, h));
  g.dwx = cache.x.transpose() * da;
  g.dwh = cache.h_prev.transpose() * da;
  g.db = da;
  return g;
}

Matrix lstm_sequence_forward(const Matrix& x, const LstmWeights& w, bool reverse,
                             LstmSequenceCache* cache) {
  w.check();
  require(x.cols() == w.input(), "lstm sequence: input " + dims(x) + " vs Wx " + dims(w.wx));
  const auto len = x.rows();
  const auto h = w.hidden();
  Matrix gates = x * w.wx;
  gates.rowwise() += w.b.row(0);
  Matrix hs(len, h), cs(len, h), tcs(len, h);
  RowVector h_prev = RowVector::Zero(h), c_prev = RowVector::Zero(h);
  for (Eigen::Index step = 0; step < len; ++step) {
    const auto p = reverse ? len - 1 - step : step;
    auto a = gates.row(p);
    a.noalias() += h_prev * w.wh;
    activate_gates(a, h);
    RowVector c = a.segment(h, h).cwiseProduct(c_prev) +
                  a.segment(0, h).cwiseProduct(a.segment(2 * h, h));
    RowVector tc = c.array().tanh();
    hs.row(p) = a.segment(3 * h, h).cwiseProduct(tc);
    cs.row(p) = c;
    tcs.row(p) = tc;
    h_prev = hs.row(p);
    c_prev = c;
  }
  if (cache) {
    cache->x = x;
    cache->gates = std::move(gates);
    cache->h = hs;
    cache->c = std::move(cs);
    cache->tanh_c = std::move(tcs);
    cache->reverse = reverse;
  }
  return hs;
}

LstmSequenceGrads lstm_sequence_backward(const LstmSequenceCache& cache, const LstmWeights& w,
                                         const Matrix& dh) {
  const auto len = cache.x.rows();
  const auto h = w.hidden();
  require(dh.rows() == len && dh.cols() == h, "lstm sequence backward: dh " + dims(dh));
  Matrix da(len, 4 * h);
  Matrix h_prev_rows = Matrix::Zero(len, h);
  RowVector dh_next = RowVector::Zero(h);
  RowVector dc_next = RowVector::Zero(h);
  for (Eigen::Index step = len; step-- > 0;) {
    const auto p = cache.reverse ? len - 1 - step : step;
    const bool first = step == 0;
    const auto prev = cache.reverse ? p + 1 : p - 1;
    const RowVector c_prev = first ? RowVector::Zero(h) : RowVector(cache.c.row(prev));
    if (!first) h_prev_rows.row(p) = cache.h.row(prev);
    const RowVector dh_total = dh.row(p) + dh_next;
    RowVector dc_total = dc_next;
    const RowVector tanh_c = cache.tanh_c.row(p);
    const RowVector row = gate_preactivation_grad(cache.gates.row(p), c_prev, tanh_c, dh_total,
                                                  dc_total, h);
    da.row(p) = row;
    dh_next = row * w.wh.transpose();
    dc_next = dc_total.cwiseProduct(cache.gates.row(p).segment(h, h));
  }
  LstmSequenceGrads g;
  g.dx = da * w.wx.transpose();
  g.dwx = cache.x.transpose() * da;
  g.dwh = h_prev_rows.transpose() * da;
  g.db = da.colwise().sum();
  return g;
}

double bilinear(const RowVector& d, const Matrix& theta, const RowVector& q) {
  require(d.size() == theta.rows() && q.size() == theta.cols(),
          "bilinear: d " + std::to_string(d.size()) + ", theta " + dims(theta) + ", q " +
              std::to_string(q.size()));
  return (d * theta).dot(q);
}

BilinearGrads bilinear_backward(const RowVector& d, const Matrix& theta, const RowVector& q,
                                double dy) {
  require(d.size() == theta.rows() && q.size() == theta.cols(), "bilinear backward: shape");
  return {dy * (theta * q.transpose()).transpose(), dy * d.transpose() * q, dy * (d * theta)};
}

RowVector softmax(const RowVector& logits) {
  if (logits.size() == 0) throw ShapeError("softmax of empty vector");
  const double mx = logits.maxCoeff();
  RowVector e = (logits.array() - mx).exp();
  return e / e.sum();
}

LossResult sigmoid_bce_loss(const RowVector& logits, const RowVector& labels) {
  require(logits.size() == labels.size() && logits.size() > 0, "bce: size mismatch");
  const auto n = static_cast<double>(logits.size());
  LossResult r;
  r.grad.resize(logits.size());
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    const double z = logits(k), y = labels(k);
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("bce: labels must be 0 or 1");
    r.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    r.grad(k) = (sigmoid(z) - y) / n;
  }
  r.loss /= n;
  return r;
}

LossResult softmax_ce_loss(const RowVector& logits, std::size_t label) {
  if (label >= static_cast<std::size_t>(logits.size())) {
    throw std::invalid_argument("softmax ce: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) +
                                " classes");
  }
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  LossResult r;
  r.loss = lse - logits(static_cast<Eigen::Index>(label));
  r.grad = (logits.array() - lse).exp();
  r.grad(static_cast<Eigen::Index>(label)) -= 1.0;
  return r;
}

}  // namespace rcdst
