#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "rcdst/adam.hpp"
#include "rcdst/checkpoint.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/gradcheck.hpp"
#include "rcdst/nn.hpp"
#include "test_util.hpp"

using namespace rcdst;
using doctest::Approx;
using testutil::random_matrix;
using testutil::random_row;

namespace {

Matrix mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  Matrix m(r, c);
  Eigen::Index k = 0;
  for (double x : v) m.data()[k++] = x;
  return m;
}

Parameter param(const std::string& name, Matrix value) {
  Parameter p(name, value.rows(), value.cols());
  p.value = std::move(value);
  return p;
}

}  // namespace

TEST_CASE("affine forward on a worked example") {
  const auto x = mat(1, 2, {1, 2});
  const auto w = mat(2, 2, {1, 0, 0, 1});
  const auto b = mat(1, 2, {0.5, -0.5});
  const auto y = affine_forward(x, w, b);
  CHECK(y(0, 0) == 1.5);
  CHECK(y(0, 1) == 1.5);

  const auto w2 = mat(2, 3, {1, 2, 3, 4, 5, 6});
  const auto y2 = affine_forward(mat(2, 2, {1, 0, 0, 2}), w2, mat(1, 3, {0, 0, 1}));
  CHECK(y2(1, 0) == 8);
  CHECK(y2(1, 2) == 13);
  CHECK_THROWS_AS(affine_forward(mat(1, 3, {1, 2, 3}), w, b), ShapeError);
}

TEST_CASE("affine gradients agree with finite differences") {
  Rng rng(1);
  auto x = param("x", random_matrix(rng, 3, 4));
  auto w = param("w", random_matrix(rng, 4, 5));
  auto b = param("b", random_matrix(rng, 1, 5));
  const Matrix r = random_matrix(rng, 3, 5);
  auto loss = [&] { return (affine_forward(x.value, w.value, b.value).array() * r.array()).sum(); };
  const auto g = affine_backward(x.value, w.value, r);
  x.grad = g.dx;
  w.grad = g.dw;
  b.grad = g.db;
  const auto rep = grad_check(loss, {&x, &w, &b});
  CHECK(rep.passed);
  CHECK(rep.checked == 12 + 20 + 5);
}

TEST_CASE("lstm cell matches a scalar hand computation") {
  const auto wx = mat(1, 4, {0.1, 0.2, 0.3, 0.4});
  const auto wh = mat(1, 4, {-0.1, 0.05, 0.2, -0.3});
  const auto b = mat(1, 4, {0.01, 0.02, 0.03, 0.04});
  const LstmWeights w{wx, wh, b};
  const auto s = lstm_cell(mat(1, 1, {0.5}).row(0), mat(1, 1, {0.2}).row(0), mat(1, 1, {-0.3}).row(0), w);
  CHECK(s.h(0) == Approx(-0.02684751085202523).epsilon(1e-12));
  CHECK(s.c(0) == Approx(-0.0493123691993165).epsilon(1e-12));
}

TEST_CASE("lstm cell edge cases") {
  const Eigen::Index H = 3, D = 2;
  const Matrix wx = Matrix::Zero(D, 4 * H), wh = Matrix::Zero(H, 4 * H);
  Matrix b = Matrix::Zero(1, 4 * H);
  Rng rng(2);
  const RowVector x = random_row(rng, D), h0 = random_row(rng, H), c0 = random_row(rng, H);

  SUBCASE("zero weights from a zero state stay at zero") {
    const auto s = lstm_cell(x, RowVector::Zero(H), RowVector::Zero(H), {wx, wh, b});
    CHECK(s.h.isZero());
    CHECK(s.c.isZero());
  }
  SUBCASE("zero weights halve the cell") {
    const auto s = lstm_cell(x, h0, c0, {wx, wh, b});
    for (Eigen::Index k = 0; k < H; ++k) {
      CHECK(s.c(k) == Approx(0.5 * c0(k)));
      CHECK(s.h(k) == Approx(0.5 * std::tanh(0.5 * c0(k))));
    }
  }
  SUBCASE("saturated forget gate and closed input gate copy the cell") {
    b.block(0, 0, 1, H).setConstant(-50.0);
    b.block(0, H, 1, H).setConstant(50.0);
    const auto s = lstm_cell(x, h0, c0, {wx, wh, b});
    for (Eigen::Index k = 0; k < H; ++k) CHECK(s.c(k) == Approx(c0(k)).epsilon(1e-12));
  }
}

TEST_CASE("lstm sequence equals repeated cell calls") {
  Rng rng(3);
  const Eigen::Index L = 6, D = 4, H = 3;
  const Matrix wx = random_matrix(rng, D, 4 * H, 0.5), wh = random_matrix(rng, H, 4 * H, 0.5),
               b = random_matrix(rng, 1, 4 * H, 0.5), x = random_matrix(rng, L, D);
  const LstmWeights w{wx, wh, b};
  for (bool reverse : {false, true}) {
    const auto hs = lstm_sequence_forward(x, w, reverse);
    RowVector h = RowVector::Zero(H), c = RowVector::Zero(H);
    for (Eigen::Index k = 0; k < L; ++k) {
      const Eigen::Index p = reverse ? L - 1 - k : k;
      const auto s = lstm_cell(x.row(p), h, c, w);
      h = s.h;
      c = s.c;
      for (Eigen::Index j = 0; j < H; ++j) CHECK(hs(p, j) == Approx(h(j)).epsilon(1e-13));
    }
  }
}

TEST_CASE("lstm sequence gradients agree with finite differences") {
  Rng rng(4);
  const Eigen::Index L = 5, D = 3, H = 4;
  auto wx = param("wx", random_matrix(rng, D, 4 * H, 0.5));
  auto wh = param("wh", random_matrix(rng, H, 4 * H, 0.5));
  auto b = param("b", random_matrix(rng, 1, 4 * H, 0.5));
  auto x = param("x", random_matrix(rng, L, D));
  const Matrix r = random_matrix(rng, L, H);
  for (bool reverse : {false, true}) {
    auto loss = [&] {
      const auto hs = lstm_sequence_forward(x.value, {wx.value, wh.value, b.value}, reverse);
      return (hs.array() * r.array()).sum();
    };
    LstmSequenceCache cache;
    lstm_sequence_forward(x.value, {wx.value, wh.value, b.value}, reverse, &cache);
    const auto g = lstm_sequence_backward(cache, {wx.value, wh.value, b.value}, r);
    x.grad = g.dx;
    wx.grad = g.dwx;
    wh.grad = g.dwh;
    b.grad = g.db;
    const auto rep = grad_check(loss, {&wx, &wh, &b, &x});
    INFO("worst " << rep.worst_parameter << " rel " << rep.max_relative_error);
    CHECK(rep.passed);
  }
}

TEST_CASE("bilinear matches a double loop") {
  Rng rng(5);
  const RowVector d = random_row(rng, 4), q = random_row(rng, 3);
  const Matrix theta = random_matrix(rng, 4, 3);
  double expect = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) expect += d(i) * theta(i, j) * q(j);
  CHECK(bilinear(d, theta, q) == Approx(expect).epsilon(1e-14));

  const auto g = bilinear_backward(d, theta, q, 2.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(g.dtheta(i, j) == Approx(2.0 * d(i) * q(j)));
  double dq0 = 0.0;
  for (int i = 0; i < 4; ++i) dq0 += 2.0 * d(i) * theta(i, 0);
  CHECK(g.dq(0) == Approx(dq0));
}

TEST_CASE("loss functions") {
  const auto zero2 = RowVector::Zero(2).eval();
  CHECK(sigmoid_bce_loss(zero2, mat(1, 2, {1, 0}).row(0)).loss == Approx(std::log(2.0)));
  const auto ce = softmax_ce_loss(RowVector::Zero(4), 2);
  CHECK(ce.loss == Approx(std::log(4.0)));
  CHECK(ce.grad(2) == Approx(-0.75));
  CHECK(ce.grad(0) == Approx(0.25));
  CHECK(sigmoid(1.0) == Approx(0.7310585786300049));

  Rng rng(6);
  const RowVector z = random_row(rng, 5, 3.0);
  const auto p = softmax(z);
  CHECK(p.sum() == Approx(1.0));
  const auto r = softmax_ce_loss(z, 1);
  for (int k = 0; k < 5; ++k) CHECK(r.grad(k) == Approx(p(k) - (k == 1 ? 1.0 : 0.0)));
  CHECK(r.loss == Approx(-std::log(p(1))));

  const auto big = softmax_ce_loss(mat(1, 2, {1000, -1000}).row(0), 0);
  CHECK(std::isfinite(big.loss));
  CHECK(big.loss == Approx(0.0));
  const auto bce = sigmoid_bce_loss(mat(1, 1, {-800}).row(0), mat(1, 1, {1}).row(0));
  CHECK(bce.loss == Approx(800.0));

  CHECK_THROWS(softmax_ce_loss(RowVector::Zero(3), 3));
  CHECK_THROWS(sigmoid_bce_loss(zero2, mat(1, 2, {0.5, 1}).row(0)));
}

TEST_CASE("bce gradient agrees with finite differences") {
  Rng rng(7);
  auto z = param("z", random_matrix(rng, 1, 6, 2.0));
  const auto y = mat(1, 6, {1, 0, 0, 1, 1, 0});
  z.grad = sigmoid_bce_loss(z.value.row(0), y.row(0)).grad;
  CHECK(grad_check([&] { return sigmoid_bce_loss(z.value.row(0), y.row(0)).loss; }, {&z}).passed);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters alone") {
    auto p = param("p", mat(1, 3, {1, 2, 3}));
    p.grad.setZero();
    Adam adam;
    adam.step({&p});
    CHECK(p.value == mat(1, 3, {1, 2, 3}));
  }
  SUBCASE("first step moves by about lr against the gradient sign") {
    auto p = param("p", mat(1, 3, {0, 0, 0}));
    p.grad = mat(1, 3, {3.0, -0.01, 100.0});
    Adam adam;
    adam.step({&p});
    CHECK(p.value(0, 0) == Approx(-0.001).epsilon(1e-6));
    CHECK(p.value(0, 1) == Approx(0.001).epsilon(1e-5));
    CHECK(p.value(0, 2) == Approx(-0.001).epsilon(1e-6));
  }
  SUBCASE("two steps follow the hand trace") {
    auto p = param("p", mat(1, 1, {1.0}));
    Adam adam;
    p.grad(0, 0) = 0.5;
    adam.step({&p});
    CHECK(p.value(0, 0) == Approx(0.99900000002).epsilon(1e-14));
    p.grad(0, 0) = -1.0;
    adam.step({&p});
    CHECK(p.value(0, 0) == Approx(0.9993661035424056).epsilon(1e-14));
    CHECK(adam.steps() == 2);
  }
}

TEST_CASE("grad_check catches a wrong gradient") {
  Rng rng(8);
  auto w = param("w", random_matrix(rng, 2, 3));
  auto loss = [&] { return w.value.squaredNorm(); };
  w.grad = 2.0 * w.value;
  CHECK(grad_check(loss, {&w}).passed);
  const Matrix before = w.value;
  w.grad(1, 2) *= 1.01;
  const auto rep = grad_check(loss, {&w});
  CHECK_FALSE(rep.passed);
  CHECK(rep.worst_parameter == "w");
  CHECK(rep.worst_index == 5);
  CHECK(w.value == before);
}

TEST_CASE("init_uniform is deterministic and bounded") {
  Parameter a("a", 4, 5), b("b", 1, 7, 1);
  Rng r1(42);
  init_uniform({&a, &b}, r1);
  Parameter c("a", 4, 5), d("b", 1, 7, 1);
  Rng r2(42);
  init_uniform({&c, &d}, r2);
  CHECK(a.value == c.value);
  CHECK(b.value == d.value);
  CHECK(a.value.cwiseAbs().maxCoeff() <= 0.1);
  CHECK(b.shape() == std::vector<std::size_t>{7});
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(9);
  Parameter a("enc.w", 3, 4), b("head.b", 1, 5, 1);
  a.value = random_matrix(rng, 3, 4);
  b.value = random_matrix(rng, 1, 5);
  a.value(0, 0) = -0.0;
  a.value(1, 1) = 1e-308;
  const auto path = testutil::temp_dir("ckpt") / "m.ckpt";
  save_checkpoint(path, R"({"kind":"type"})", {&a, &b});

  const auto ck = load_checkpoint(path);
  CHECK(ck.metadata == R"({"kind":"type"})");
  REQUIRE(ck.tensors.size() == 2);
  CHECK(ck.find("head.b")->shape == std::vector<std::size_t>{5});

  Parameter a2("enc.w", 3, 4), b2("head.b", 1, 5, 1);
  restore_parameters(ck, {&a2, &b2});
  CHECK(std::memcmp(a2.value.data(), a.value.data(), sizeof(double) * 12) == 0);
  CHECK(std::memcmp(b2.value.data(), b.value.data(), sizeof(double) * 5) == 0);

  std::ostringstream again;
  write_checkpoint(again, ck.metadata, {&a2, &b2});
  std::ostringstream first;
  write_checkpoint(first, ck.metadata, {&a, &b});
  CHECK(again.str() == first.str());

  Parameter wrong("enc.w", 4, 3);
  CHECK_THROWS_AS(restore_parameters(ck, {&wrong}), DataError);
  std::istringstream junk("XXXX");
  CHECK_THROWS_AS(read_checkpoint(junk), DataError);
  std::istringstream truncated(first.str().substr(0, first.str().size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), DataError);
}
