#include <algorithm>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "mospred/autodiff.hpp"
#include "mospred/error.hpp"

using namespace mospred;
using namespace mospred::ad;

namespace {

// Central differences of a scalar function of one matrix, coordinate by coordinate.
Matrix numeric_grad(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x.data()[i];
    x.data()[i] = orig + h;
    const double up = f(x);
    x.data()[i] = orig - h;
    const double down = f(x);
    x.data()[i] = orig;
    g.data()[i] = (up - down) / (2 * h);
  }
  return g;
}

// Norm-wise relative error; coordinate-wise ratios blow up on near-zero entries.
double max_rel(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

// Sum of the entries of `v` weighted by a fixed matrix, so every adjoint entry differs.
Var weighted_sum(Tape& t, Var v, const Matrix& w) {
  (void)t;
  Var weighted = v.tape().record("test_mul", v.value().cwiseProduct(w), {v},
                                 [w](const Matrix& g, std::span<Matrix* const> pg) {
                                   if (pg[0]) *pg[0] += g.cwiseProduct(w);
                                 });
  return scale(mean_all(weighted), static_cast<double>(w.size()));
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("identity matmul returns the adjoint unchanged") {
    Tape t;
    Parameter a("a", Matrix::Identity(3, 3));
    Matrix b(3, 1);
    b << 1, 2, 3;
    Var out = mean_all(matmul(t.param(a), t.constant(b)));
    t.backward(out);
    // d mean(A b) / dA_ij = b_j / 3
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(a.grad(i, j) == doctest::Approx(b(j) / 3.0).epsilon(1e-14));
  }

  TEST_CASE("primitive gradients match finite differences on random instances") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 25; ++trial) {
      const Matrix a0 = testing::random_matrix(rng, 3, 4);
      const Matrix b0 = testing::random_matrix(rng, 4, 2);
      const Matrix w = testing::random_matrix(rng, 3, 2);

      auto f_mat = [&](const Matrix& a, const Matrix& b) {
        Tape t;
        return weighted_sum(t, matmul(t.constant(a), t.constant(b)), w).item();
      };
      Parameter pa("a", a0), pb("b", b0);
      {
        Tape t;
        Var out = weighted_sum(t, matmul(t.param(pa), t.param(pb)), w);
        t.backward(out);
      }
      CHECK(max_rel(pa.grad, numeric_grad([&](const Matrix& x) { return f_mat(x, b0); }, a0)) < 1e-6);
      CHECK(max_rel(pb.grad, numeric_grad([&](const Matrix& x) { return f_mat(a0, x); }, b0)) < 1e-6);

      // softmax, tanh, transpose, slice and concat composed.
      const Matrix x0 = testing::random_matrix(rng, 4, 5, 2.0);
      const Matrix w2 = testing::random_matrix(rng, 5, 4);
      auto build = [&](Tape& t, Var x) {
        Var s = softmax_rows(x);
        Var th = tanh(scale(x, 0.7));
        Var top = slice_rows(add(s, th), 0, 2);
        Var bottom = slice_rows(th, 2, 4);
        std::vector<Var> parts{bottom, top};
        Var cat = concat_rows(parts);
        return weighted_sum(t, transpose(add_constant(cat, 0.3)), w2);
      };
      Parameter px("x", x0);
      {
        Tape t;
        Var out = build(t, t.param(px));
        t.backward(out);
      }
      auto f_x = [&](const Matrix& x) {
        Tape t;
        return build(t, t.constant(x)).item();
      };
      CHECK(max_rel(px.grad, numeric_grad(f_x, x0)) < 1e-6);

      // broadcast and mse.
      const Matrix row0 = testing::random_matrix(rng, 1, 3);
      const Matrix m0 = testing::random_matrix(rng, 5, 3);
      const Matrix target = testing::random_matrix(rng, 5, 3);
      Parameter prow("row", row0);
      {
        Tape t;
        Var out = mse(add_row_broadcast(t.constant(m0), t.param(prow)), t.constant(target));
        t.backward(out);
      }
      auto f_row = [&](const Matrix& r) {
        Tape t;
        return mse(add_row_broadcast(t.constant(m0), t.constant(r)), t.constant(target)).item();
      };
      CHECK(max_rel(prow.grad, numeric_grad(f_row, row0)) < 1e-6);
    }
  }

  TEST_CASE("row broadcast adjoint is the column sum") {
    Tape t;
    Parameter row("row", Matrix::Zero(1, 2));
    Matrix a = Matrix::Zero(4, 2);
    Var out = scale(mean_all(add_row_broadcast(t.constant(a), t.param(row))), 8.0);  // plain sum
    t.backward(out);
    CHECK(row.grad(0, 0) == doctest::Approx(4.0));
    CHECK(row.grad(0, 1) == doctest::Approx(4.0));
  }

  TEST_CASE("softmax of equal logits is uniform and invariant to shifts") {
    Tape t;
    Var s = softmax_rows(t.constant(Matrix::Constant(1, 4, 800.0)));
    for (int i = 0; i < 4; ++i) CHECK(s.value()(0, i) == doctest::Approx(0.25).epsilon(1e-15));
    Matrix logits(1, 3);
    logits << 1, 2, 3;
    Var a = softmax_rows(t.constant(logits));
    Var b = softmax_rows(t.constant(logits.array() + 1000.0));
    CHECK((a.value() - b.value()).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("tanh and mse values") {
    Tape t;
    Matrix x(1, 2);
    x << 0.0, 1.0;
    Var th = tanh(t.constant(x));
    CHECK(th.value()(0, 0) == 0.0);
    CHECK(th.value()(0, 1) == doctest::Approx(std::tanh(1.0)));
    Matrix p(2, 1), q(2, 1);
    p << 1, 2;
    q << 2, 4;
    CHECK(mse(t.constant(p), t.constant(q)).item() == doctest::Approx(2.5));
  }

  TEST_CASE("grad_check of a linear function is exact up to rounding") {
    std::mt19937_64 rng(5);
    Parameter w("w", testing::random_matrix(rng, 6, 1));
    const Matrix x = testing::random_matrix(rng, 1, 6);
    std::vector<Parameter*> ps{&w};
    const auto rep = grad_check([&](Tape& t) { return matmul(t.constant(x), t.param(w)); }, ps);
    CHECK(rep.passed);
    CHECK(rep.max_rel_error < 1e-9);
    CHECK(rep.coordinates == 6);
  }

  TEST_CASE("grad_check restores parameter values and gradients") {
    std::mt19937_64 rng(6);
    Parameter w("w", testing::random_matrix(rng, 3, 3));
    w.grad.setConstant(7.0);
    const Matrix before = w.value;
    std::vector<Parameter*> ps{&w};
    grad_check([&](Tape& t) { return mean_all(tanh(t.param(w))); }, ps);
    CHECK(w.value == before);
    CHECK((w.grad.array() == 7.0).all());
  }

  TEST_CASE("a corrupted backward rule is detected") {
    std::mt19937_64 rng(7);
    Parameter w("w", testing::random_matrix(rng, 2, 3));
    std::vector<Parameter*> ps{&w};
    auto bad_square = [&](Tape& t) {
      Var x = t.param(w);
      Var sq = t.record("bad_square", x.value().array().square().matrix(), {x},
                        [xv = x.value()](const Matrix& g, std::span<Matrix* const> pg) {
                          if (pg[0]) *pg[0] += g.cwiseProduct(3.0 * xv);  // should be 2x
                        });
      return mean_all(sq);
    };
    const auto rep = grad_check(bad_square, ps);
    CHECK_FALSE(rep.passed);
    CHECK(rep.max_rel_error > 1e-2);
    CHECK(rep.worst_parameter == "w");
    CHECK(rep.worst_index >= 0);
  }

  TEST_CASE("gradient of a sum is the sum of gradients") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      Parameter w("w", testing::random_matrix(rng, 3, 2));
      const Matrix a = testing::random_matrix(rng, 4, 3);
      auto f = [&](Tape& t, Var wv) { return mean_all(tanh(matmul(t.constant(a), wv))); };
      auto g = [&](Tape& t, Var wv) { return mean_all(softmax_rows(matmul(t.constant(a), wv))); };
      Tape t1;
      t1.backward(f(t1, t1.param(w)));
      Matrix gf = w.grad;
      w.zero_grad();
      Tape t2;
      t2.backward(g(t2, t2.param(w)));
      Matrix gg = w.grad;
      w.zero_grad();
      Tape t3;
      Var wv = t3.param(w);
      t3.backward(add(f(t3, wv), g(t3, wv)));
      CHECK(max_rel(w.grad, gf + gg) < 1e-12);
    }
  }

  TEST_CASE("extreme bounded inputs stay finite") {
    Tape t;
    Parameter x("x", Matrix::Constant(2, 3, 500.0));
    x.value(1, 2) = -500.0;
    Var out = mean_all(add(softmax_rows(t.param(x)), tanh(t.param(x))));
    t.backward(out);
    CHECK(x.grad.allFinite());
    CHECK(std::isfinite(out.item()));
  }

  TEST_CASE("shape and argument errors") {
    Tape t;
    Var a = t.constant(Matrix::Zero(2, 3));
    Var b = t.constant(Matrix::Zero(2, 3));
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    CHECK_THROWS_AS(add(a, t.constant(Matrix::Zero(3, 2))), ShapeError);
    CHECK_THROWS_AS(add_row_broadcast(a, t.constant(Matrix::Zero(1, 2))), ShapeError);
    CHECK_THROWS_AS(slice_rows(a, 1, 4), ShapeError);
    CHECK_THROWS_AS(t.backward(a), ArgumentError);
    try {
      matmul(a, b);
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("2x3") != std::string::npos);
    }
    Parameter w("w", Matrix::Zero(2, 2));
    std::vector<Parameter*> ps{&w};
    CHECK_THROWS_AS(grad_check([&](Tape& tp) { return tp.param(w); }, ps), ArgumentError);
    CHECK_THROWS_AS(grad_check([&](Tape& tp) { return mean_all(tp.param(w)); }, ps, 0.5), ArgumentError);
    CHECK_THROWS_AS(t.constant(Matrix::Constant(1, 1, std::nan(""))), NumericError);
  }
}
