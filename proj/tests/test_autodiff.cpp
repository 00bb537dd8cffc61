#include <doctest.h>

#include "oracles.hpp"
#include "secomm/adam.hpp"
#include "secomm/errors.hpp"
#include "secomm/rng.hpp"
#include "secomm/tensor.hpp"

using namespace secomm;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

// Analytic gradient via one tape, finite differences via repeated forwards.
void check_gradient(Parameter& p, const std::function<Tensor(Tape&, Tensor)>& build,
                    double tol = 1e-6) {
  Tape tape;
  Tensor loss = build(tape, tape.leaf(p));
  tape.backward(loss);
  const Matrix analytic = p.grad;
  p.zero_grad();
  auto eval = [&]() {
    Tape t;
    return build(t, t.leaf(p)).scalar();
  };
  const Matrix fd = oracle::finite_difference(eval, p.value);
  CHECK(oracle::rel_error(analytic, fd) < tol);
}

}  // namespace

TEST_CASE("relu forward and backward at the spec example") {
  Parameter x(Matrix{{-1.0, 2.0}});
  Tape tape;
  Tensor y = tape.relu(tape.leaf(x));
  CHECK(y.value()(0, 0) == 0.0);
  CHECK(y.value()(0, 1) == 2.0);
  Tensor loss = tape.sum(y);  // upstream of relu is all-ones
  tape.backward(loss);
  CHECK(x.grad(0, 0) == 0.0);
  CHECK(x.grad(0, 1) == 1.0);
}

TEST_CASE("frobenius_sq of a scalar") {
  Parameter x(Matrix{{3.0}});
  Tape tape;
  Tensor loss = tape.frobenius_sq(tape.leaf(x));
  CHECK(loss.scalar() == doctest::Approx(9.0));
  tape.backward(loss);
  CHECK(x.grad(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("backward of frobenius_sq at the identity is 2I") {
  Parameter w(Matrix::Identity(2, 2));
  Tape tape;
  Tensor loss = tape.frobenius_sq(tape.leaf(w));
  tape.backward(loss);
  CHECK((w.grad - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cosine of identical unit rows is 1 and its gradient matches FD") {
  Rng rng(5);
  Matrix base = random_matrix(4, 6, rng);
  for (Index i = 0; i < base.rows(); ++i) base.row(i) /= base.row(i).norm();
  Parameter a(base);
  const Matrix b = base;

  Tape tape;
  Tensor cos = tape.cosine_rows(tape.leaf(a), tape.constant(b));
  for (Index i = 0; i < 4; ++i) CHECK(cos.value()(i, 0) == doctest::Approx(1.0));

  // Identical rows sit at the cosine maximum: the gradient is (near) zero,
  // so compare absolutely here; the sloped case is checked below.
  Tensor loss = tape.sum(cos);
  tape.backward(loss);
  const Matrix analytic = a.grad;
  a.zero_grad();
  auto eval = [&]() {
    Tape t;
    return t.sum(t.cosine_rows(t.leaf(a), t.constant(b))).scalar();
  };
  const Matrix fd = oracle::finite_difference(eval, a.value);
  CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-6);

  Matrix tilted = b;
  tilted.row(0).reverseInPlace();
  check_gradient(a, [&](Tape& t, Tensor x) {
    return t.sum(t.cosine_rows(x, t.constant(tilted)));
  });
}

TEST_CASE("cosine_rows guards zero rows") {
  Parameter a(Matrix::Zero(2, 3));
  Tape tape;
  Tensor cos = tape.cosine_rows(tape.leaf(a), tape.constant(Matrix::Ones(2, 3)));
  CHECK(cos.value()(0, 0) == 0.0);
  Tensor loss = tape.sum(cos);
  tape.backward(loss);
  CHECK(std::isfinite(a.grad(0, 0)));
}

TEST_CASE("composite relu(matmul) gradient matches finite differences") {
  Rng rng(7);
  const Matrix b = random_matrix(4, 3, rng);
  Parameter a(random_matrix(5, 4, rng));
  check_gradient(a, [&](Tape& t, Tensor x) {
    return t.frobenius_sq(t.relu(t.matmul(x, t.constant(b))));
  });
}

TEST_CASE("gradients accumulate across repeated uses: Y = X + X") {
  Parameter x(Matrix::Ones(2, 3));
  Tape tape;
  Tensor xt = tape.leaf(x);
  Tensor loss = tape.sum(tape.add(xt, xt));
  tape.backward(loss);
  CHECK((x.grad - 2.0 * Matrix::Ones(2, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward on a DAG equals backward on the tree-expanded expression") {
  Rng rng(11);
  const Matrix value = random_matrix(3, 3, rng);

  Parameter shared(value);
  Tape dag;
  Tensor a = dag.leaf(shared);
  dag.backward(dag.frobenius_sq(dag.matmul(a, a)));
  const Matrix dag_grad = shared.grad;

  Parameter expanded(value);
  Tape tree;
  Tensor a1 = tree.leaf(expanded);
  Tensor a2 = tree.leaf(expanded);  // distinct leaves, same storage
  tree.backward(tree.frobenius_sq(tree.matmul(a1, a2)));

  CHECK(oracle::rel_error(dag_grad, expanded.grad) < 1e-14);
}

TEST_CASE("per-primitive gradient checks") {
  Rng rng(13);

  SUBCASE("matmul both sides") {
    Parameter a(random_matrix(3, 4, rng));
    Parameter b(random_matrix(4, 2, rng));
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.matmul(x, t.constant(b.value)));
    });
    check_gradient(b, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.matmul(t.constant(a.value), x));
    });
  }
  SUBCASE("transpose_matmul") {
    Parameter a(random_matrix(5, 3, rng));
    Parameter b(random_matrix(5, 2, rng));
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.transpose_matmul(x, t.constant(b.value)));
    });
    check_gradient(b, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.transpose_matmul(t.constant(a.value), x));
    });
  }
  SUBCASE("add and scale") {
    Parameter a(random_matrix(3, 3, rng));
    const Matrix c = random_matrix(3, 3, rng);
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.add(t.scale(x, -1.7), t.constant(c)));
    });
  }
  SUBCASE("add_row_bias both inputs") {
    Parameter a(random_matrix(4, 3, rng));
    Parameter bias(random_matrix(1, 3, rng));
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.add_row_bias(x, t.constant(bias.value)));
    });
    check_gradient(bias, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.add_row_bias(t.constant(a.value), x));
    });
  }
  SUBCASE("row_softmax") {
    Parameter a(random_matrix(4, 5, rng));
    const Matrix w = random_matrix(4, 5, rng);
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.add(t.row_softmax(x), t.constant(w)));
    });
  }
  SUBCASE("log_sum_exp") {
    Parameter a(random_matrix(4, 6, rng, 2.0));
    check_gradient(a, [&](Tape& t, Tensor x) { return t.sum(t.log_sum_exp(x)); });
  }
  SUBCASE("gather_rows") {
    Parameter a(random_matrix(5, 3, rng));
    const std::vector<int> idx{4, 0, 0, 2};
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.gather_rows(x, idx));
    });
  }
  SUBCASE("hstack") {
    Parameter a(random_matrix(3, 2, rng));
    const Matrix c = random_matrix(3, 4, rng);
    check_gradient(a, [&](Tape& t, Tensor x) {
      return t.frobenius_sq(t.hstack({x, t.constant(c), t.scale(x, 2.0)}));
    });
  }
  SUBCASE("spmm") {
    Matrix dense = random_matrix(6, 6, rng);
    dense = (dense.array().abs() > 1.2).select(dense, Matrix::Zero(6, 6));
    const SparseMatrix sp = to_sparse(dense);
    Parameter d(random_matrix(6, 3, rng));
    check_gradient(d, [&](Tape& t, Tensor x) { return t.frobenius_sq(t.spmm(sp, x)); });
  }
}

TEST_CASE("shape mismatches raise dimension errors") {
  Tape tape;
  Tensor a = tape.constant(Matrix::Zero(2, 3));
  Tensor b = tape.constant(Matrix::Zero(2, 3));
  CHECK_THROWS_AS(tape.matmul(a, b), DimensionError);
  CHECK_THROWS_AS(tape.add(a, tape.constant(Matrix::Zero(3, 2))), DimensionError);
  CHECK_THROWS_AS(tape.add_row_bias(a, tape.constant(Matrix::Zero(1, 2))), DimensionError);
}

TEST_CASE("backward rejects non-scalar losses") {
  Parameter x(Matrix::Ones(2, 2));
  Tape tape;
  Tensor y = tape.relu(tape.leaf(x));
  CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("tape is cleared after backward") {
  Parameter x(Matrix::Ones(2, 2));
  Tape tape;
  Tensor loss = tape.frobenius_sq(tape.leaf(x));
  tape.backward(loss);
  CHECK(tape.size() == 0);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Parameter p(Matrix::Ones(2, 2));
  AdamOptimizer opt({&p});
  p.zero_grad();
  opt.step();
  CHECK((p.value - Matrix::Ones(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: first step moves each coordinate by about the learning rate") {
  Parameter p(Matrix::Zero(2, 3));
  const double lr = 1e-3;
  AdamOptimizer opt({&p}, AdamConfig{.learning_rate = lr});
  p.grad = Matrix::Constant(2, 3, 0.5);
  opt.step();
  // Bias-corrected first step: lr * g / (|g| + eps) ~ lr * sign(g).
  CHECK((p.value + Matrix::Constant(2, 3, lr)).cwiseAbs().maxCoeff() < lr * 1e-6);
}

TEST_CASE("adam: identical runs produce identical trajectories") {
  auto run = [] {
    Parameter p(Matrix::Constant(2, 2, 0.7));
    AdamOptimizer opt({&p}, AdamConfig{.learning_rate = 0.01});
    for (int i = 0; i < 25; ++i) {
      Tape tape;
      Tensor loss = tape.frobenius_sq(tape.leaf(p));
      tape.backward(loss);
      opt.step();
    }
    return p.value;
  };
  const Matrix a = run();
  const Matrix b = run();
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fused contrastive loss agrees with the primitive-composed route") {
  Rng rng(21);
  const int n = 6, dim = 4, n_neg = 3;
  Parameter z1(random_matrix(n, dim, rng));
  Parameter z2(random_matrix(n, dim, rng));
  IndexMatrix negatives(n, n_neg);
  for (int i = 0; i < n; ++i) {
    auto picks = sample_without_replacement(n - 1, n_neg, rng);
    for (int k = 0; k < n_neg; ++k)
      negatives(i, k) = picks[static_cast<std::size_t>(k)] >= i
                            ? picks[static_cast<std::size_t>(k)] + 1
                            : picks[static_cast<std::size_t>(k)];
  }
  const double tau = 0.4;

  auto composed = [&](Tape& t, Tensor a, Tensor b) {
    std::vector<Tensor> cols;
    for (int k = 0; k < n_neg; ++k) {
      std::vector<int> idx(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = negatives(i, k);
      cols.push_back(t.scale(t.cosine_rows(a, t.gather_rows(a, idx)), 1.0 / tau));
      cols.push_back(t.scale(t.cosine_rows(a, t.gather_rows(b, idx)), 1.0 / tau));
    }
    Tensor lse = t.log_sum_exp(t.hstack(cols));
    Tensor pos = t.scale(t.cosine_rows(a, b), -1.0 / tau);
    return t.sum(t.add(pos, lse));
  };

  double composed_value = 0.0;
  {
    Tape t;
    Tensor loss = composed(t, t.leaf(z1), t.leaf(z2));
    composed_value = loss.scalar();
    t.backward(loss);
  }
  const Matrix composed_g1 = z1.grad;
  const Matrix composed_g2 = z2.grad;
  z1.zero_grad();
  z2.zero_grad();

  Tape t;
  Tensor fused = t.contrastive_nce(t.leaf(z1), t.leaf(z2), negatives, tau);
  CHECK(fused.scalar() == doctest::Approx(composed_value).epsilon(1e-10));
  t.backward(fused);
  CHECK(oracle::rel_error(z1.grad, composed_g1) < 1e-10);
  CHECK(oracle::rel_error(z2.grad, composed_g2) < 1e-10);
}

TEST_CASE("fused losses match finite differences") {
  Rng rng(23);

  SUBCASE("contrastive_nce") {
    const int n = 6, dim = 4, n_neg = 3;
    Matrix other = random_matrix(n, dim, rng);
    Parameter z1(random_matrix(n, dim, rng));
    IndexMatrix negatives(n, n_neg);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n_neg; ++k) negatives(i, k) = (i + k + 1) % n;
    check_gradient(z1, [&](Tape& t, Tensor x) {
      return t.contrastive_nce(x, t.constant(other), negatives, 0.5);
    }, 1e-5);
  }
  SUBCASE("pair_constraint_loss") {
    Parameter c(random_matrix(5, 3, rng));
    const std::vector<PairConstraint> pairs{{0, 1, 0.9}, {1, 4, 0.1}, {2, 3, 0.5}};
    check_gradient(c, [&](Tape& t, Tensor x) {
      return t.pair_constraint_loss(x, pairs, true);
    });
  }
  SUBCASE("orthogonality_penalty") {
    Parameter c(random_matrix(6, 3, rng).cwiseAbs());
    check_gradient(c, [&](Tape& t, Tensor x) { return t.orthogonality_penalty(x); }, 1e-5);
  }
}
