#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "secomm/errors.hpp"
#include "secomm/rng.hpp"
#include "secomm/self_expressive.hpp"

using namespace secomm;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> gauss;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

}  // namespace

TEST_CASE("sample_batches partitions the nodes when P*M <= N") {
  const auto batches = sample_batches(10, 5, 2, 7);
  REQUIRE(batches.size() == 2);
  std::set<int> all;
  for (const auto& b : batches) {
    CHECK(b.size() == 5);
    all.insert(b.begin(), b.end());
  }
  CHECK(all.size() == 10);  // disjoint cover
}

TEST_CASE("sample_batches allows overlap across batches when P*M > N") {
  const auto batches = sample_batches(10, 5, 3, 11);
  REQUIRE(batches.size() == 3);
  for (const auto& b : batches) {
    std::set<int> in_batch(b.begin(), b.end());
    CHECK(in_batch.size() == 5);  // distinct within each batch
    for (int v : b) {
      CHECK(v >= 0);
      CHECK(v < 10);
    }
  }
}

TEST_CASE("sample_batches rejects M > N and is deterministic") {
  CHECK_THROWS_AS(sample_batches(4, 5, 1, 0), ContractError);
  CHECK(sample_batches(100, 30, 4, 5) == sample_batches(100, 30, 4, 5));
}

TEST_CASE("solve_coefficients: two identical unit rows give off-diagonal 1/2") {
  Matrix z(2, 3);
  z << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
  const CoefficientMatrix exact = solve_coefficients(z, 1.0);
  CHECK(exact.q(0, 0) == 0.0);
  CHECK(exact.q(1, 1) == 0.0);
  CHECK(std::abs(exact.q(0, 1) - 0.5) <= 1e-3);
  CHECK(std::abs(exact.q(1, 0) - 0.5) <= 1e-3);

  // The masked-Adam route stops on loss saturation, so it lands near the
  // optimum rather than on it.
  const CoefficientMatrix adam = solve_coefficients(z, 1.0, CoefficientSolver::kAdamMasked);
  CHECK(adam.q(0, 0) == 0.0);
  CHECK(std::abs(adam.q(0, 1) - 0.5) <= 1e-2);
  CHECK(self_expressive_objective(adam.q, z, 1.0) <=
        self_expressive_objective(exact.q, z, 1.0) + 1e-4);
}

TEST_CASE("solve_coefficients: mutually orthogonal rows give Q near zero") {
  Matrix z = Matrix::Zero(4, 6);
  z(0, 0) = 1.3;
  z(1, 1) = -0.7;
  z(2, 2) = 2.0;
  z(3, 3) = 0.4;
  for (CoefficientSolver solver : {CoefficientSolver::kExact, CoefficientSolver::kAdamMasked}) {
    const CoefficientMatrix q = solve_coefficients(z, 0.5, solver);
    CHECK(q.q.norm() <= 1e-3);
  }
}

TEST_CASE("solve_coefficients keeps the diagonal exactly zero on random input") {
  Rng rng(3);
  const Matrix z = random_matrix(12, 5, rng);
  for (CoefficientSolver solver : {CoefficientSolver::kExact, CoefficientSolver::kAdamMasked}) {
    const CoefficientMatrix q = solve_coefficients(z, 2.0, solver);
    CHECK(q.q.diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("solve_coefficients beats the trivial and the zeroed-ridge baselines") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const int m = 5 + static_cast<int>(rng() % 46);
    const Matrix z = random_matrix(m, 8, rng);
    const double lambda1 = 0.25 + 0.5 * static_cast<double>(trial);
    const CoefficientMatrix q = solve_coefficients(z, lambda1);
    const double at_solution = self_expressive_objective(q.q, z, lambda1);
    const double at_zero = self_expressive_objective(Matrix::Zero(m, m), z, lambda1);
    const Matrix ridge = oracle::ridge_then_zero_diagonal(z, lambda1);
    const double at_ridge = self_expressive_objective(ridge, z, lambda1);
    CHECK(at_solution <= at_zero + 1e-9);
    CHECK(at_solution <= at_ridge + 1e-9);
  }
}

TEST_CASE("exact solver is the constrained optimum (gradient projects to zero)") {
  Rng rng(23);
  const Matrix z = random_matrix(10, 4, rng);
  const double lambda1 = 1.5;
  const CoefficientMatrix q = solve_coefficients(z, lambda1);
  // Stationarity of 0.5*d/dQ off the diagonal: (QZ - Z)Z^T + l1 Q = 0 there.
  const Matrix grad = (q.q * z - z) * z.transpose() + lambda1 * q.q;
  Matrix off = grad;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("build_similarity matches the dense reference on random symmetric input") {
  Rng rng(29);
  for (const int m : {5, 9, 16, 24, 30}) {
    Matrix q = random_matrix(m, m, rng);
    q = 0.5 * (q + q.transpose());
    q.diagonal().setZero();
    const int k = 2, d = (m >= 10) ? 3 : 1;
    const Matrix ours = build_similarity({q}, k, d);
    const Matrix ref = oracle::reference_similarity(q, k, d);
    CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((ours - ours.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ours.minCoeff() >= 0.0);
    CHECK(ours.maxCoeff() <= 1.0);
  }
}

TEST_CASE("build_similarity separates two planted groups") {
  // Two groups of near-identical points on orthogonal rays. The slight
  // magnitude spread keeps the spectrum simple (exactly identical points
  // make the low eigenspace degenerate and the factorization basis
  // arbitrary).
  Matrix z = Matrix::Zero(6, 4);
  z(0, 0) = 1.00;
  z(1, 0) = 1.05;
  z(2, 0) = 0.95;
  z(3, 1) = 1.00;
  z(4, 1) = 0.93;
  z(5, 1) = 1.07;
  const CoefficientMatrix q = solve_coefficients(z, 1.0);
  const Matrix s = build_similarity(q, /*num_communities=*/2, /*subspace_dim=*/1);

  const Matrix ref = oracle::reference_similarity(q.q, 2, 1);
  CHECK((s - ref).cwiseAbs().maxCoeff() < 1e-9);
  double within_min = 1.0, cross_max = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      if ((i < 3) == (j < 3))
        within_min = std::min(within_min, s(i, j));
      else
        cross_max = std::max(cross_max, s(i, j));
    }
  // The planted blocks come out clearly separated: cross-group pairs sit at
  // the no-link end, within-group pairs far above them.
  CHECK(cross_max <= 0.1);
  CHECK(within_min >= 0.5);
  CHECK(within_min - cross_max >= 0.4);
}

TEST_CASE("build_similarity of an all-zero matrix is the zero block") {
  const Matrix s = build_similarity({Matrix::Zero(6, 6)}, 2, 2);
  CHECK(s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_similarity rejects ranks above the batch size") {
  CHECK_THROWS_AS(build_similarity({Matrix::Zero(4, 4)}, 2, 2), ContractError);
}

TEST_CASE("learn_similarities covers all pairs in the full-matrix special case") {
  Rng rng(31);
  const int n = 12;
  const Matrix z = random_matrix(n, 5, rng);
  SelfExpressConfig cfg;
  cfg.batch_size = n;
  cfg.num_batches = 1;
  cfg.num_communities = 2;
  cfg.subspace_dim = 2;
  const SimilarityStore store = learn_similarities(z, cfg);
  CHECK(store.size() == static_cast<std::size_t>(n * (n - 1) / 2));
}

TEST_CASE("learn_similarities with disjoint batches stores P*M(M-1)/2 pairs") {
  Rng rng(37);
  const Matrix z = random_matrix(24, 6, rng);
  SelfExpressConfig cfg;
  cfg.batch_size = 8;
  cfg.num_batches = 3;
  cfg.num_communities = 2;
  cfg.subspace_dim = 2;
  cfg.seed = 5;
  const SimilarityStore store = learn_similarities(z, cfg);
  CHECK(store.size() == static_cast<std::size_t>(3 * 8 * 7 / 2));
  for (const auto& p : store.sorted_pairs()) {
    CHECK(p.s >= 0.0);
    CHECK(p.s <= 1.0);
    CHECK(p.i < p.j);
  }
}

TEST_CASE("learn_similarities is deterministic under a fixed seed") {
  Rng rng(41);
  const Matrix z = random_matrix(20, 4, rng);
  SelfExpressConfig cfg;
  cfg.batch_size = 10;
  cfg.num_batches = 2;
  cfg.num_communities = 2;
  cfg.subspace_dim = 1;
  cfg.seed = 77;
  const auto a = learn_similarities(z, cfg).sorted_pairs();
  const auto b = learn_similarities(z, cfg).sorted_pairs();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].i == b[i].i);
    CHECK(a[i].j == b[i].j);
    CHECK(a[i].s == b[i].s);
  }
}

TEST_CASE("similarity store keeps the most recent duplicate by default") {
  SimilarityStore store;
  store.insert(3, 1, 0.2, 0, false);
  store.insert(1, 3, 0.8, 1, false);
  CHECK(store.at(1, 3) == 0.8);
  store.insert(1, 3, 0.4, 2, true);  // averaging flag
  CHECK(store.at(3, 1) == doctest::Approx(0.6));
  CHECK_THROWS_AS(store.insert(2, 2, 0.5, 0, false), ContractError);
  CHECK_THROWS_AS(store.insert(0, 1, 1.5, 0, false), ContractError);
}

TEST_CASE("filter_extreme at theta_low = 0.5 is the identity") {
  SimilarityStore store;
  store.insert(0, 1, 0.02, 0, false);
  store.insert(0, 2, 0.5, 0, false);
  store.insert(1, 2, 0.97, 0, false);
  const auto kept = filter_extreme(store, 0.5);
  CHECK(kept.size() == 3);
}

TEST_CASE("filter_extreme keeps only the extremes for small theta_low") {
  SimilarityStore store;
  store.insert(0, 1, 0.02, 0, false);
  store.insert(0, 2, 0.5, 0, false);
  store.insert(1, 2, 0.97, 0, false);
  const auto kept = filter_extreme(store, 0.05);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].s == 0.02);
  CHECK(kept[1].s == 0.97);
  CHECK_THROWS_AS(filter_extreme(store, 0.0), ContractError);
  CHECK_THROWS_AS(filter_extreme(store, 0.6), ContractError);
}

TEST_CASE("similarity store dumps sorted TSV") {
  SimilarityStore store;
  store.insert(2, 1, 0.25, 0, false);
  store.insert(0, 3, 0.75, 0, false);
  const std::string tsv = store.to_tsv();
  CHECK(tsv.find("0\t3\t0.75") != std::string::npos);
  CHECK(tsv.find("1\t2\t0.25") != std::string::npos);
  CHECK(tsv.find("0\t3") < tsv.find("1\t2"));
}
