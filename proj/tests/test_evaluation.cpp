#include <doctest.h>

#include <limits>
#include <set>

#include "oracles.hpp"
#include "secomm/errors.hpp"
#include "secomm/evaluation.hpp"
#include "secomm/rng.hpp"

using namespace secomm;

TEST_CASE("clustering accuracy is invariant to label permutations") {
  CHECK(clustering_accuracy({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(clustering_accuracy({2, 2, 0, 1}, {0, 0, 1, 2}) == doctest::Approx(1.0));
}

TEST_CASE("clustering accuracy on the spec instance equals 0.75") {
  CHECK(clustering_accuracy({0, 0, 1, 2}, {0, 0, 1, 1}) == doctest::Approx(0.75));
  CHECK(oracle::brute_force_accuracy({0, 0, 1, 2}, {0, 0, 1, 1}) == doctest::Approx(0.75));
}

TEST_CASE("clustering accuracy equals the brute-force permutation maximum") {
  Rng rng(7);
  for (int trial = 0; trial < 120; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 5);  // up to 6 classes
    const int n = 4 + static_cast<int>(rng() % 9);  // up to 12 points
    std::vector<int> pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pred[static_cast<std::size_t>(i)] = static_cast<int>(rng() % k);
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng() % k);
    }
    CHECK(clustering_accuracy(pred, truth) ==
          doctest::Approx(oracle::brute_force_accuracy(pred, truth)).epsilon(1e-12));
  }
}

TEST_CASE("clustering accuracy rejects mismatched lengths") {
  CHECK_THROWS_AS(clustering_accuracy({0, 1}, {0, 1, 1}), ContractError);
}

TEST_CASE("nmi of identical labelings is 1") {
  CHECK(nmi({0, 1, 2, 0}, {2, 0, 1, 2}) == doctest::Approx(1.0));
  CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("nmi of a constant prediction against a balanced truth is 0") {
  CHECK(nmi({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("nmi of independent labelings is 0") {
  CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("nmi is symmetric") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 20);
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
      b[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
    }
    CHECK(nmi(a, b) == doctest::Approx(nmi(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("nmi normalization variants are ordered as expected") {
  const std::vector<int> a{0, 0, 1, 1, 2, 2, 0, 1};
  const std::vector<int> b{0, 1, 1, 1, 2, 2, 0, 0};
  const double geo = nmi(a, b, NmiNormalization::kGeometric);
  const double lo = nmi(a, b, NmiNormalization::kMax);
  const double hi = nmi(a, b, NmiNormalization::kMin);
  CHECK(lo <= geo + 1e-12);
  CHECK(geo <= hi + 1e-12);
}

TEST_CASE("macro F1 on the degenerate single-cluster prediction") {
  // Class 0: precision 0.5, recall 1 -> 2/3. Class 1: no correct predictions -> 0.
  CHECK(macro_f1({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("macro F1 of a perfect matching is 1 and is permutation invariant") {
  CHECK(macro_f1({1, 1, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  Rng rng(13);
  std::vector<int> pred(30), truth(30);
  for (int i = 0; i < 30; ++i) {
    pred[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
    truth[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
  }
  std::vector<int> relabeled(30);
  const int perm[3] = {2, 0, 1};
  for (int i = 0; i < 30; ++i)
    relabeled[static_cast<std::size_t>(i)] = perm[pred[static_cast<std::size_t>(i)]];
  CHECK(macro_f1(pred, truth) == doctest::Approx(macro_f1(relabeled, truth)).epsilon(1e-12));
  CHECK(clustering_accuracy(pred, truth) ==
        doctest::Approx(clustering_accuracy(relabeled, truth)).epsilon(1e-12));
  CHECK(nmi(pred, truth) == doctest::Approx(nmi(relabeled, truth)).epsilon(1e-12));
}

TEST_CASE("kmeans recovers two well-separated blobs") {
  // 8 points in two tight 2-D blobs; brute force over all 2-partitions
  // confirms the blob split minimizes inertia.
  Matrix pts(8, 2);
  pts << 0.0, 0.1, 0.1, -0.1, -0.1, 0.0, 0.05, 0.05, 5.0, 5.1, 5.1, 4.9, 4.9, 5.0, 5.05, 5.05;
  std::vector<int> expected{0, 0, 0, 0, 1, 1, 1, 1};

  auto inertia_of = [&](unsigned mask) {
    Matrix c0 = Matrix::Zero(1, 2), c1 = Matrix::Zero(1, 2);
    int n0 = 0, n1 = 0;
    for (int i = 0; i < 8; ++i) {
      if (mask & (1u << i)) {
        c1 += pts.row(i);
        ++n1;
      } else {
        c0 += pts.row(i);
        ++n0;
      }
    }
    if (n0 == 0 || n1 == 0) return std::numeric_limits<double>::infinity();
    c0 /= n0;
    c1 /= n1;
    double total = 0.0;
    for (int i = 0; i < 8; ++i)
      total += (mask & (1u << i)) ? (pts.row(i) - c1).squaredNorm()
                                  : (pts.row(i) - c0).squaredNorm();
    return total;
  };
  unsigned best_mask = 1;
  for (unsigned mask = 1; mask < 255; ++mask)
    if (inertia_of(mask) < inertia_of(best_mask)) best_mask = mask;
  std::vector<int> brute_labels(8);
  for (int i = 0; i < 8; ++i) brute_labels[static_cast<std::size_t>(i)] = (best_mask >> i) & 1u;
  CHECK(clustering_accuracy(brute_labels, expected) == doctest::Approx(1.0));

  const auto labels = kmeans(pts, 2, 5, 3);
  CHECK(clustering_accuracy(labels, expected) == doctest::Approx(1.0));
}

TEST_CASE("kmeans with K = N has zero inertia (each point its own cluster)") {
  Matrix pts(5, 2);
  pts << 0, 0, 1, 0, 2, 0, 3, 0, 4, 0;
  const auto labels = kmeans(pts, 5, 3, 9);
  std::set<int> distinct(labels.begin(), labels.end());
  CHECK(distinct.size() == 5);
}

TEST_CASE("kmeans is deterministic under a fixed seed") {
  Matrix pts = Matrix::Random(40, 3);
  CHECK(kmeans(pts, 4, 6, 123) == kmeans(pts, 4, 6, 123));
}

TEST_CASE("spectral clustering separates two blocks of a similarity matrix") {
  const int n = 12;
  Matrix s = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool same = (i < n / 2) == (j < n / 2);
      s(i, j) = same ? 0.9 : 0.05;
    }
  std::vector<int> expected(n, 0);
  for (int i = n / 2; i < n; ++i) expected[static_cast<std::size_t>(i)] = 1;
  const auto labels = spectral_clustering(s, 2, 8, 5);
  CHECK(clustering_accuracy(labels, expected) == doctest::Approx(1.0));
}

TEST_CASE("confusion matrix totals the number of points") {
  const auto cm = ConfusionMatrix::build({0, 1, 1, 2}, {0, 0, 1, 1});
  CHECK(cm.total() == 4);
  CHECK(cm.counts.rows() == 3);
  CHECK(cm.counts.cols() == 2);
  CHECK(cm.counts.minCoeff() >= 0);
}
