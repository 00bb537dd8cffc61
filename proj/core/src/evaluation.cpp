#include "secomm/evaluation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "secomm/errors.hpp"
#include "secomm/rng.hpp"

namespace secomm {

namespace {

void check_labelings(const std::vector<int>& pred, const std::vector<int>& truth) {
  require(pred.size() == truth.size(), "labelings differ in length");
  require(!pred.empty(), "labelings are empty");
  for (int v : pred) require(v >= 0, "negative predicted label");
  for (int v : truth) require(v >= 0, "negative true label");
}

// Shortest-augmenting-path assignment (minimizing); O(n^3).
std::vector<int> min_cost_assignment(const Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>& cost) {
  const int n = static_cast<int>(cost.rows());
  const long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<long long> v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      long long delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const long long cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                              v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (match[static_cast<std::size_t>(j)] > 0)
      row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return row_to_col;
}

double entropy(const std::vector<long>& counts, long total) {
  double h = 0.0;
  for (long c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

bool identical_up_to_permutation(const ConfusionMatrix& cm) {
  // Exactly one nonzero per row and per column.
  for (Index i = 0; i < cm.counts.rows(); ++i) {
    int nz = 0;
    for (Index j = 0; j < cm.counts.cols(); ++j) nz += cm.counts(i, j) > 0;
    if (nz > 1) return false;
  }
  for (Index j = 0; j < cm.counts.cols(); ++j) {
    int nz = 0;
    for (Index i = 0; i < cm.counts.rows(); ++i) nz += cm.counts(i, j) > 0;
    if (nz > 1) return false;
  }
  return true;
}

}  // namespace

ConfusionMatrix ConfusionMatrix::build(const std::vector<int>& pred,
                                       const std::vector<int>& truth) {
  check_labelings(pred, truth);
  const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
  const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
  ConfusionMatrix cm;
  cm.counts.setZero(kp, kt);
  for (std::size_t i = 0; i < pred.size(); ++i) ++cm.counts(pred[i], truth[i]);
  return cm;
}

std::vector<int> optimal_cluster_mapping(const ConfusionMatrix& cm) {
  const int kp = static_cast<int>(cm.counts.rows());
  const int kt = static_cast<int>(cm.counts.cols());
  const int n = std::max(kp, kt);
  const long max_count = cm.counts.maxCoeff();
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> cost(n, n);
  cost.setConstant(max_count);  // padding: matching nothing costs as much as count 0
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j) cost(i, j) = max_count - cm.counts(i, j);
  std::vector<int> mapping = min_cost_assignment(cost);
  mapping.resize(static_cast<std::size_t>(kp));
  for (int& m : mapping)
    if (m >= kt) m = -1;  // matched to a padding column
  return mapping;
}

double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  const ConfusionMatrix cm = ConfusionMatrix::build(pred, truth);
  const auto mapping = optimal_cluster_mapping(cm);
  long matched = 0;
  for (Index i = 0; i < cm.counts.rows(); ++i) {
    const int target = mapping[static_cast<std::size_t>(i)];
    if (target >= 0) matched += cm.counts(i, target);
  }
  return static_cast<double>(matched) / static_cast<double>(cm.total());
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth, NmiNormalization norm) {
  const ConfusionMatrix cm = ConfusionMatrix::build(pred, truth);
  if (identical_up_to_permutation(cm)) return 1.0;

  const long total = cm.total();
  std::vector<long> row_sum(static_cast<std::size_t>(cm.counts.rows()), 0);
  std::vector<long> col_sum(static_cast<std::size_t>(cm.counts.cols()), 0);
  for (Index i = 0; i < cm.counts.rows(); ++i)
    for (Index j = 0; j < cm.counts.cols(); ++j) {
      row_sum[static_cast<std::size_t>(i)] += cm.counts(i, j);
      col_sum[static_cast<std::size_t>(j)] += cm.counts(i, j);
    }
  const double h_pred = entropy(row_sum, total);
  const double h_truth = entropy(col_sum, total);
  if (h_pred == 0.0 || h_truth == 0.0) return 0.0;

  double mi = 0.0;
  for (Index i = 0; i < cm.counts.rows(); ++i)
    for (Index j = 0; j < cm.counts.cols(); ++j) {
      const long c = cm.counts(i, j);
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(total);
      const double pi = static_cast<double>(row_sum[static_cast<std::size_t>(i)]) /
                        static_cast<double>(total);
      const double pj = static_cast<double>(col_sum[static_cast<std::size_t>(j)]) /
                        static_cast<double>(total);
      mi += p * std::log(p / (pi * pj));
    }
  mi = std::max(mi, 0.0);

  double denom = 1.0;
  switch (norm) {
    case NmiNormalization::kGeometric: denom = std::sqrt(h_pred * h_truth); break;
    case NmiNormalization::kMin: denom = std::min(h_pred, h_truth); break;
    case NmiNormalization::kMax: denom = std::max(h_pred, h_truth); break;
    case NmiNormalization::kArithmetic: denom = 0.5 * (h_pred + h_truth); break;
  }
  return std::clamp(mi / denom, 0.0, 1.0);
}

double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
  const ConfusionMatrix cm = ConfusionMatrix::build(pred, truth);
  const auto mapping = optimal_cluster_mapping(cm);
  const int kt = static_cast<int>(cm.counts.cols());

  std::vector<long> tp(static_cast<std::size_t>(kt), 0);
  std::vector<long> predicted(static_cast<std::size_t>(kt), 0);
  std::vector<long> actual(static_cast<std::size_t>(kt), 0);
  for (Index i = 0; i < cm.counts.rows(); ++i) {
    const int target = mapping[static_cast<std::size_t>(i)];
    for (Index j = 0; j < cm.counts.cols(); ++j) {
      actual[static_cast<std::size_t>(j)] += cm.counts(i, j);
      if (target >= 0) {
        predicted[static_cast<std::size_t>(target)] += cm.counts(i, j);
        if (target == static_cast<int>(j)) tp[static_cast<std::size_t>(j)] += cm.counts(i, j);
      }
    }
  }

  // Average over classes present in the ground truth.
  double sum_f1 = 0.0;
  int classes = 0;
  for (int j = 0; j < kt; ++j) {
    if (actual[static_cast<std::size_t>(j)] == 0) continue;
    ++classes;
    const double tpj = static_cast<double>(tp[static_cast<std::size_t>(j)]);
    if (tpj == 0.0) continue;  // no correct predictions: F1 = 0
    const double precision = tpj / static_cast<double>(predicted[static_cast<std::size_t>(j)]);
    const double recall = tpj / static_cast<double>(actual[static_cast<std::size_t>(j)]);
    sum_f1 += 2.0 * precision * recall / (precision + recall);
  }
  return classes > 0 ? sum_f1 / static_cast<double>(classes) : 0.0;
}

namespace {

double lloyd_once(const Matrix& pts, int k, Rng& rng, std::vector<int>& labels) {
  const Index n = pts.rows();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding.
  Matrix centroids(k, pts.cols());
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = pts.row(first(rng));
  Vector dist2 = (pts.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);  // all points coincide with chosen centroids
    }
    centroids.row(c) = pts.row(chosen);
    dist2 = dist2.cwiseMin((pts.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  double inertia = 0.0;
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = iter == 0;
    inertia = 0.0;
    std::fill(counts.begin(), counts.end(), 0);
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (pts.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (pts.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
      ++counts[static_cast<std::size_t>(best)];
      inertia += best_d;
    }

    // Reseed empty clusters to the point farthest from its centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const double d =
            (pts.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d && counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] >
                             1) {
          far_d = d;
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      changed = true;
    }

    if (!changed) break;
    centroids.setZero();
    for (Index i = 0; i < n; ++i)
      centroids.row(labels[static_cast<std::size_t>(i)]) += pts.row(i);
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  return inertia;
}

}  // namespace

std::vector<int> kmeans(const Matrix& points, int k, int restarts, std::uint64_t seed) {
  require(k >= 1 && k <= points.rows(), "kmeans: need 1 <= k <= N");
  require(restarts >= 1, "kmeans: need at least one restart");
  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, 404, static_cast<std::uint64_t>(r)));
    std::vector<int> labels;
    const double inertia = lloyd_once(points, k, rng, labels);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = std::move(labels);
    }
  }
  return best_labels;
}

std::vector<int> spectral_clustering(const Matrix& similarity, int k, int restarts,
                                     std::uint64_t seed) {
  const Index n = similarity.rows();
  require_shape(similarity.cols() == n, "spectral_clustering: similarity must be square");
  require(k >= 1 && k <= n, "spectral_clustering: need 1 <= k <= N");

  Vector deg = similarity.rowwise().sum();
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  Matrix norm_sim = inv_sqrt.asDiagonal() * similarity * inv_sqrt.asDiagonal();

  // Top-k eigenvectors of the normalized similarity == bottom-k of L_sym.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(norm_sim);
  require(eig.info() == Eigen::Success, "spectral_clustering: eigendecomposition failed");
  Matrix embedding(n, k);
  for (int c = 0; c < k; ++c) embedding.col(c) = eig.eigenvectors().col(n - 1 - c);
  for (Index i = 0; i < n; ++i) {
    const double rn = embedding.row(i).norm();
    if (rn > 0.0) embedding.row(i) /= rn;
  }
  return kmeans(embedding, k, restarts, seed);
}

ClusteringMetrics evaluate_clustering(const std::vector<int>& pred,
                                      const std::vector<int>& truth, NmiNormalization norm) {
  return {clustering_accuracy(pred, truth), nmi(pred, truth, norm), macro_f1(pred, truth)};
}

std::string metrics_to_text(const std::map<std::string, ClusteringMetrics>& table) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  for (const auto& [name, m] : table)
    os << name << " accuracy=" << m.accuracy << " nmi=" << m.nmi << " macro_f1=" << m.macro_f1
       << "\n";
  return os.str();
}

}  // namespace secomm
