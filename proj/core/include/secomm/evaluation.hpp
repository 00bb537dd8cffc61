#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "secomm/matrix.hpp"

namespace secomm {

/// Counts of (predicted cluster, true class) co-occurrences.
struct ConfusionMatrix {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;  // K_pred x K_true

  static ConfusionMatrix build(const std::vector<int>& pred, const std::vector<int>& truth);
  long total() const { return counts.sum(); }
};

enum class NmiNormalization { kGeometric, kMin, kMax, kArithmetic };

/// Fraction of nodes matched under the best cluster-to-class assignment
/// (Hungarian method on the confusion matrix).
double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// Mutual information normalized by (default) the geometric mean of the two
/// entropies; natural logarithms. 1 for identical labelings up to
/// permutation, 0 when either labeling is constant and they differ.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth,
           NmiNormalization norm = NmiNormalization::kGeometric);

/// Macro-averaged F1 over true classes, computed after mapping predicted
/// clusters through the accuracy-optimal assignment. Classes that receive no
/// predictions contribute 0.
double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth);

/// Best assignment of predicted cluster ids to class ids (maximum matched
/// count); unmatched predicted ids map to -1.
std::vector<int> optimal_cluster_mapping(const ConfusionMatrix& cm);

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by
/// inertia. A cluster that empties is reseeded to the farthest point.
std::vector<int> kmeans(const Matrix& points, int k, int restarts, std::uint64_t seed);

/// Normalized-Laplacian spectral clustering of a dense symmetric nonnegative
/// similarity matrix (eigenvectors + k-means on unit rows).
std::vector<int> spectral_clustering(const Matrix& similarity, int k, int restarts,
                                     std::uint64_t seed);

struct ClusteringMetrics {
  double accuracy = 0.0;
  double nmi = 0.0;
  double macro_f1 = 0.0;
};

ClusteringMetrics evaluate_clustering(const std::vector<int>& pred,
                                      const std::vector<int>& truth,
                                      NmiNormalization norm = NmiNormalization::kGeometric);

std::string metrics_to_text(const std::map<std::string, ClusteringMetrics>& table);

}  // namespace secomm
