#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "secomm/constraints.hpp"
#include "secomm/matrix.hpp"

namespace secomm {

enum class CoefficientSolver {
  kExact,       // KKT solution of the ridge problem with the diagonal pinned to zero
  kAdamMasked,  // Adam on Q with the diagonal re-zeroed every step
};

struct AdamSolveOptions {
  double learning_rate = 1e-3;
  double saturation_rel_tol = 1e-5;  // relative improvement over the window
  int saturation_window = 20;
  int max_steps = 2000;
};

struct SelfExpressConfig {
  int batch_size = 0;   // M; 0 means "all nodes in one batch"
  int num_batches = 1;  // P
  double lambda1 = 1.0;
  int num_communities = 0;  // K
  int subspace_dim = 4;     // d; the factorization rank is r = d*K + 1
  double theta_low = 0.5;   // theta_high is always 1 - theta_low
  std::uint64_t seed = 0;
  CoefficientSolver solver = CoefficientSolver::kExact;
  AdamSolveOptions adam;
  bool average_duplicates = false;  // default: last write wins

  int rank() const { return subspace_dim * num_communities + 1; }
  double theta_high() const { return 1.0 - theta_low; }
};

/// Self-expressive coefficients for one batch; diagonal is exactly zero.
struct CoefficientMatrix {
  Matrix q;
};

/// Similarities for the unordered node pairs seen so far, each in [0, 1],
/// tagged with the batch that produced it. Self-pairs are never stored.
class SimilarityStore {
 public:
  void insert(int i, int j, double s, int batch, bool average_duplicates);

  bool contains(int i, int j) const;
  double at(int i, int j) const;
  std::size_t size() const { return values_.size(); }

  /// Pairs in deterministic (i, j)-sorted order.
  std::vector<PairConstraint> sorted_pairs() const;
  /// TSV dump "i<TAB>j<TAB>s" in sorted order, for inspection.
  std::string to_tsv() const;

 private:
  struct Entry {
    double s;
    int batch;
  };
  static std::uint64_t key(int i, int j);
  std::map<std::uint64_t, Entry> values_;
};

/// P batches of M node ids. Disjoint when P*M <= N; otherwise each batch is
/// an independent draw without replacement within itself.
std::vector<std::vector<int>> sample_batches(int num_nodes, int batch_size, int num_batches,
                                             std::uint64_t seed);

/// Minimizes ||Z - QZ||_F^2 + lambda1 ||Q||_F^2 subject to diag(Q) = 0.
CoefficientMatrix solve_coefficients(const Matrix& batch_embeddings, double lambda1,
                                     CoefficientSolver solver = CoefficientSolver::kExact,
                                     const AdamSolveOptions& adam = {});

double self_expressive_objective(const Matrix& q, const Matrix& z, double lambda1);

/// Similarity block from a coefficient matrix:
///   symmetrize, rank-r spectral factorization (r = d*K+1), L = U sqrt(|S|)
///   with unit rows, clip negatives, S = L'L'^T / max|L|, clamp to [0, 1].
Matrix build_similarity(const CoefficientMatrix& coeffs, int num_communities, int subspace_dim);

/// Batch-wise similarity learning over the embedding matrix (slices rows,
/// solves, builds, and inserts every unordered in-batch pair).
SimilarityStore learn_similarities(const Matrix& embeddings, const SelfExpressConfig& cfg);

/// Keeps the pairs with s <= theta_low or s >= 1 - theta_low.
std::vector<PairConstraint> filter_extreme(const SimilarityStore& store, double theta_low);

}  // namespace secomm
