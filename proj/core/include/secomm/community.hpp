#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "secomm/encoder.hpp"
#include "secomm/graph.hpp"
#include "secomm/self_expressive.hpp"
#include "secomm/tensor.hpp"

namespace secomm {

/// Two-layer MLP with a terminal row-softmax mapping embeddings to soft
/// community memberships.
struct CommunityHead {
  Parameter w0, b0;  // F' x H_c, 1 x H_c
  Parameter w1, b1;  // H_c x K, 1 x K

  int num_communities() const { return static_cast<int>(w1.value.cols()); }

  /// hidden <= 0 picks the default width max(2, F'/2).
  static CommunityHead init(int embedding_dim, int num_communities, std::uint64_t seed,
                            int hidden = 0);
};

/// Row-stochastic soft memberships; every row is a probability distribution.
struct MembershipMatrix {
  Matrix c;

  void validate(double tol = 1e-9) const;
  /// Row argmax; ties resolve to the lowest community index.
  std::vector<int> hard_labels() const;
};

struct TrainConfig {
  double lambda2 = 1.0;
  double alpha = 1.0;
  bool auto_balance = true;          // set alpha and lambda2 from iteration-0 magnitudes
  bool auto_balance_lambda1 = true;  // rebalance lambda1 from the first batch's solution
  int max_iters = 500;               // T
  double stop_rel_tol = 1e-4;        // regularizer saturation threshold
  int stop_window = 25;              // iterations between saturation probes
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool fresh_self_supervised = true;  // recompute L_SS on fresh views every iteration
  bool mean_pair_term = true;         // normalize the pair term by |S_ext|
  int recompute_similarity_every = 0;  // 0 keeps similarities fixed after the batch phase
  /// When set, similarities.tsv and extreme_pairs.tsv land here for inspection.
  std::filesystem::path similarity_dump_dir;
};

struct HistoryRow {
  int iteration = 0;
  double self_supervised = 0.0;
  double pair_term = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
  std::optional<double> accuracy;
};

struct TrainResult {
  MembershipMatrix memberships;
  Matrix embeddings;           // post-training Z of the original graph
  Matrix pretrain_embeddings;  // Z right after pretraining
  std::vector<int> labels;     // hard assignments
  std::vector<HistoryRow> history;
  std::vector<double> iteration_seconds;  // wall time per joint iteration
  std::vector<double> pretrain_loss;
  double lambda1_used = 0.0;
  double lambda2_used = 0.0;
  double alpha_used = 0.0;
  std::size_t pairs_total = 0;    // |S|
  std::size_t pairs_extreme = 0;  // |S_ext|
  int iterations_run = 0;
  bool stopped_by_saturation = false;
};

/// Tape-level forward pass of the membership head with caller-supplied
/// weight leaves.
Tensor membership_forward(Tape& tape, Tensor z, Tensor w0, Tensor b0, Tensor w1, Tensor b1);

/// Soft memberships of the given embeddings (no gradient bookkeeping).
MembershipMatrix membership(const Matrix& embeddings, const CommunityHead& head);

/// Pair-fit term plus lambda2 * orthogonality regularizer (plain evaluation).
double community_loss(const Matrix& memberships, std::span<const PairConstraint> pairs,
                      double lambda2, bool mean_pairs = false);

/// || C^T C / ||C^T C||_F - I_K/sqrt(K) ||_F^2
double orthogonality_regularizer(const Matrix& memberships);

/// alpha * self_supervised + community; both terms must be finite.
double total_loss(double self_supervised, double community, double alpha);

/// reference/component, or 1 (with a warning on stderr) when the component
/// magnitude is zero.
double balance_weight(double reference, double component, const char* name);

/// Loss-component magnitudes measured once before the first update.
struct InitialLossComponents {
  double reconstruction = 0.0;   // ||Z - QZ||_F^2 at the first batch solution
  double coefficient_norm = 0.0;  // ||Q||_F^2 at the first batch solution
  double pair_term = 0.0;
  double regularizer = 0.0;
  double self_supervised = 0.0;
};

struct BalancedWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double alpha = 1.0;
};

/// Sets each weight to (reference magnitude) / (its component magnitude) so
/// the weighted terms contribute comparably: lambda1 balances the coefficient
/// penalty against the reconstruction, lambda2 the regularizer against the
/// pair term, alpha the self-supervised loss against the community loss.
BalancedWeights auto_balance_weights(const InitialLossComponents& components);

/// filter_extreme plus the training-time contract: an empty result aborts
/// with a diagnostic suggesting a larger theta_low.
std::vector<PairConstraint> select_pair_constraints(const SimilarityStore& store,
                                                    double theta_low);

/// End-to-end pipeline: pretrain, batch-wise similarity learning, extreme-pair
/// filtering, then joint optimization of the total loss until the
/// orthogonality regularizer saturates. All randomness derives from
/// train_cfg.seed; seeds inside the sub-configs are ignored here.
TrainResult train(const AttributedGraph& g, int num_communities, const EncoderConfig& enc_cfg,
                  const ContrastiveConfig& pretrain_cfg, const SelfExpressConfig& se_cfg,
                  const TrainConfig& train_cfg);

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<HistoryRow>& history);
void write_assignments(const std::filesystem::path& path, const MembershipMatrix& memberships);

}  // namespace secomm
