#include "secomm/community.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <sstream>

#include "secomm/errors.hpp"
#include "secomm/evaluation.hpp"
#include "secomm/io.hpp"
#include "secomm/rng.hpp"

namespace secomm {

namespace {

Matrix glorot_uniform(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace

CommunityHead CommunityHead::init(int embedding_dim, int num_communities, std::uint64_t seed,
                                  int hidden) {
  require(embedding_dim >= 1, "CommunityHead: embedding dim must be positive");
  require(num_communities >= 2, "CommunityHead: need at least two communities");
  if (hidden <= 0) hidden = std::max(2, embedding_dim / 2);
  Rng rng(mix_seed(seed));
  CommunityHead head;
  head.w0 = Parameter(glorot_uniform(embedding_dim, hidden, rng));
  head.b0 = Parameter(Matrix::Zero(1, hidden));
  head.w1 = Parameter(glorot_uniform(hidden, num_communities, rng));
  head.b1 = Parameter(Matrix::Zero(1, num_communities));
  return head;
}

void MembershipMatrix::validate(double tol) const {
  for (Index i = 0; i < c.rows(); ++i) {
    double row_sum = 0.0;
    for (Index k = 0; k < c.cols(); ++k) {
      const double v = c(i, k);
      if (!(v >= 0.0 && v <= 1.0))
        throw NumericError("membership entry outside [0,1] at row " + std::to_string(i));
      row_sum += v;
    }
    if (std::abs(row_sum - 1.0) > tol)
      throw NumericError("membership row " + std::to_string(i) + " sums to " +
                         std::to_string(row_sum));
  }
}

std::vector<int> MembershipMatrix::hard_labels() const {
  std::vector<int> out(static_cast<std::size_t>(c.rows()));
  for (Index i = 0; i < c.rows(); ++i) {
    int best = 0;
    for (Index k = 1; k < c.cols(); ++k)
      if (c(i, k) > c(i, best)) best = static_cast<int>(k);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

Tensor membership_forward(Tape& tape, Tensor z, Tensor w0, Tensor b0, Tensor w1, Tensor b1) {
  Tensor h = tape.relu(tape.add_row_bias(tape.matmul(z, w0), b0));
  return tape.row_softmax(tape.add_row_bias(tape.matmul(h, w1), b1));
}

MembershipMatrix membership(const Matrix& embeddings, const CommunityHead& head) {
  require_shape(embeddings.cols() == head.w0.value.rows(),
                "membership: embedding dim does not match head input");
  Tape tape;
  Tensor c = membership_forward(tape, tape.constant(embeddings), tape.constant(head.w0.value),
                                tape.constant(head.b0.value), tape.constant(head.w1.value),
                                tape.constant(head.b1.value));
  MembershipMatrix out{c.value()};
  out.validate();
  return out;
}

double orthogonality_regularizer(const Matrix& memberships) {
  const Index k = memberships.cols();
  Matrix gram = memberships.transpose() * memberships;
  const double norm = std::max(gram.norm(), 1e-30);
  return (gram / norm - Matrix::Identity(k, k) / std::sqrt(static_cast<double>(k)))
      .squaredNorm();
}

double community_loss(const Matrix& memberships, std::span<const PairConstraint> pairs,
                      double lambda2, bool mean_pairs) {
  if (pairs.empty())
    std::cerr << "[secomm] warning: no pair constraints; community loss reduces to the "
                 "regularizer\n";
  double fit = 0.0;
  for (const auto& p : pairs) {
    const double diff = memberships.row(p.i).dot(memberships.row(p.j)) - p.s;
    fit += diff * diff;
  }
  if (mean_pairs && !pairs.empty()) fit /= static_cast<double>(pairs.size());
  return fit + lambda2 * orthogonality_regularizer(memberships);
}

double total_loss(double self_supervised, double community, double alpha) {
  if (!std::isfinite(self_supervised))
    throw NumericError("total_loss: self-supervised term is not finite");
  if (!std::isfinite(community)) throw NumericError("total_loss: community term is not finite");
  return alpha * self_supervised + community;
}

double balance_weight(double reference, double component, const char* name) {
  if (component <= 0.0 || !std::isfinite(component) || reference <= 0.0) {
    std::cerr << "[secomm] warning: cannot balance weight '" << name
              << "' (component magnitude " << component << "); leaving it at 1\n";
    return 1.0;
  }
  return reference / component;
}

BalancedWeights auto_balance_weights(const InitialLossComponents& c) {
  BalancedWeights w;
  w.lambda1 = balance_weight(c.reconstruction, c.coefficient_norm, "lambda1");
  w.lambda2 = balance_weight(c.pair_term, c.regularizer, "lambda2");
  const double community = c.pair_term + w.lambda2 * c.regularizer;
  w.alpha = balance_weight(community, c.self_supervised, "alpha");
  return w;
}

std::vector<PairConstraint> select_pair_constraints(const SimilarityStore& store,
                                                    double theta_low) {
  std::vector<PairConstraint> pairs = filter_extreme(store, theta_low);
  if (pairs.empty())
    throw std::runtime_error(
        "no extreme pairs survived filtering (" + std::to_string(store.size()) +
        " similarities, theta_low = " + std::to_string(theta_low) +
        "); increase theta_low so that more similarities fall outside "
        "(theta_low, 1 - theta_low)");
  return pairs;
}

namespace {

struct JointLossParts {
  Tensor self_supervised;
  Tensor pair_fit;
  Tensor regularizer;
  bool has_ss = false;
};

}  // namespace

TrainResult train(const AttributedGraph& g, int num_communities, const EncoderConfig& enc_cfg,
                  const ContrastiveConfig& pretrain_cfg, const SelfExpressConfig& se_cfg,
                  const TrainConfig& train_cfg) {
  require(num_communities >= 2, "train: need at least two communities");
  require(g.num_nodes >= 2, "train: graph too small");
  const std::uint64_t master = train_cfg.seed;

  GcnEncoder enc = GcnEncoder::init(g.feature_dim(), enc_cfg.hidden_dim, enc_cfg.embedding_dim,
                                    derive_seed(master, 10));
  CommunityHead head =
      CommunityHead::init(enc_cfg.embedding_dim, num_communities, derive_seed(master, 11));

  // Line 2: self-supervised pretraining.
  ContrastiveConfig pre_cfg = pretrain_cfg;
  pre_cfg.seed = derive_seed(master, 12);
  PretrainResult pre = pretrain(g, enc, pre_cfg);

  TrainResult result;
  result.pretrain_embeddings = pre.embeddings;
  result.pretrain_loss = std::move(pre.loss_history);

  // Lines 4-8: batch-wise self-expressive similarities.
  SelfExpressConfig se = se_cfg;
  se.num_communities = num_communities;
  se.seed = derive_seed(master, 13);
  if (se.batch_size <= 0) se.batch_size = g.num_nodes;
  if (train_cfg.auto_balance_lambda1) {
    // Rebalance the coefficient penalty against the reconstruction term,
    // measured at the first batch's solution.
    const auto batches = sample_batches(g.num_nodes, se.batch_size, se.num_batches, se.seed);
    Matrix zb(static_cast<Index>(batches[0].size()), pre.embeddings.cols());
    for (std::size_t k = 0; k < batches[0].size(); ++k)
      zb.row(static_cast<Index>(k)) = pre.embeddings.row(batches[0][k]);
    const CoefficientMatrix q = solve_coefficients(zb, se.lambda1, se.solver, se.adam);
    const double recon = (zb - q.q * zb).squaredNorm();
    const double penalty = q.q.squaredNorm();
    se.lambda1 *= balance_weight(recon, penalty * se.lambda1, "lambda1");
  }
  result.lambda1_used = se.lambda1;

  auto learn_pairs = [&](const Matrix& z) {
    SimilarityStore store = learn_similarities(z, se);
    result.pairs_total = store.size();
    auto pairs = select_pair_constraints(store, se.theta_low);
    result.pairs_extreme = pairs.size();
    if (!train_cfg.similarity_dump_dir.empty()) {
      atomic_write_file(train_cfg.similarity_dump_dir / "similarities.tsv", store.to_tsv());
      std::ostringstream os;
      os.precision(17);
      for (const auto& p : pairs) os << p.i << '\t' << p.j << '\t' << p.s << '\n';
      atomic_write_file(train_cfg.similarity_dump_dir / "extreme_pairs.tsv", os.str());
    }
    return pairs;
  };
  std::vector<PairConstraint> pairs = learn_pairs(pre.embeddings);

  // Lines 10-14: joint optimization.
  const NormalizedAdjacency adj = normalize_adjacency(g);
  AdamOptimizer opt({&enc.w0, &enc.w1, &head.w0, &head.b0, &head.w1, &head.b1},
                    AdamConfig{.learning_rate = train_cfg.learning_rate});
  Rng neg_rng(derive_seed(master, 14));
  double alpha = train_cfg.alpha;
  double lambda2 = train_cfg.lambda2;
  double frozen_ss = 0.0;  // reported value when fresh_self_supervised is off

  std::deque<double> reg_trace;
  for (int iter = 0; iter < train_cfg.max_iters; ++iter) {
    const auto iter_start = std::chrono::steady_clock::now();
    Tape tape;
    Tensor w0 = tape.leaf(enc.w0);
    Tensor w1 = tape.leaf(enc.w1);
    Tensor z = gcn_forward(tape, adj, g.features, w0, w1);
    Tensor c = membership_forward(tape, z, tape.leaf(head.w0), tape.leaf(head.b0),
                                  tape.leaf(head.w1), tape.leaf(head.b1));

    JointLossParts parts;
    parts.pair_fit = tape.pair_constraint_loss(c, pairs, train_cfg.mean_pair_term);
    parts.regularizer = tape.orthogonality_penalty(c);
    if (train_cfg.fresh_self_supervised || iter == 0) {
      CorruptionConfig c1 = pretrain_cfg.corruption;
      CorruptionConfig c2 = pretrain_cfg.corruption;
      c1.seed = derive_seed(master, 20, static_cast<std::uint64_t>(iter));
      c2.seed = derive_seed(master, 21, static_cast<std::uint64_t>(iter));
      const AttributedGraph v1 = corrupt_graph(g, c1);
      const AttributedGraph v2 = corrupt_graph(g, c2);
      const IndexMatrix negatives =
          sample_negatives(g.num_nodes, pretrain_cfg.num_negatives, neg_rng);
      Tensor z1 = gcn_forward(tape, normalize_adjacency(v1), v1.features, w0, w1);
      Tensor z2 = gcn_forward(tape, normalize_adjacency(v2), v2.features, w0, w1);
      parts.self_supervised = contrastive_loss(tape, z1, z2, negatives, pretrain_cfg.tau);
      parts.has_ss = true;
      frozen_ss = parts.self_supervised.scalar();
    }

    const double ss_value = parts.has_ss ? parts.self_supervised.scalar() : frozen_ss;
    const double pair_value = parts.pair_fit.scalar();
    const double reg_value = parts.regularizer.scalar();

    if (iter == 0 && train_cfg.auto_balance) {
      lambda2 = balance_weight(pair_value, reg_value, "lambda2");
      const double community_value = pair_value + lambda2 * reg_value;
      alpha = balance_weight(community_value, ss_value, "alpha");
    }

    Tensor community_part =
        tape.add(parts.pair_fit, tape.scale(parts.regularizer, lambda2));
    Tensor total = parts.has_ss
                       ? tape.add(tape.scale(parts.self_supervised, alpha), community_part)
                       : community_part;
    // Surface NaN/Inf with the offending term named before stepping.
    const double total_value = total_loss(ss_value, pair_value + lambda2 * reg_value, alpha);

    HistoryRow row;
    row.iteration = iter;
    row.self_supervised = ss_value;
    row.pair_term = pair_value;
    row.regularizer = reg_value;
    row.total = total_value;
    if (g.labels) {
      MembershipMatrix snapshot{c.value()};
      row.accuracy = clustering_accuracy(snapshot.hard_labels(), *g.labels);
    }
    result.history.push_back(row);

    tape.backward(total);
    opt.step();
    result.iterations_run = iter + 1;
    result.iteration_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - iter_start).count());

    // Stopping: saturation of the orthogonality regularizer.
    reg_trace.push_back(reg_value);
    if (static_cast<int>(reg_trace.size()) > train_cfg.stop_window + 1) reg_trace.pop_front();
    if (static_cast<int>(reg_trace.size()) == train_cfg.stop_window + 1) {
      const double past = reg_trace.front();
      const double rel = std::abs(reg_value - past) / std::max(std::abs(past), 1e-30);
      if (rel < train_cfg.stop_rel_tol) {
        result.stopped_by_saturation = true;
        break;
      }
    }

    if (train_cfg.recompute_similarity_every > 0 &&
        (iter + 1) % train_cfg.recompute_similarity_every == 0 &&
        iter + 1 < train_cfg.max_iters) {
      pairs = learn_pairs(encode(adj, g.features, enc));
    }
  }

  result.embeddings = encode(adj, g.features, enc);
  result.memberships = membership(result.embeddings, head);
  result.labels = result.memberships.hard_labels();
  result.alpha_used = alpha;
  result.lambda2_used = lambda2;
  return result;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<HistoryRow>& history) {
  std::ostringstream os;
  os.precision(12);
  os << "iteration,self_supervised,pair_term,regularizer,total,accuracy\n";
  for (const auto& row : history) {
    os << row.iteration << ',' << row.self_supervised << ',' << row.pair_term << ','
       << row.regularizer << ',' << row.total << ',';
    if (row.accuracy) os << *row.accuracy;
    os << '\n';
  }
  atomic_write_file(path, os.str());
}

void write_assignments(const std::filesystem::path& path, const MembershipMatrix& m) {
  std::ostringstream os;
  os.precision(12);
  const auto labels = m.hard_labels();
  for (Index i = 0; i < m.c.rows(); ++i) {
    os << i << '\t' << labels[static_cast<std::size_t>(i)];
    for (Index k = 0; k < m.c.cols(); ++k) os << '\t' << m.c(i, k);
    os << '\n';
  }
  atomic_write_file(path, os.str());
}

}  // namespace secomm
