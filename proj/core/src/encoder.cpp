#include "secomm/encoder.hpp"

#include <cmath>

#include "secomm/errors.hpp"
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

GcnEncoder GcnEncoder::init(int feature_dim, int hidden, int embedding_dim,
                            std::uint64_t seed) {
  require(feature_dim >= 1 && embedding_dim >= 1, "GcnEncoder: dimensions must be positive");
  if (hidden <= 0) hidden = embedding_dim;
  Rng rng(mix_seed(seed));
  GcnEncoder enc;
  enc.w0 = Parameter(glorot_uniform(feature_dim, hidden, rng));
  enc.w1 = Parameter(glorot_uniform(hidden, embedding_dim, rng));
  return enc;
}

Tensor gcn_forward(Tape& tape, const NormalizedAdjacency& adj, const Matrix& features,
                   Tensor w0, Tensor w1, double sparse_threshold) {
  require_shape(features.rows() == adj.mat.rows(),
                "gcn_forward: feature rows must match adjacency size");
  require_shape(features.cols() == w0.rows(), "gcn_forward: feature dim must match W0 rows");

  // The tape owns a copy of the adjacency: the backward pass may outlive the
  // caller's NormalizedAdjacency.
  const SparseMatrix& a_hat = tape.intern(adj.mat);

  Tensor xw0;
  if (density(features) <= sparse_threshold) {
    const SparseMatrix& xs = tape.intern(to_sparse(features));
    xw0 = tape.spmm(xs, w0);
  } else {
    xw0 = tape.matmul(tape.constant(features), w0);
  }
  Tensor h = tape.relu(tape.spmm(a_hat, xw0));
  return tape.relu(tape.spmm(a_hat, tape.matmul(h, w1)));
}

Matrix encode(const NormalizedAdjacency& adj, const Matrix& features, const GcnEncoder& enc) {
  Tape tape;
  Tensor z = gcn_forward(tape, adj, features, tape.constant(enc.w0.value),
                         tape.constant(enc.w1.value));
  return z.value();
}

IndexMatrix sample_negatives(int num_nodes, int num_negatives, Rng& rng) {
  require(num_negatives >= 1, "sample_negatives: need at least one negative");
  require(num_negatives <= num_nodes - 1,
          "sample_negatives: cannot draw " + std::to_string(num_negatives) +
              " negatives from " + std::to_string(num_nodes - 1) + " candidates");
  IndexMatrix out(num_nodes, num_negatives);
  // Draw from [0, N-1) and skip over the anchor; keeps draws uniform over V \ {i}.
  for (int i = 0; i < num_nodes; ++i) {
    std::vector<int> picks = sample_without_replacement(num_nodes - 1, num_negatives, rng);
    for (int k = 0; k < num_negatives; ++k) {
      const int v = picks[static_cast<std::size_t>(k)];
      out(i, k) = v >= i ? v + 1 : v;
    }
  }
  return out;
}

Tensor contrastive_loss(Tape& tape, Tensor z1, Tensor z2, const IndexMatrix& negatives,
                        double tau) {
  require(negatives.cols() >= 1, "contrastive_loss: empty negative set");
  return tape.contrastive_nce(z1, z2, negatives, tau);
}

PretrainResult pretrain(const AttributedGraph& g, GcnEncoder& enc,
                        const ContrastiveConfig& cfg) {
  require(cfg.tau > 0.0, "pretrain: tau must be positive");
  require(cfg.num_negatives >= 1 && cfg.num_negatives <= g.num_nodes - 1,
          "pretrain: num_negatives must be in [1, N-1]");
  require_shape(g.features.cols() == enc.w0.value.rows(),
                "pretrain: encoder input dim does not match features");

  AdamOptimizer opt({&enc.w0, &enc.w1}, AdamConfig{.learning_rate = cfg.learning_rate});
  Rng neg_rng(derive_seed(cfg.seed, /*stream=*/0));
  PretrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(std::max(cfg.epochs, 0)));

  AttributedGraph view1, view2;
  NormalizedAdjacency adj1, adj2;
  IndexMatrix negatives;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool fresh_views = cfg.resample_views || epoch == 0;
    if (fresh_views) {
      CorruptionConfig c1 = cfg.corruption;
      CorruptionConfig c2 = cfg.corruption;
      const std::uint64_t step = cfg.resample_views ? static_cast<std::uint64_t>(epoch) : 0;
      c1.seed = derive_seed(cfg.seed, /*stream=*/1, step);
      c2.seed = derive_seed(cfg.seed, /*stream=*/2, step);
      view1 = corrupt_graph(g, c1);
      view2 = corrupt_graph(g, c2);
      adj1 = normalize_adjacency(view1);
      adj2 = normalize_adjacency(view2);
    }
    if (cfg.resample_negatives || epoch == 0)
      negatives = sample_negatives(g.num_nodes, cfg.num_negatives, neg_rng);

    Tape tape;
    Tensor w0 = tape.leaf(enc.w0);
    Tensor w1 = tape.leaf(enc.w1);
    Tensor z1 = gcn_forward(tape, adj1, view1.features, w0, w1);
    Tensor z2 = gcn_forward(tape, adj2, view2.features, w0, w1);
    Tensor loss = contrastive_loss(tape, z1, z2, negatives, cfg.tau);
    if (cfg.symmetrized)
      loss = tape.scale(tape.add(loss, contrastive_loss(tape, z2, z1, negatives, cfg.tau)), 0.5);
    result.loss_history.push_back(loss.scalar());
    tape.backward(loss);
    opt.step();
  }

  result.embeddings = encode(normalize_adjacency(g), g.features, enc);
  return result;
}

}  // namespace secomm
