#pragma once

#include <cstdint>
#include <vector>

#include "secomm/adam.hpp"
#include "secomm/graph.hpp"
#include "secomm/rng.hpp"
#include "secomm/tensor.hpp"

namespace secomm {

/// Two-layer graph convolutional encoder,
/// Z = ReLU(A_hat ReLU(A_hat X W0) W1).
struct GcnEncoder {
  Parameter w0;  // F x H
  Parameter w1;  // H x F'

  int input_dim() const { return static_cast<int>(w0.value.rows()); }
  int hidden_dim() const { return static_cast<int>(w0.value.cols()); }
  int embedding_dim() const { return static_cast<int>(w1.value.cols()); }

  /// Glorot-uniform initialization. hidden <= 0 means "same as embedding".
  static GcnEncoder init(int feature_dim, int hidden, int embedding_dim, std::uint64_t seed);
};

/// Encoder width settings; the hidden layer defaults to the embedding width.
struct EncoderConfig {
  int embedding_dim = 256;  // F'
  int hidden_dim = 0;       // 0 means "same as embedding_dim"
};

struct ContrastiveConfig {
  double tau = 0.4;
  int num_negatives = 256;  // must be <= N-1 for the graph at hand
  int epochs = 200;
  double learning_rate = 1e-3;
  CorruptionConfig corruption;     // applied independently to both views
  std::uint64_t seed = 0;
  bool symmetrized = false;        // also anchor the loss at view 2
  bool resample_views = true;      // fresh corruption every epoch
  bool resample_negatives = true;  // fresh negative sets every epoch
};

/// Tape-level forward pass with caller-supplied weight tensors; reuse the
/// same weight leaves across several calls to share parameters on one tape.
/// Feature matrices below `sparse_threshold` density are multiplied through
/// the sparse kernel.
Tensor gcn_forward(Tape& tape, const NormalizedAdjacency& adj, const Matrix& features,
                   Tensor w0, Tensor w1, double sparse_threshold = 0.25);

/// Plain evaluation of the encoder on a graph (no gradient bookkeeping).
Matrix encode(const NormalizedAdjacency& adj, const Matrix& features, const GcnEncoder& enc);

/// Per-node negative samples: uniform without replacement, excluding the
/// anchor itself.
IndexMatrix sample_negatives(int num_nodes, int num_negatives, Rng& rng);

/// Noise-contrastive loss between two views (see Tape::contrastive_nce);
/// checks the module-level preconditions and returns a scalar tensor.
Tensor contrastive_loss(Tape& tape, Tensor z1, Tensor z2, const IndexMatrix& negatives,
                        double tau);

struct PretrainResult {
  Matrix embeddings;               // N x F', computed on the uncorrupted graph
  std::vector<double> loss_history;
};

/// Self-supervised pretraining (shared-weight encoder over two corrupted
/// views). Mutates `enc` in place and returns the final embeddings of the
/// original graph.
PretrainResult pretrain(const AttributedGraph& g, GcnEncoder& enc, const ContrastiveConfig& cfg);

}  // namespace secomm
