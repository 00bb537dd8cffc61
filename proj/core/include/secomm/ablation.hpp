#pragma once

#include <map>
#include <string>

#include "secomm/community.hpp"
#include "secomm/evaluation.hpp"

namespace secomm {

struct AblationConfig {
  EncoderConfig encoder;
  ContrastiveConfig contrastive;
  SelfExpressConfig self_expressive;
  TrainConfig training;
  int kmeans_restarts = 20;
  NmiNormalization nmi_norm = NmiNormalization::kGeometric;
  /// Full-matrix spectral clustering is refused above this node count.
  int spectral_max_nodes = 4000;
  bool include_spectral = true;
};

/// Variant scores from one trained model:
///   secomm-gnn        k-means on the pretrained embeddings
///   secomm-spectral   spectral clustering on the full similarity matrix
///   secomm-embeddings k-means on the post-training embeddings
///   secomm            the trained community head itself
std::map<std::string, ClusteringMetrics> run_ablations(const AttributedGraph& g,
                                                       int num_communities,
                                                       const AblationConfig& cfg);

}  // namespace secomm
