#include "secomm/ablation.hpp"

#include "secomm/errors.hpp"
#include "secomm/rng.hpp"

namespace secomm {

std::map<std::string, ClusteringMetrics> run_ablations(const AttributedGraph& g,
                                                       int num_communities,
                                                       const AblationConfig& cfg) {
  require(g.labels.has_value(), "run_ablations: ground-truth labels required");
  if (cfg.include_spectral && g.num_nodes > cfg.spectral_max_nodes)
    throw ContractError("run_ablations: spectral variant needs the full N x N similarity "
                        "matrix and is refused for N = " +
                        std::to_string(g.num_nodes) + " > cap " +
                        std::to_string(cfg.spectral_max_nodes) +
                        "; raise the cap or disable the variant");

  TrainResult trained =
      train(g, num_communities, cfg.encoder, cfg.contrastive, cfg.self_expressive, cfg.training);

  const auto& truth = *g.labels;
  const std::uint64_t seed = cfg.training.seed;
  std::map<std::string, ClusteringMetrics> table;

  table["secomm"] = evaluate_clustering(trained.labels, truth, cfg.nmi_norm);
  table["secomm-gnn"] = evaluate_clustering(
      kmeans(trained.pretrain_embeddings, num_communities, cfg.kmeans_restarts,
             derive_seed(seed, 30)),
      truth, cfg.nmi_norm);
  table["secomm-embeddings"] = evaluate_clustering(
      kmeans(trained.embeddings, num_communities, cfg.kmeans_restarts, derive_seed(seed, 31)),
      truth, cfg.nmi_norm);

  if (cfg.include_spectral) {
    // Full-matrix special case: one batch covering every node.
    SelfExpressConfig full = cfg.self_expressive;
    full.num_communities = num_communities;
    full.batch_size = g.num_nodes;
    full.num_batches = 1;
    full.seed = derive_seed(seed, 32);
    SimilarityStore store = learn_similarities(trained.pretrain_embeddings, full);
    Matrix s = Matrix::Zero(g.num_nodes, g.num_nodes);
    for (const auto& p : store.sorted_pairs()) {
      s(p.i, p.j) = p.s;
      s(p.j, p.i) = p.s;
    }
    table["secomm-spectral"] = evaluate_clustering(
        spectral_clustering(s, num_communities, cfg.kmeans_restarts, derive_seed(seed, 33)),
        truth, cfg.nmi_norm);
  }
  return table;
}

}  // namespace secomm
