#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "secomm/matrix.hpp"

namespace secomm {

/// Undirected attributed graph. Edges are stored canonically (u < v, sorted,
/// deduplicated, self-loops removed at ingestion). Labels, when present, are
/// dense ids in [0, K) and are used for evaluation only.
struct AttributedGraph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  Matrix features;  // num_nodes x F
  std::optional<std::vector<int>> labels;

  int num_edges() const { return static_cast<int>(edges.size()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  /// Number of distinct label values (0 when labels are absent).
  int num_label_classes() const;

  /// Checks the structural invariants (endpoint range, row count, label range).
  void validate() const;
};

/// Symmetrically normalized adjacency with self-loops, D^{-1/2} (A + I) D^{-1/2},
/// in compressed row storage. A node of degree d keeps diagonal weight 1/(d+1).
struct NormalizedAdjacency {
  SparseMatrix mat;

  int num_nodes() const { return static_cast<int>(mat.rows()); }
};

/// Stochastic view corruption: independent edge removal plus zeroing of a
/// random subset of feature dimensions.
struct CorruptionConfig {
  double p_edge = 0.2;  // probability of removing each edge
  double p_feat = 0.2;  // probability of masking each feature dimension
  std::uint64_t seed = 0;
  bool per_node_masking = false;  // mask (node, dim) cells instead of whole columns
};

enum class GraphFormat {
  kEdgeTsvFeatureCsv,  // directory with edges.tsv, features.csv, optional labels.txt
  kPlanetoidIndex,     // citation-index style <stem>.content + <stem>.cites
};

AttributedGraph load_graph(const std::filesystem::path& path, GraphFormat format);

/// Writes a graph in the canonical edge-tsv/feature-csv layout (atomic per file).
void write_graph(const std::filesystem::path& dir, const AttributedGraph& g);

NormalizedAdjacency normalize_adjacency(const AttributedGraph& g);

/// Produces one corrupted view. The vertex set is unchanged; each edge is
/// dropped independently with p_edge and feature dimensions are selected with
/// p_feat and zeroed across all nodes. Deterministic under a fixed seed.
AttributedGraph corrupt_graph(const AttributedGraph& g, const CorruptionConfig& cfg);

}  // namespace secomm
