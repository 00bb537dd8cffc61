#pragma once

#include <cstdint>

#include "secomm/graph.hpp"

namespace secomm {

/// Planted-partition (stochastic block model) generator with block-informative
/// Gaussian features; used by property tests and scaling runs.
struct SbmConfig {
  int num_nodes = 100;
  int num_blocks = 2;
  double p_in = 0.2;        // edge probability inside a block
  double p_out = 0.02;      // edge probability across blocks
  int feature_dim = 8;      // must be >= num_blocks for the mean offsets
  double feature_signal = 1.0;
  double feature_noise = 0.3;
  std::uint64_t seed = 0;
};

/// Nodes are assigned to blocks round-robin; labels carry the planted
/// partition. Edge sampling uses geometric skipping, so large sparse graphs
/// stay O(|E|).
AttributedGraph make_sbm(const SbmConfig& cfg);

}  // namespace secomm
