#pragma once

#include <filesystem>
#include <string>

#include "secomm/ablation.hpp"
#include "secomm/community.hpp"

namespace secomm {

/// Evaluation knobs carried alongside the pipeline configs.
struct EvaluationConfig {
  int kmeans_restarts = 20;
  NmiNormalization nmi_norm = NmiNormalization::kGeometric;
  int spectral_max_nodes = 4000;
  bool include_spectral = true;
};

/// Everything one experiment needs; serializable to/from a strict JSON file
/// (unknown keys are rejected with the offending key named).
struct RunConfig {
  std::string dataset;
  GraphFormat format = GraphFormat::kEdgeTsvFeatureCsv;
  int num_communities = 0;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int num_runs = 1;
  bool parallel_runs = false;      // run the num_runs repetitions concurrently
  bool dump_similarities = false;  // write similarities.tsv / extreme_pairs.tsv per run

  CorruptionConfig corruption;
  EncoderConfig encoder;
  ContrastiveConfig contrastive;
  SelfExpressConfig self_expressive;
  TrainConfig training;
  EvaluationConfig evaluation;

  AblationConfig ablation() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);

std::string to_string(GraphFormat format);
GraphFormat graph_format_from_string(const std::string& name);

}  // namespace secomm
