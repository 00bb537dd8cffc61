#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "secomm/run_config.hpp"

namespace secomm {

/// Runs the pipeline num_runs times (seed + run index), writing per-run
/// assignments.txt / history.csv / metrics.json plus a mean/std summary.
/// Returns 0 on success; throws UsageError for configuration mistakes.
int cmd_train(const RunConfig& cfg);

/// One full run per value of `parameter` (embedding_dim, theta_low,
/// num_batches or batch_size); emits <output_dir>/sweep_<parameter>.csv.
int cmd_sweep(const RunConfig& cfg, const std::string& parameter,
              const std::vector<double>& values);

/// Variant study on one trained model; emits ablation.json / ablation.txt.
int cmd_ablate(const RunConfig& cfg);

/// Converts a dataset into the canonical edge-tsv/feature-csv directory.
int cmd_convert(const std::filesystem::path& input, GraphFormat input_format,
                const std::filesystem::path& output_dir);

}  // namespace secomm
