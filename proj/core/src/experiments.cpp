#include "secomm/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <future>
#include <iostream>
#include <sstream>

#include "secomm/errors.hpp"
#include "secomm/io.hpp"

namespace secomm {

namespace {

using nlohmann::json;

struct RunOutcome {
  TrainResult result;
  std::optional<ClusteringMetrics> metrics;
};

RunOutcome run_once(const AttributedGraph& g, const RunConfig& cfg, std::uint64_t run_seed,
                    const std::filesystem::path& dump_dir = {}) {
  TrainConfig tc = cfg.training;
  tc.seed = run_seed;
  tc.similarity_dump_dir = dump_dir;
  RunOutcome out{train(g, cfg.num_communities, cfg.encoder, cfg.contrastive,
                       cfg.self_expressive, tc),
                 std::nullopt};
  if (g.labels)
    out.metrics = evaluate_clustering(out.result.labels, *g.labels, cfg.evaluation.nmi_norm);
  return out;
}

std::string metrics_flat_text(const std::optional<ClusteringMetrics>& m) {
  std::ostringstream os;
  os.precision(12);
  if (!m) {
    os << "available=false\n";
  } else {
    os << "available=true\naccuracy=" << m->accuracy << "\nnmi=" << m->nmi
       << "\nmacro_f1=" << m->macro_f1 << "\n";
  }
  return os.str();
}

json metrics_json(const std::optional<ClusteringMetrics>& m) {
  if (!m) return json{{"available", false}};
  return json{{"available", true},
              {"accuracy", m->accuracy},
              {"nmi", m->nmi},
              {"macro_f1", m->macro_f1}};
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  for (double x : xs) out.std += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(xs.size()));
  return out;
}

void validate_common(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw UsageError("config: 'dataset' is required");
  if (cfg.num_communities < 2) throw UsageError("config: 'num_communities' must be >= 2");
  if (cfg.num_runs < 1) throw UsageError("config: 'num_runs' must be >= 1");
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
  validate_common(cfg);
  const AttributedGraph g = load_graph(cfg.dataset, cfg.format);
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<std::filesystem::path> run_dirs;
  for (int r = 0; r < cfg.num_runs; ++r) {
    run_dirs.push_back(out_dir / ("run_" + std::to_string(r)));
    std::filesystem::create_directories(run_dirs.back());
  }
  auto dump_dir = [&](int r) {
    return cfg.dump_similarities ? run_dirs[static_cast<std::size_t>(r)]
                                 : std::filesystem::path();
  };

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(cfg.num_runs));
  if (cfg.parallel_runs && cfg.num_runs > 1) {
    std::vector<std::future<RunOutcome>> futures;
    futures.reserve(static_cast<std::size_t>(cfg.num_runs));
    for (int r = 0; r < cfg.num_runs; ++r)
      futures.push_back(std::async(std::launch::async, [&, r] {
        return run_once(g, cfg, cfg.seed + static_cast<std::uint64_t>(r), dump_dir(r));
      }));
    for (int r = 0; r < cfg.num_runs; ++r)
      outcomes[static_cast<std::size_t>(r)] = futures[static_cast<std::size_t>(r)].get();
  } else {
    for (int r = 0; r < cfg.num_runs; ++r)
      outcomes[static_cast<std::size_t>(r)] =
          run_once(g, cfg, cfg.seed + static_cast<std::uint64_t>(r), dump_dir(r));
  }

  std::vector<double> acc, nmi_scores, f1;
  json runs = json::array();
  for (int r = 0; r < cfg.num_runs; ++r) {
    const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(r);
    const RunOutcome& outcome = outcomes[static_cast<std::size_t>(r)];
    const auto& run_dir = run_dirs[static_cast<std::size_t>(r)];
    write_assignments(run_dir / "assignments.txt", outcome.result.memberships);
    write_history_csv(run_dir / "history.csv", outcome.result.history);

    json m = metrics_json(outcome.metrics);
    m["seed"] = run_seed;
    m["iterations"] = outcome.result.iterations_run;
    m["stopped_by_saturation"] = outcome.result.stopped_by_saturation;
    m["pairs_total"] = outcome.result.pairs_total;
    m["pairs_extreme"] = outcome.result.pairs_extreme;
    m["alpha"] = outcome.result.alpha_used;
    m["lambda1"] = outcome.result.lambda1_used;
    m["lambda2"] = outcome.result.lambda2_used;
    atomic_write_file(run_dir / "metrics.json", m.dump(2) + "\n");
    atomic_write_file(run_dir / "metrics.txt", metrics_flat_text(outcome.metrics));
    runs.push_back(m);

    if (outcome.metrics) {
      acc.push_back(outcome.metrics->accuracy);
      nmi_scores.push_back(outcome.metrics->nmi);
      f1.push_back(outcome.metrics->macro_f1);
      std::cout << "run " << r << " (seed " << run_seed
                << "): accuracy=" << outcome.metrics->accuracy
                << " nmi=" << outcome.metrics->nmi << " macro_f1=" << outcome.metrics->macro_f1
                << "\n";
    } else {
      std::cout << "run " << r << " (seed " << run_seed
                << "): metrics unavailable (no labels)\n";
    }
  }

  json summary;
  summary["runs"] = runs;
  summary["num_runs"] = cfg.num_runs;
  if (!acc.empty()) {
    const MeanStd a = mean_std(acc), n = mean_std(nmi_scores), f = mean_std(f1);
    summary["metrics"] = {{"available", true},
                          {"accuracy", {{"mean", a.mean}, {"std", a.std}}},
                          {"nmi", {{"mean", n.mean}, {"std", n.std}}},
                          {"macro_f1", {{"mean", f.mean}, {"std", f.std}}}};
    std::cout << "summary over " << cfg.num_runs << " runs: accuracy=" << a.mean << "±" << a.std
              << " nmi=" << n.mean << "±" << n.std << " macro_f1=" << f.mean << "±" << f.std
              << "\n";
  } else {
    summary["metrics"] = {{"available", false}};
    std::cout << "summary: metrics unavailable (dataset has no labels)\n";
  }
  atomic_write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& parameter,
              const std::vector<double>& values) {
  validate_common(cfg);
  if (values.empty()) throw UsageError("sweep: value list is empty");
  const bool known = parameter == "embedding_dim" || parameter == "theta_low" ||
                     parameter == "num_batches" || parameter == "batch_size";
  if (!known) throw UsageError("sweep: unknown parameter '" + parameter + "'");

  const AttributedGraph g = load_graph(cfg.dataset, cfg.format);
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  std::ostringstream csv;
  csv.precision(12);
  csv << "parameter,value,accuracy,nmi,macro_f1\n";
  for (double value : values) {
    RunConfig point = cfg;
    if (parameter == "embedding_dim")
      point.encoder.embedding_dim = static_cast<int>(value);
    else if (parameter == "theta_low")
      point.self_expressive.theta_low = value;
    else if (parameter == "num_batches")
      point.self_expressive.num_batches = static_cast<int>(value);
    else
      point.self_expressive.batch_size = static_cast<int>(value);

    RunOutcome outcome = run_once(g, point, point.seed);
    csv << parameter << ',' << value << ',';
    if (outcome.metrics)
      csv << outcome.metrics->accuracy << ',' << outcome.metrics->nmi << ','
          << outcome.metrics->macro_f1;
    else
      csv << ",,";
    csv << '\n';
    std::cout << parameter << "=" << value;
    if (outcome.metrics) std::cout << " accuracy=" << outcome.metrics->accuracy;
    std::cout << "\n";
  }
  atomic_write_file(out_dir / ("sweep_" + parameter + ".csv"), csv.str());
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  validate_common(cfg);
  const AttributedGraph g = load_graph(cfg.dataset, cfg.format);
  AblationConfig ab = cfg.ablation();
  ab.training.seed = cfg.seed;
  const auto table = run_ablations(g, cfg.num_communities, ab);

  const std::filesystem::path out_dir(cfg.output_dir);
  json j;
  for (const auto& [name, m] : table)
    j[name] = {{"accuracy", m.accuracy}, {"nmi", m.nmi}, {"macro_f1", m.macro_f1}};
  atomic_write_file(out_dir / "ablation.json", j.dump(2) + "\n");
  const std::string text = metrics_to_text(table);
  atomic_write_file(out_dir / "ablation.txt", text);
  std::cout << text;
  return 0;
}

int cmd_convert(const std::filesystem::path& input, GraphFormat input_format,
                const std::filesystem::path& output_dir) {
  const AttributedGraph g = load_graph(input, input_format);
  write_graph(output_dir, g);
  std::cout << "wrote " << output_dir.string() << ": " << g.num_nodes << " nodes, "
            << g.num_edges() << " edges, " << g.feature_dim() << " features";
  if (g.labels) std::cout << ", " << g.num_label_classes() << " label classes";
  std::cout << "\n";
  return 0;
}

}  // namespace secomm
