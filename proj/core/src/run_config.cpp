#include "secomm/run_config.hpp"

#include <json.hpp>

#include "secomm/errors.hpp"
#include "secomm/io.hpp"

namespace secomm {

namespace {

using nlohmann::json;

// Strict object reader: every key must be consumed exactly once.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw UsageError("config: '" + path_ + "' must be an object");
  }

  ~ObjectReader() = default;

  template <typename T>
  void read(const char* key, T& out) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;  // missing keys keep their defaults
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw UsageError("config: bad value type for key '" + join(key) + "'");
    }
    seen_.push_back(key);
  }

  const json* child(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.push_back(key);
    return &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw UsageError("config: unknown key '" + join(it.key()) + "'");
    }
  }

 private:
  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

NmiNormalization nmi_norm_from_string(const std::string& s) {
  if (s == "geometric") return NmiNormalization::kGeometric;
  if (s == "min") return NmiNormalization::kMin;
  if (s == "max") return NmiNormalization::kMax;
  if (s == "arithmetic") return NmiNormalization::kArithmetic;
  throw UsageError("config: unknown nmi_normalization '" + s + "'");
}

std::string to_string(NmiNormalization n) {
  switch (n) {
    case NmiNormalization::kGeometric: return "geometric";
    case NmiNormalization::kMin: return "min";
    case NmiNormalization::kMax: return "max";
    case NmiNormalization::kArithmetic: return "arithmetic";
  }
  return "geometric";
}

CoefficientSolver solver_from_string(const std::string& s) {
  if (s == "exact") return CoefficientSolver::kExact;
  if (s == "adam") return CoefficientSolver::kAdamMasked;
  throw UsageError("config: unknown self-expressive solver '" + s + "'");
}

std::string to_string(CoefficientSolver s) {
  return s == CoefficientSolver::kExact ? "exact" : "adam";
}

}  // namespace

std::string to_string(GraphFormat format) {
  return format == GraphFormat::kEdgeTsvFeatureCsv ? "edge-tsv+feature-csv" : "planetoid-index";
}

GraphFormat graph_format_from_string(const std::string& name) {
  if (name == "edge-tsv+feature-csv") return GraphFormat::kEdgeTsvFeatureCsv;
  if (name == "planetoid-index") return GraphFormat::kPlanetoidIndex;
  throw UsageError("config: unknown dataset format '" + name + "'");
}

AblationConfig RunConfig::ablation() const {
  AblationConfig a;
  a.encoder = encoder;
  a.contrastive = contrastive;
  a.self_expressive = self_expressive;
  a.training = training;
  a.kmeans_restarts = evaluation.kmeans_restarts;
  a.nmi_norm = evaluation.nmi_norm;
  a.spectral_max_nodes = evaluation.spectral_max_nodes;
  a.include_spectral = evaluation.include_spectral;
  return a;
}

RunConfig parse_run_config(const std::string& json_text) {
  json root_json;
  try {
    root_json = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }

  RunConfig cfg;
  ObjectReader root(root_json, "");
  root.read("dataset", cfg.dataset);
  if (const json* v = root.child("format")) cfg.format = graph_format_from_string(v->get<std::string>());
  root.read("num_communities", cfg.num_communities);
  root.read("output_dir", cfg.output_dir);
  root.read("seed", cfg.seed);
  root.read("num_runs", cfg.num_runs);
  root.read("parallel_runs", cfg.parallel_runs);
  root.read("dump_similarities", cfg.dump_similarities);

  if (const json* v = root.child("corruption")) {
    ObjectReader r(*v, "corruption");
    r.read("p_edge", cfg.corruption.p_edge);
    r.read("p_feat", cfg.corruption.p_feat);
    r.read("per_node_masking", cfg.corruption.per_node_masking);
    r.finish();
  }
  if (const json* v = root.child("encoder")) {
    ObjectReader r(*v, "encoder");
    r.read("embedding_dim", cfg.encoder.embedding_dim);
    r.read("hidden_dim", cfg.encoder.hidden_dim);
    r.finish();
  }
  if (const json* v = root.child("contrastive")) {
    ObjectReader r(*v, "contrastive");
    r.read("tau", cfg.contrastive.tau);
    r.read("num_negatives", cfg.contrastive.num_negatives);
    r.read("epochs", cfg.contrastive.epochs);
    r.read("learning_rate", cfg.contrastive.learning_rate);
    r.read("symmetrized", cfg.contrastive.symmetrized);
    r.read("resample_views", cfg.contrastive.resample_views);
    r.read("resample_negatives", cfg.contrastive.resample_negatives);
    r.finish();
  }
  if (const json* v = root.child("self_expressive")) {
    ObjectReader r(*v, "self_expressive");
    r.read("batch_size", cfg.self_expressive.batch_size);
    r.read("num_batches", cfg.self_expressive.num_batches);
    r.read("lambda1", cfg.self_expressive.lambda1);
    r.read("subspace_dim", cfg.self_expressive.subspace_dim);
    r.read("theta_low", cfg.self_expressive.theta_low);
    r.read("average_duplicates", cfg.self_expressive.average_duplicates);
    r.read("adam_learning_rate", cfg.self_expressive.adam.learning_rate);
    r.read("adam_max_steps", cfg.self_expressive.adam.max_steps);
    r.read("adam_saturation_window", cfg.self_expressive.adam.saturation_window);
    r.read("adam_saturation_rel_tol", cfg.self_expressive.adam.saturation_rel_tol);
    if (const json* s = r.child("solver"))
      cfg.self_expressive.solver = solver_from_string(s->get<std::string>());
    r.finish();
  }
  if (const json* v = root.child("training")) {
    ObjectReader r(*v, "training");
    r.read("lambda2", cfg.training.lambda2);
    r.read("alpha", cfg.training.alpha);
    r.read("auto_balance", cfg.training.auto_balance);
    r.read("auto_balance_lambda1", cfg.training.auto_balance_lambda1);
    r.read("max_iters", cfg.training.max_iters);
    r.read("stop_rel_tol", cfg.training.stop_rel_tol);
    r.read("stop_window", cfg.training.stop_window);
    r.read("learning_rate", cfg.training.learning_rate);
    r.read("fresh_self_supervised", cfg.training.fresh_self_supervised);
    r.read("mean_pair_term", cfg.training.mean_pair_term);
    r.read("recompute_similarity_every", cfg.training.recompute_similarity_every);
    r.finish();
  }
  if (const json* v = root.child("evaluation")) {
    ObjectReader r(*v, "evaluation");
    r.read("kmeans_restarts", cfg.evaluation.kmeans_restarts);
    if (const json* s = r.child("nmi_normalization"))
      cfg.evaluation.nmi_norm = nmi_norm_from_string(s->get<std::string>());
    r.read("spectral_max_nodes", cfg.evaluation.spectral_max_nodes);
    r.read("include_spectral", cfg.evaluation.include_spectral);
    r.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

std::string serialize_run_config(const RunConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset;
  j["format"] = to_string(cfg.format);
  j["num_communities"] = cfg.num_communities;
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  j["num_runs"] = cfg.num_runs;
  j["parallel_runs"] = cfg.parallel_runs;
  j["dump_similarities"] = cfg.dump_similarities;
  j["corruption"] = {{"p_edge", cfg.corruption.p_edge},
                     {"p_feat", cfg.corruption.p_feat},
                     {"per_node_masking", cfg.corruption.per_node_masking}};
  j["encoder"] = {{"embedding_dim", cfg.encoder.embedding_dim},
                  {"hidden_dim", cfg.encoder.hidden_dim}};
  j["contrastive"] = {{"tau", cfg.contrastive.tau},
                      {"num_negatives", cfg.contrastive.num_negatives},
                      {"epochs", cfg.contrastive.epochs},
                      {"learning_rate", cfg.contrastive.learning_rate},
                      {"symmetrized", cfg.contrastive.symmetrized},
                      {"resample_views", cfg.contrastive.resample_views},
                      {"resample_negatives", cfg.contrastive.resample_negatives}};
  j["self_expressive"] = {{"batch_size", cfg.self_expressive.batch_size},
                          {"num_batches", cfg.self_expressive.num_batches},
                          {"lambda1", cfg.self_expressive.lambda1},
                          {"subspace_dim", cfg.self_expressive.subspace_dim},
                          {"theta_low", cfg.self_expressive.theta_low},
                          {"solver", to_string(cfg.self_expressive.solver)},
                          {"average_duplicates", cfg.self_expressive.average_duplicates},
                          {"adam_learning_rate", cfg.self_expressive.adam.learning_rate},
                          {"adam_max_steps", cfg.self_expressive.adam.max_steps},
                          {"adam_saturation_window", cfg.self_expressive.adam.saturation_window},
                          {"adam_saturation_rel_tol",
                           cfg.self_expressive.adam.saturation_rel_tol}};
  j["training"] = {{"lambda2", cfg.training.lambda2},
                   {"alpha", cfg.training.alpha},
                   {"auto_balance", cfg.training.auto_balance},
                   {"auto_balance_lambda1", cfg.training.auto_balance_lambda1},
                   {"max_iters", cfg.training.max_iters},
                   {"stop_rel_tol", cfg.training.stop_rel_tol},
                   {"stop_window", cfg.training.stop_window},
                   {"learning_rate", cfg.training.learning_rate},
                   {"fresh_self_supervised", cfg.training.fresh_self_supervised},
                   {"mean_pair_term", cfg.training.mean_pair_term},
                   {"recompute_similarity_every", cfg.training.recompute_similarity_every}};
  j["evaluation"] = {{"kmeans_restarts", cfg.evaluation.kmeans_restarts},
                     {"nmi_normalization", to_string(cfg.evaluation.nmi_norm)},
                     {"spectral_max_nodes", cfg.evaluation.spectral_max_nodes},
                     {"include_spectral", cfg.evaluation.include_spectral}};
  return j.dump(2) + "\n";
}

}  // namespace secomm
