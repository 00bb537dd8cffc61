#include "secomm/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "secomm/errors.hpp"
#include "secomm/io.hpp"
#include "secomm/rng.hpp"

namespace secomm {
namespace {

std::string fmt_path(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + fmt_path(p));
  return in;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  for (auto& tok : out) {
    while (!tok.empty() && (tok.back() == '\r' || tok.back() == '\n' || tok.back() == ' '))
      tok.pop_back();
    std::size_t lead = tok.find_first_not_of(" \t");
    if (lead != std::string::npos && lead > 0) tok.erase(0, lead);
  }
  return out;
}

double parse_double(const std::string& tok, const std::filesystem::path& p, int lineno) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError("bad numeric value '" + tok + "' at " + fmt_path(p) + ":" +
                      std::to_string(lineno));
  return v;
}

long parse_int(const std::string& tok, const std::filesystem::path& p, int lineno) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError("bad integer '" + tok + "' at " + fmt_path(p) + ":" +
                      std::to_string(lineno));
  return v;
}

// Canonicalize: undirected, deduplicated, self-loops dropped, sorted.
std::vector<std::pair<int, int>> canonical_edges(std::vector<std::pair<int, int>> raw) {
  for (auto& e : raw)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  std::erase_if(raw, [](const auto& e) { return e.first == e.second; });
  return raw;
}

std::vector<int> densify_labels(const std::vector<long>& raw) {
  std::set<long> distinct(raw.begin(), raw.end());
  std::map<long, int> to_dense;
  int next = 0;
  for (long v : distinct) to_dense[v] = next++;
  std::vector<int> out;
  out.reserve(raw.size());
  for (long v : raw) out.push_back(to_dense[v]);
  return out;
}

AttributedGraph load_edge_tsv_feature_csv(const std::filesystem::path& dir) {
  const auto edges_path = dir / "edges.tsv";
  const auto feats_path = dir / "features.csv";
  const auto labels_path = dir / "labels.txt";
  if (!std::filesystem::exists(feats_path)) throw IoError("missing " + fmt_path(feats_path));
  if (!std::filesystem::exists(edges_path)) throw IoError("missing " + fmt_path(edges_path));

  // Features first: the row count defines N.
  std::vector<std::vector<double>> rows;
  {
    auto in = open_or_throw(feats_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      auto toks = split(line, ',');
      std::vector<double> row;
      row.reserve(toks.size());
      for (const auto& t : toks) row.push_back(parse_double(t, feats_path, lineno));
      if (!rows.empty() && row.size() != rows.front().size())
        throw FormatError("ragged feature row at " + fmt_path(feats_path) + ":" +
                          std::to_string(lineno));
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw FormatError("empty feature file " + fmt_path(feats_path));

  AttributedGraph g;
  g.num_nodes = static_cast<int>(rows.size());
  g.features.resize(g.num_nodes, static_cast<Index>(rows.front().size()));
  for (int i = 0; i < g.num_nodes; ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      g.features(i, static_cast<Index>(j)) = rows[static_cast<std::size_t>(i)][j];

  std::vector<std::pair<int, int>> raw;
  {
    auto in = open_or_throw(edges_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      auto toks = split(line, '\t');
      if (toks.size() != 2)
        throw FormatError("expected 'u<TAB>v' at " + fmt_path(edges_path) + ":" +
                          std::to_string(lineno));
      long u = parse_int(toks[0], edges_path, lineno);
      long v = parse_int(toks[1], edges_path, lineno);
      if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes)
        throw FormatError("edge endpoint out of range at " + fmt_path(edges_path) + ":" +
                          std::to_string(lineno) + " (graph has " +
                          std::to_string(g.num_nodes) + " nodes)");
      raw.emplace_back(static_cast<int>(u), static_cast<int>(v));
    }
  }
  g.edges = canonical_edges(std::move(raw));

  if (std::filesystem::exists(labels_path)) {
    auto in = open_or_throw(labels_path);
    std::string line;
    std::vector<long> raw_labels;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      raw_labels.push_back(parse_int(line, labels_path, lineno));
    }
    if (static_cast<int>(raw_labels.size()) != g.num_nodes)
      throw FormatError("label count " + std::to_string(raw_labels.size()) +
                        " does not match node count " + std::to_string(g.num_nodes) + " in " +
                        fmt_path(labels_path));
    g.labels = densify_labels(raw_labels);
  }
  g.validate();
  return g;
}

// Citation-index layout: <stem>.content holds "id [tab] f1 .. fF [tab] label",
// <stem>.cites holds "id1 [tab] id2" per line. Node ids may be arbitrary strings.
AttributedGraph load_planetoid_index(const std::filesystem::path& path) {
  std::filesystem::path content, cites;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.path().extension() == ".content") content = entry.path();
      if (entry.path().extension() == ".cites") cites = entry.path();
    }
    if (content.empty() || cites.empty())
      throw IoError("no .content/.cites pair under " + fmt_path(path));
  } else {
    content = path;
    content += ".content";
    cites = path;
    cites += ".cites";
  }
  if (!std::filesystem::exists(content)) throw IoError("missing " + fmt_path(content));
  if (!std::filesystem::exists(cites)) throw IoError("missing " + fmt_path(cites));

  std::map<std::string, int> node_id;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_names;
  {
    auto in = open_or_throw(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      auto toks = split(line, '\t');
      if (toks.size() < 3)
        throw FormatError("expected 'id features... label' at " + fmt_path(content) + ":" +
                          std::to_string(lineno));
      if (!node_id.emplace(toks.front(), static_cast<int>(rows.size())).second)
        throw FormatError("duplicate node id '" + toks.front() + "' at " + fmt_path(content) +
                          ":" + std::to_string(lineno));
      std::vector<double> row;
      row.reserve(toks.size() - 2);
      for (std::size_t j = 1; j + 1 < toks.size(); ++j)
        row.push_back(parse_double(toks[j], content, lineno));
      if (!rows.empty() && row.size() != rows.front().size())
        throw FormatError("ragged feature row at " + fmt_path(content) + ":" +
                          std::to_string(lineno));
      rows.push_back(std::move(row));
      label_names.push_back(toks.back());
    }
  }
  if (rows.empty()) throw FormatError("empty content file " + fmt_path(content));

  AttributedGraph g;
  g.num_nodes = static_cast<int>(rows.size());
  g.features.resize(g.num_nodes, static_cast<Index>(rows.front().size()));
  for (int i = 0; i < g.num_nodes; ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      g.features(i, static_cast<Index>(j)) = rows[static_cast<std::size_t>(i)][j];

  // Label strings map to dense ids in lexicographic order, deterministically.
  {
    std::set<std::string> distinct(label_names.begin(), label_names.end());
    std::map<std::string, int> to_dense;
    int next = 0;
    for (const auto& name : distinct) to_dense[name] = next++;
    std::vector<int> labels;
    labels.reserve(label_names.size());
    for (const auto& name : label_names) labels.push_back(to_dense[name]);
    g.labels = std::move(labels);
  }

  std::vector<std::pair<int, int>> raw;
  {
    auto in = open_or_throw(cites);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      auto toks = split(line, '\t');
      if (toks.size() != 2)
        throw FormatError("expected 'id1<TAB>id2' at " + fmt_path(cites) + ":" +
                          std::to_string(lineno));
      auto a = node_id.find(toks[0]);
      auto b = node_id.find(toks[1]);
      if (a == node_id.end() || b == node_id.end())
        throw FormatError("edge references unknown node id at " + fmt_path(cites) + ":" +
                          std::to_string(lineno));
      raw.emplace_back(a->second, b->second);
    }
  }
  g.edges = canonical_edges(std::move(raw));
  g.validate();
  return g;
}

}  // namespace

int AttributedGraph::num_label_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void AttributedGraph::validate() const {
  if (num_nodes < 0) throw FormatError("negative node count");
  if (features.rows() != num_nodes)
    throw FormatError("feature matrix has " + std::to_string(features.rows()) +
                      " rows for " + std::to_string(num_nodes) + " nodes");
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw FormatError("edge endpoint out of range");
    if (u == v) throw FormatError("self-loop survived ingestion");
  }
  if (labels) {
    if (static_cast<int>(labels->size()) != num_nodes)
      throw FormatError("label vector length does not match node count");
    for (int l : *labels)
      if (l < 0) throw FormatError("negative label id");
  }
}

AttributedGraph load_graph(const std::filesystem::path& path, GraphFormat format) {
  switch (format) {
    case GraphFormat::kEdgeTsvFeatureCsv:
      return load_edge_tsv_feature_csv(path);
    case GraphFormat::kPlanetoidIndex:
      return load_planetoid_index(path);
  }
  throw ContractError("unknown graph format");
}

void write_graph(const std::filesystem::path& dir, const AttributedGraph& g) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream os;
    for (const auto& [u, v] : g.edges) os << u << '\t' << v << '\n';
    atomic_write_file(dir / "edges.tsv", os.str());
  }
  {
    std::ostringstream os;
    os.precision(17);
    for (Index i = 0; i < g.features.rows(); ++i) {
      for (Index j = 0; j < g.features.cols(); ++j) {
        if (j) os << ',';
        os << g.features(i, j);
      }
      os << '\n';
    }
    atomic_write_file(dir / "features.csv", os.str());
  }
  if (g.labels) {
    std::ostringstream os;
    for (int l : *g.labels) os << l << '\n';
    atomic_write_file(dir / "labels.txt", os.str());
  }
}

NormalizedAdjacency normalize_adjacency(const AttributedGraph& g) {
  require(g.num_nodes >= 1, "normalize_adjacency: graph must have at least one node");
  const int n = g.num_nodes;
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (const auto& [u, v] : g.edges) {
    degree[static_cast<std::size_t>(u)] += 1.0;
    degree[static_cast<std::size_t>(v)] += 1.0;
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * g.edges.size() + static_cast<std::size_t>(n));
  auto inv_sqrt = [&](int i) { return 1.0 / std::sqrt(degree[static_cast<std::size_t>(i)] + 1.0); };
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
  for (const auto& [u, v] : g.edges) {
    const double w = inv_sqrt(u) * inv_sqrt(v);
    trips.emplace_back(u, v, w);
    trips.emplace_back(v, u, w);
  }

  NormalizedAdjacency out;
  out.mat.resize(n, n);
  out.mat.setFromTriplets(trips.begin(), trips.end());
  out.mat.makeCompressed();
  return out;
}

AttributedGraph corrupt_graph(const AttributedGraph& g, const CorruptionConfig& cfg) {
  require(cfg.p_edge >= 0.0 && cfg.p_edge <= 1.0, "corrupt_graph: p_edge must be in [0,1]");
  require(cfg.p_feat >= 0.0 && cfg.p_feat <= 1.0, "corrupt_graph: p_feat must be in [0,1]");

  AttributedGraph out;
  out.num_nodes = g.num_nodes;
  out.features = g.features;
  out.labels = g.labels;

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  out.edges.reserve(g.edges.size());
  for (const auto& e : g.edges)
    if (unit(rng) >= cfg.p_edge) out.edges.push_back(e);

  const Index f = g.features.cols();
  if (cfg.per_node_masking) {
    for (Index i = 0; i < out.features.rows(); ++i)
      for (Index j = 0; j < f; ++j)
        if (unit(rng) < cfg.p_feat) out.features(i, j) = 0.0;
  } else {
    for (Index j = 0; j < f; ++j)
      if (unit(rng) < cfg.p_feat) out.features.col(j).setZero();
  }
  return out;
}

}  // namespace secomm
