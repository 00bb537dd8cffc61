#include "secomm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "secomm/errors.hpp"
#include "secomm/rng.hpp"

namespace secomm {

namespace {

// Visits each index of [0, total) independently with probability p, in
// increasing order, via geometric gap skipping.
template <typename Emit>
void bernoulli_indices(long long total, double p, Rng& rng, Emit&& emit) {
  if (total <= 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (long long t = 0; t < total; ++t) emit(t);
    return;
  }
  const double log1mp = std::log1p(-p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long long t = -1;
  while (true) {
    const double u = 1.0 - unit(rng);  // in (0, 1]
    t += 1 + static_cast<long long>(std::floor(std::log(u) / log1mp));
    if (t < 0 || t >= total) break;    // negative on overflow
    emit(t);
  }
}

// Unranks p into the pair (i, j), 0 <= i < j < c, enumerated row-major.
std::pair<long long, long long> unrank_triangle(long long p, long long c) {
  // Rows before i cover S(i) = i(c-1) - i(i-1)/2 entries; invert the
  // quadratic approximately and fix up.
  const double cd = static_cast<double>(c) - 0.5;
  const double guess = cd - std::sqrt(std::max(cd * cd - 2.0 * static_cast<double>(p), 0.0));
  long long i = std::max<long long>(0, static_cast<long long>(guess) - 2);
  auto row_start = [c](long long r) { return r * (c - 1) - r * (r - 1) / 2; };
  while (i + 1 < c - 1 && row_start(i + 1) <= p) ++i;
  while (i > 0 && row_start(i) > p) --i;
  const long long j = i + 1 + (p - row_start(i));
  return {i, j};
}

}  // namespace

AttributedGraph make_sbm(const SbmConfig& cfg) {
  require(cfg.num_nodes >= 2, "make_sbm: need at least two nodes");
  require(cfg.num_blocks >= 1 && cfg.num_blocks <= cfg.num_nodes,
          "make_sbm: block count must be in [1, N]");
  require(cfg.feature_dim >= cfg.num_blocks,
          "make_sbm: feature_dim must be at least num_blocks");
  require(cfg.p_in >= 0.0 && cfg.p_in <= 1.0 && cfg.p_out >= 0.0 && cfg.p_out <= 1.0,
          "make_sbm: probabilities must be in [0,1]");

  const int n = cfg.num_nodes;
  const int k = cfg.num_blocks;
  // Contiguous blocks; the first n % k blocks carry one extra node.
  std::vector<int> start(static_cast<std::size_t>(k) + 1, 0);
  for (int b = 0; b < k; ++b)
    start[static_cast<std::size_t>(b) + 1] =
        start[static_cast<std::size_t>(b)] + n / k + (b < n % k ? 1 : 0);

  AttributedGraph g;
  g.num_nodes = n;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int b = 0; b < k; ++b)
    for (int i = start[static_cast<std::size_t>(b)]; i < start[static_cast<std::size_t>(b) + 1];
         ++i)
      labels[static_cast<std::size_t>(i)] = b;
  g.labels = std::move(labels);

  Rng rng(derive_seed(cfg.seed, 77));
  for (int b = 0; b < k; ++b) {
    const long long lo = start[static_cast<std::size_t>(b)];
    const long long c = start[static_cast<std::size_t>(b) + 1] - lo;
    bernoulli_indices(c * (c - 1) / 2, cfg.p_in, rng, [&](long long t) {
      const auto [i, j] = unrank_triangle(t, c);
      g.edges.emplace_back(static_cast<int>(lo + i), static_cast<int>(lo + j));
    });
  }
  for (int b1 = 0; b1 < k; ++b1) {
    const long long lo1 = start[static_cast<std::size_t>(b1)];
    const long long c1 = start[static_cast<std::size_t>(b1) + 1] - lo1;
    for (int b2 = b1 + 1; b2 < k; ++b2) {
      const long long lo2 = start[static_cast<std::size_t>(b2)];
      const long long c2 = start[static_cast<std::size_t>(b2) + 1] - lo2;
      bernoulli_indices(c1 * c2, cfg.p_out, rng, [&](long long t) {
        g.edges.emplace_back(static_cast<int>(lo1 + t / c2), static_cast<int>(lo2 + t % c2));
      });
    }
  }
  std::sort(g.edges.begin(), g.edges.end());

  Rng feat_rng(derive_seed(cfg.seed, 78));
  std::normal_distribution<double> noise(0.0, cfg.feature_noise);
  g.features.setZero(n, cfg.feature_dim);
  for (int i = 0; i < n; ++i) {
    g.features(i, (*g.labels)[static_cast<std::size_t>(i)]) = cfg.feature_signal;
    for (int f = 0; f < cfg.feature_dim; ++f) g.features(i, f) += noise(feat_rng);
  }
  g.validate();
  return g;
}

}  // namespace secomm
