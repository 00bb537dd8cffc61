#include <benchmark/benchmark.h>

#include "secomm/community.hpp"
#include "secomm/encoder.hpp"
#include "secomm/self_expressive.hpp"
#include "secomm/synthetic.hpp"

namespace {

using namespace secomm;

AttributedGraph bench_graph(int n) {
  SbmConfig cfg;
  cfg.num_nodes = n;
  cfg.num_blocks = 4;
  cfg.p_in = std::min(1.0, 24.0 / n);
  cfg.p_out = std::min(1.0, 2.0 / n);
  cfg.feature_dim = 16;
  cfg.seed = 7;
  return make_sbm(cfg);
}

void BM_NormalizeAdjacency(benchmark::State& state) {
  const auto g = bench_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto adj = normalize_adjacency(g);
    benchmark::DoNotOptimize(adj.mat.valuePtr());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NormalizeAdjacency)->Range(1 << 10, 1 << 14)->Complexity();

void BM_GcnForward(benchmark::State& state) {
  const auto g = bench_graph(static_cast<int>(state.range(0)));
  const auto adj = normalize_adjacency(g);
  GcnEncoder enc = GcnEncoder::init(g.feature_dim(), 0, 32, 3);
  for (auto _ : state) {
    Matrix z = encode(adj, g.features, enc);
    benchmark::DoNotOptimize(z.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GcnForward)->Range(1 << 10, 1 << 14)->Complexity();

void BM_SolveCoefficientsExact(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(11);
  std::normal_distribution<double> gauss;
  Matrix z(m, 32);
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = 0; j < z.cols(); ++j) z(i, j) = gauss(rng);
  for (auto _ : state) {
    auto q = solve_coefficients(z, 1.0);
    benchmark::DoNotOptimize(q.q.data());
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_SolveCoefficientsExact)->Range(64, 1024)->Complexity();

void BM_BuildSimilarity(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(13);
  std::normal_distribution<double> gauss;
  Matrix z(m, 32);
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = 0; j < z.cols(); ++j) z(i, j) = gauss(rng);
  const auto q = solve_coefficients(z, 1.0);
  for (auto _ : state) {
    Matrix s = build_similarity(q, 4, 4);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_BuildSimilarity)->Range(64, 1024)->Complexity();

void BM_ContrastiveLoss(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(17);
  std::normal_distribution<double> gauss;
  Matrix z1(n, 32), z2(n, 32);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < 32; ++j) {
      z1(i, j) = gauss(rng);
      z2(i, j) = gauss(rng);
    }
  Rng neg_rng(19);
  const IndexMatrix negatives = sample_negatives(n, 64, neg_rng);
  Parameter p1(z1), p2(z2);
  for (auto _ : state) {
    Tape tape;
    Tensor loss = tape.contrastive_nce(tape.leaf(p1), tape.leaf(p2), negatives, 0.4);
    benchmark::DoNotOptimize(loss.scalar());
    tape.backward(loss);
    p1.zero_grad();
    p2.zero_grad();
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_ContrastiveLoss)->Range(1 << 9, 1 << 12)->Complexity();

}  // namespace

BENCHMARK_MAIN();
