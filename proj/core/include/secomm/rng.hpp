#pragma once

#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

#include "secomm/errors.hpp"

namespace secomm {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates seeds derived from a common base.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed for a named sub-stream (stream id + step counter).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t step = 0) {
  return mix_seed(mix_seed(base ^ (stream * 0xd6e8feb86659fd93ULL)) + step);
}

// k distinct values drawn uniformly from [0, n).
inline std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  require(k >= 0 && k <= n, "sample_without_replacement: need 0 <= k <= n");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  if (k * 8 >= n) {
    // Dense draw: partial Fisher-Yates, O(n).
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
  }
  // Sparse draw: rejection sampling, expected O(k) for k << n.
  std::unordered_set<int> seen;
  seen.reserve(static_cast<std::size_t>(k) * 2);
  std::uniform_int_distribution<int> pick(0, n - 1);
  while (static_cast<int>(out.size()) < k) {
    const int v = pick(rng);
    if (seen.insert(v).second) out.push_back(v);
  }
  return out;
}

}  // namespace secomm
