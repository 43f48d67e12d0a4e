#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace phylohmm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)), guarded against all-(-inf) inputs.
inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Permutation-invariant variant: addends are accumulated in sorted order so
// the result does not depend on the order of the inputs (used where a mixture
// must be exactly invariant to component reordering).
inline double log_sum_exp_sorted(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double m = xs.empty() ? kNegInf : xs.back();
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// SplitMix64; used to derive independent engine seeds from (master, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng_stream(std::uint64_t master_seed,
                                       std::uint64_t stream_index) {
  return std::mt19937_64(splitmix64(master_seed + splitmix64(stream_index)));
}

// Draw an index with probability proportional to weights[i] (linear space).
// Deterministic given the engine stream; throws if the total mass is zero.
inline int sample_categorical(std::span<const double> weights,
                              std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) {
    throw std::runtime_error("categorical draw over zero total mass");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// Run fn(i) for i in [0, count); writes must go to disjoint slots so results
// are identical regardless of the thread count.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += n_workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace phylohmm
