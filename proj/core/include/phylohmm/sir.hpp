#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "phylohmm/mcmc.hpp"
#include "phylohmm/msa.hpp"
#include "phylohmm/naive_prior.hpp"

namespace phylohmm {

// Proposal pool with unnormalized importance log-weights.
struct WeightedPool {
  std::vector<PhyloSample> samples;
  std::vector<double> log_weights;
};

struct SirConfig {
  int n_pool = 0;    // 0 means "whole pool"
  int n_final = 0;   // 0 means n_pool / 20
  std::uint64_t seed = 1;

  // Resolves the defaults against an actual pool size.
  std::pair<int, int> resolve(int available) const;
};

// log w = [phylo-HMM forward log-likelihood of the alignment under the
// sample and the naive prior] - [the sample's proposal log-likelihood].
// The constant marginal-ratio factor is dropped. The alignment must be the
// observed data only, without the naive point-estimate row.
double compute_log_weight(const PhyloSample& sample, const Msa& msa,
                          const NaivePrior& prior, int k_rates,
                          int threads = 1);

WeightedPool build_weighted_pool(std::vector<PhyloSample> samples,
                                 const Msa& msa, const NaivePrior& prior,
                                 int k_rates, int threads = 1);

// Weighted sampling without replacement by exponential keys: each item gets
// log_weight + Gumbel noise and the top n_final keys win. Returns indices in
// descending key order. Throws if fewer than n_final weights are finite.
std::vector<int> resample_without_replacement(std::span<const double> log_weights,
                                              int n_final, std::mt19937_64& rng);

// 1 / sum of squared normalized weights.
double effective_sample_size(std::span<const double> log_weights);

}  // namespace phylohmm
