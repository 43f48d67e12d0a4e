#include "phylohmm/sir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "phylohmm/phylo_hmm.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

std::pair<int, int> SirConfig::resolve(int available) const {
  int pool = n_pool > 0 ? n_pool : available;
  if (pool > available) {
    throw std::invalid_argument("requested pool of " + std::to_string(pool) +
                                " but only " + std::to_string(available) +
                                " proposal samples are available");
  }
  int final_count = n_final > 0 ? n_final : std::max(1, pool / 20);
  if (final_count > pool) {
    throw std::invalid_argument("N_final must not exceed N_pool");
  }
  return {pool, final_count};
}

double compute_log_weight(const PhyloSample& sample, const Msa& msa,
                          const NaivePrior& prior, int k_rates,
                          int threads) {
  if (prior.length() != msa.width()) {
    throw std::invalid_argument("prior length does not match the alignment");
  }
  const RateModel rates = discrete_gamma_rates(sample.alpha, k_rates);
  const EmissionTable em =
      compute_emissions(sample.tree, sample.params, rates, msa, threads);
  const ForwardMessages fwd = forward(prior, em);
  return fwd.log_likelihood - sample.proposal_loglik;
}

WeightedPool build_weighted_pool(std::vector<PhyloSample> samples,
                                 const Msa& msa, const NaivePrior& prior,
                                 int k_rates, int threads) {
  WeightedPool pool;
  pool.log_weights.assign(samples.size(), kNegInf);
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    pool.log_weights[i] =
        compute_log_weight(samples[i], msa, prior, k_rates, 1);
  });
  pool.samples = std::move(samples);
  bool any_finite = false;
  for (double w : pool.log_weights) any_finite = any_finite || std::isfinite(w);
  if (!any_finite) {
    throw std::runtime_error("every pool sample has zero importance weight");
  }
  return pool;
}

std::vector<int> resample_without_replacement(std::span<const double> log_weights,
                                              int n_final,
                                              std::mt19937_64& rng) {
  if (n_final < 1) throw std::invalid_argument("N_final must be >= 1");
  int finite = 0;
  for (double w : log_weights) {
    if (std::isfinite(w)) ++finite;
  }
  if (finite < n_final) {
    throw std::runtime_error("insufficient pool: only " +
                             std::to_string(finite) +
                             " finite-weight samples for N_final = " +
                             std::to_string(n_final));
  }
  std::uniform_real_distribution<double> unit(
      std::numeric_limits<double>::min(), 1.0);
  std::vector<std::pair<double, int>> keys;
  keys.reserve(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double gumbel = -std::log(-std::log(unit(rng)));
    const double key =
        std::isfinite(log_weights[i]) ? log_weights[i] + gumbel : kNegInf;
    keys.emplace_back(key, static_cast<int>(i));
  }
  std::partial_sort(keys.begin(), keys.begin() + n_final, keys.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<int> selected(static_cast<std::size_t>(n_final));
  for (int i = 0; i < n_final; ++i) {
    selected[static_cast<std::size_t>(i)] = keys[static_cast<std::size_t>(i)].second;
  }
  return selected;
}

double effective_sample_size(std::span<const double> log_weights) {
  double m = kNegInf;
  for (double w : log_weights) m = std::max(m, w);
  if (m == kNegInf) return 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : log_weights) {
    const double v = std::exp(w - m);
    sum += v;
    sum_sq += v * v;
  }
  return sum * sum / sum_sq;
}

}  // namespace phylohmm
