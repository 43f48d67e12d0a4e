#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "phylohmm/mcmc.hpp"
#include "phylohmm/msa.hpp"
#include "phylohmm/naive_prior.hpp"
#include "phylohmm/phylo_hmm.hpp"
#include "phylohmm/sir.hpp"

namespace phylohmm {

// One full posterior draw. Internal-state rows correspond 1:1 to the
// non-naive internal nodes of the tree and are keyed by clade signature,
// sorted by signature so rows line up across draws where clades recur.
struct PosteriorDraw {
  PhyloSample sample;
  double log_weight = 0.0;
  std::string naive;
  std::vector<int> site_rates;                   // category index per column
  std::vector<std::string> internal_signatures;  // m-1 entries
  std::vector<std::string> internal_states;      // m-1 strings of length n
};

// Per-sample evaluation cache: the Felsenstein partials are computed once per
// (rate, column) and shared between the emission table, the rate-category
// sampling, and the ancestral-state sampling.
class SampleWorkspace {
 public:
  SampleWorkspace(const PhyloSample& sample, const Msa& msa, int k_rates);

  const EmissionTable& emissions() const { return emissions_; }
  const CladeTree& tree() const { return sample_->tree; }
  int rate_count() const { return static_cast<int>(contexts_.size()); }

  // log p(D_col | naive state, rate category k).
  double site_log_likelihood(int column, int naive_state, int category) const;

  int sample_site_rate(int column, int naive_state, std::mt19937_64& rng) const;

  // States for the non-naive internal nodes in tree().internal_nodes() order,
  // drawn pre-order from the naive leaf on the rate-scaled tree.
  std::vector<int> sample_ancestral_states(int column, int naive_state,
                                           int category,
                                           std::mt19937_64& rng) const;

 private:
  const PhyloSample* sample_;
  std::vector<PruningContext> contexts_;
  std::vector<std::vector<PartialLikelihoods>> partials_;  // [rate][column]
  std::vector<LogColumns4> naive_logs_;                    // [rate](column, state)
  EmissionTable emissions_;
};

// One-off per-operation entry points; batch callers use SampleWorkspace.
int sample_site_rate(const CladeTree& tree, const Msa& msa, int column,
                     int naive_state, const GtrParams& params,
                     const RateModel& rates, std::mt19937_64& rng);

std::vector<int> sample_ancestral_states(const CladeTree& tree, const Msa& msa,
                                         int column, int naive_state,
                                         double rate, const GtrParams& params,
                                         std::mt19937_64& rng);

// Full Algorithm-style posterior sampling: SIR over the proposal pool, then
// per retained sample a naive-sequence draw and per-site rate and
// internal-state draws. Deterministic given the seed; draws are produced in
// descending resampling-key order.
std::vector<PosteriorDraw> sample_posterior(const Msa& msa,
                                            const NaivePrior& prior,
                                            std::vector<PhyloSample> pool,
                                            const SirConfig& config,
                                            int k_rates, int threads = 1);

// Line-oriented archive: one JSON record per draw.
void write_draw_archive(const std::filesystem::path& path,
                        const std::vector<PosteriorDraw>& draws);
std::vector<PosteriorDraw> read_draw_archive(const std::filesystem::path& path,
                                             const std::string& naive_id);

}  // namespace phylohmm
