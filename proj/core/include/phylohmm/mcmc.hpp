#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "phylohmm/msa.hpp"
#include "phylohmm/substitution.hpp"
#include "phylohmm/tree.hpp"

namespace phylohmm {

// One proposal draw: tree (with the naive leaf), GTR parameters, gamma shape,
// and the standard GTR+Gamma log-likelihood of the augmented alignment D*
// under the draw.
struct PhyloSample {
  CladeTree tree;
  GtrParams params;
  double alpha = 1.0;
  double proposal_loglik = 0.0;
};

struct McmcConfig {
  long iterations = 50000;
  int thin = 10;
  int burnin_samples = 500;

  // Exponential(lambda) prior on branch lengths and on alpha.
  double lambda = 10.0;
  std::array<double, 4> pi_concentration{1.0, 1.0, 1.0, 1.0};
  std::array<double, 6> e_concentration{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

  // Relative move weights.
  double weight_nni = 1.0;
  double weight_branch = 3.0;
  double weight_pi = 0.5;
  double weight_e = 0.5;
  double weight_alpha = 0.5;

  double branch_window = 1.2;        // log-multiplier window width
  double pi_proposal_scale = 300.0;  // Dirichlet concentration around current
  double e_proposal_scale = 300.0;
  double alpha_step = 0.4;           // sd of the log-normal alpha walk

  std::uint64_t seed = 1;

  void validate() const;
};

// Standard GTR+Gamma log-likelihood of the alignment on the tree, columns
// mixed over the equal-weight rate classes. When the alignment carries a row
// for the naive identifier, the naive leaf is constrained to it; otherwise
// the naive state is marginalized at stationarity.
double augmented_log_likelihood(const CladeTree& tree, const GtrParams& params,
                                const RateModel& rates, const Msa& msa,
                                int threads = 1);

// Log prior density of a state under the McmcConfig priors (the constant
// uniform-topology term is omitted). The exchangeabilities are interpreted as
// a point on the 6-simplex, which the unit-rate Q normalization makes
// equivalent to any rescaling.
double log_prior_density(const CladeTree& tree, const GtrParams& params,
                         double alpha, const McmcConfig& config);

// Uniformly distributed unrooted topology over the given tips via sequential
// random edge insertion; all branch lengths set to `branch_length`.
CladeTree random_topology(const std::vector<std::string>& tip_ids,
                          const std::string& naive_id, double branch_length,
                          std::mt19937_64& rng);

// Metropolis-Hastings sampling of q(tau, t, pi, e, alpha, r | D*) on the
// augmented alignment. Returns the thinned, post-burn-in draws.
std::vector<PhyloSample> run_mcmc(const Msa& augmented,
                                  const std::string& naive_id,
                                  const McmcConfig& config, int k_rates,
                                  int threads = 1);

// Reads a proposal pool from a Newick file (one tree per line) and the
// row-aligned tab-separated parameter file. If the trace lacks a loglik
// column the likelihood is recomputed, which requires the alignment to carry
// the naive point-estimate row.
std::vector<PhyloSample> load_trace(const std::filesystem::path& newick_file,
                                    const std::filesystem::path& params_file,
                                    const Msa& msa, const std::string& naive_id,
                                    int k_rates);

void write_trace(const std::filesystem::path& newick_file,
                 const std::filesystem::path& params_file,
                 const std::vector<PhyloSample>& samples);

}  // namespace phylohmm
