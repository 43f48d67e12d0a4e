#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <utility>

#include "phylohmm/msa.hpp"
#include "phylohmm/naive_prior.hpp"
#include "phylohmm/pruning.hpp"
#include "phylohmm/substitution.hpp"
#include "phylohmm/tree.hpp"

namespace phylohmm {

using LogColumns4 = Eigen::Matrix<double, Eigen::Dynamic, 4>;

// Per-site log emission values: entry (j, i) is the log probability of
// alignment column j given naive state i, averaged over the equal-weight
// discrete-gamma rate classes. The rate mixture is accumulated in sorted
// order, so the table is exactly invariant to rate-class reordering.
struct EmissionTable {
  LogColumns4 log_values;

  int length() const { return static_cast<int>(log_values.rows()); }
};

// Forward recursion state: log forward values per column and state, plus the
// total log-likelihood (the log-sum-exp of the final column).
struct ForwardMessages {
  LogColumns4 log_forward;
  double log_likelihood = 0.0;
};

EmissionTable compute_emissions(const CladeTree& tree, const GtrParams& params,
                                const RateModel& rates, const Msa& msa,
                                int threads = 1);

// Star-topology emissions: every tip hangs directly off the naive node at
// the same branch length. Used for the proposal point estimate and as the
// star-tree comparison baseline.
EmissionTable star_tree_emissions(const Msa& msa, const GtrParams& params,
                                  const RateModel& rates, double tip_length);

ForwardMessages forward(const NaivePrior& prior, const EmissionTable& em);

// Exact posterior draw of the naive sequence given the cached forward
// messages (position n first, then backwards).
std::string backward_sample_naive(const NaivePrior& prior,
                                  const EmissionTable& em,
                                  const ForwardMessages& fwd,
                                  std::mt19937_64& rng);

// Joint maximum a posteriori naive sequence and its log prior-times-emission
// score; ties resolve to the lexicographically smallest sequence.
std::pair<std::string, double> viterbi_naive(const NaivePrior& prior,
                                             const EmissionTable& em);

}  // namespace phylohmm
