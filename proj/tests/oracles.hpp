#pragma once

// Independent reference computations for the test suites: closed forms and
// exhaustive enumerations that avoid the implementation paths they check.

#include <map>
#include <string>
#include <vector>

#include "phylohmm/msa.hpp"
#include "phylohmm/naive_prior.hpp"
#include "phylohmm/phylo_hmm.hpp"
#include "phylohmm/substitution.hpp"
#include "phylohmm/tree.hpp"

namespace oracle {

// Jukes-Cantor closed forms at unit substitution rate.
double jc_same(double t);      // P(state -> same state)
double jc_diff(double t);      // P(state -> one specific other state)
double jc_mismatch(double t);  // P(state changes at all)

// Conditional means of the K equal-probability classes of Exp(1), the
// alpha = 1 discrete-gamma special case.
std::vector<double> exp1_class_means(int k);

// Column likelihood given the naive state, by summing over all internal-node
// state assignments with explicit transition-matrix products.
double column_likelihood_given_naive(const phylohmm::CladeTree& tree,
                                     const phylohmm::Msa& msa, int column,
                                     int naive_state,
                                     const phylohmm::RateMatrix& q,
                                     double rate);

// Standard column likelihood with the stationary distribution applied at an
// arbitrary virtual-root node, enumerating all unobserved states. The naive
// leaf is constrained to its alignment row when one exists.
double standard_column_likelihood(const phylohmm::CladeTree& tree,
                                  const phylohmm::Msa& msa, int column,
                                  const phylohmm::RateMatrix& q, double rate,
                                  int virtual_root);

// Phylo-HMM log-likelihood by enumerating all 4^n naive sequences.
double forward_loglik_enumerated(const phylohmm::NaivePrior& prior,
                                 const phylohmm::EmissionTable& em);

// Exact posterior over naive sequences (normalized), 4^n enumeration.
std::map<std::string, double> naive_posterior_enumerated(
    const phylohmm::NaivePrior& prior, const phylohmm::EmissionTable& em);

// Argmax of prior times emissions over all sequences, lexicographically
// smallest on ties, with its joint log score.
std::pair<std::string, double> viterbi_enumerated(
    const phylohmm::NaivePrior& prior, const phylohmm::EmissionTable& em);

// Colless imbalance of the splitting tree rooted at the naive attachment.
int colless_index(const phylohmm::CladeTree& tree);

// Inclusion probabilities of sequential weighted sampling without
// replacement (draw size n_final), by exact enumeration over draw orders.
std::vector<double> without_replacement_inclusion(
    const std::vector<double>& weights, int n_final);

// Upper critical value of the chi-squared distribution.
double chi_squared_critical(int dof, double significance);

// Chi-squared statistic against expected probabilities with small expected
// cells merged (Cochran-style); returns the statistic and remaining dof.
std::pair<double, int> merged_chi_squared(const std::vector<double>& expected_probs,
                                          const std::vector<long>& counts,
                                          long total, double min_expected = 5.0);

}  // namespace oracle
