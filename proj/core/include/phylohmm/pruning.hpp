#pragma once

#include <Eigen/Dense>
#include <vector>

#include "phylohmm/msa.hpp"
#include "phylohmm/substitution.hpp"
#include "phylohmm/tree.hpp"

namespace phylohmm {

// Felsenstein partials for one alignment column: per node, the probability of
// the observed tips below it given each state at it, kept scaled so entries
// stay in [0, 1], with the accumulated scaling tracked in log space.
struct PartialLikelihoods {
  std::vector<Eigen::Vector4d> values;
  std::vector<double> log_scale;
};

// Pruning workspace bound to one (tree, substitution model, rate, alignment)
// combination: per-edge transition matrices and the tip-to-row map are
// computed once. Immutable afterwards; concurrent pruning calls are safe.
class PruningContext {
 public:
  PruningContext(const CladeTree& tree, const RateMatrix& q, double rate,
                 const Msa& msa);

  const CladeTree& tree() const { return *tree_; }

  PartialLikelihoods prune_column(int column) const;

  // log p(D_col | naive state) for the four naive states.
  Eigen::Vector4d naive_conditional_log(int column) const;
  Eigen::Vector4d naive_conditional_log(const PartialLikelihoods& partials) const;

  // Standard column log-likelihood with the stationary distribution at the
  // naive leaf; when the alignment carries a row for the naive identifier
  // that leaf is constrained to its observed character.
  double column_log_likelihood(int column) const;

  // Rate-scaled transition matrix on the edge above `node`.
  const Eigen::Matrix4d& edge_matrix(int node) const {
    return edge_p_[static_cast<std::size_t>(node)];
  }

  bool has_naive_row() const { return naive_row_ >= 0; }

 private:
  Eigen::Vector4d leaf_vector(int row, int column) const;

  const CladeTree* tree_;
  Eigen::Vector4d pi_;
  const Msa* msa_;
  std::vector<Eigen::Matrix4d> edge_p_;  // indexed by child node
  std::vector<int> node_row_;            // msa row per node, -1 when none
  int naive_row_ = -1;
};

// One-off conveniences matching the per-operation contracts; hot paths build
// a PruningContext and reuse it.
PartialLikelihoods prune_partials(const CladeTree& tree, const Msa& msa,
                                  int column, const RateMatrix& q, double rate);

double naive_conditional_site_likelihood(const CladeTree& tree, const Msa& msa,
                                         int column, int naive_state,
                                         const RateMatrix& q, double rate);

}  // namespace phylohmm
