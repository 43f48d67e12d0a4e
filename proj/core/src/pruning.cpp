#include "phylohmm/pruning.hpp"

#include <cmath>
#include <stdexcept>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

PruningContext::PruningContext(const CladeTree& tree, const RateMatrix& q,
                               double rate, const Msa& msa)
    : tree_(&tree), pi_(q.stationary()), msa_(&msa) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("site rate must be positive");
  }
  const int n = tree.node_count();
  edge_p_.resize(static_cast<std::size_t>(n));
  node_row_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (i == tree.naive_node()) continue;
    edge_p_[static_cast<std::size_t>(i)] =
        q.transition(tree.node(i).branch_length * rate);
  }
  for (int t : tree.tip_nodes()) {
    const std::string& label = tree.node(t).label;
    const int row = msa.row_of(label);
    if (row < 0) {
      throw std::runtime_error("tree tip '" + label +
                               "' has no matching alignment row");
    }
    node_row_[static_cast<std::size_t>(t)] = row;
  }
  naive_row_ = msa.row_of(tree.naive_id());
}

Eigen::Vector4d PruningContext::leaf_vector(int row, int column) const {
  const char c = msa_->rows[static_cast<std::size_t>(row)]
                           [static_cast<std::size_t>(column)];
  const int idx = base_index(c);
  if (idx < 0) return Eigen::Vector4d::Ones();
  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  v(idx) = 1.0;
  return v;
}

PartialLikelihoods PruningContext::prune_column(int column) const {
  if (column < 0 || column >= msa_->width()) {
    throw std::out_of_range("alignment column out of range");
  }
  const int n = tree_->node_count();
  PartialLikelihoods out;
  out.values.assign(static_cast<std::size_t>(n), Eigen::Vector4d::Ones());
  out.log_scale.assign(static_cast<std::size_t>(n), 0.0);
  for (int u : tree_->postorder()) {
    const TreeNode& node = tree_->node(u);
    if (node.is_tip() && u != tree_->naive_node()) {
      out.values[static_cast<std::size_t>(u)] =
          leaf_vector(node_row_[static_cast<std::size_t>(u)], column);
      continue;
    }
    Eigen::Vector4d f = Eigen::Vector4d::Ones();
    double ls = 0.0;
    for (int c : node.children) {
      if (c < 0) continue;
      f = f.cwiseProduct(edge_p_[static_cast<std::size_t>(c)] *
                         out.values[static_cast<std::size_t>(c)]);
      ls += out.log_scale[static_cast<std::size_t>(c)];
    }
    const double m = f.maxCoeff();
    if (m > 0.0 && m < 1.0) {
      f /= m;
      ls += std::log(m);
    }
    out.values[static_cast<std::size_t>(u)] = f;
    out.log_scale[static_cast<std::size_t>(u)] = ls;
  }
  return out;
}

Eigen::Vector4d PruningContext::naive_conditional_log(
    const PartialLikelihoods& partials) const {
  const int naive = tree_->naive_node();
  const Eigen::Vector4d& f = partials.values[static_cast<std::size_t>(naive)];
  const double ls = partials.log_scale[static_cast<std::size_t>(naive)];
  Eigen::Vector4d out;
  for (int i = 0; i < 4; ++i) {
    out(i) = f(i) > 0.0 ? std::log(f(i)) + ls : kNegInf;
  }
  return out;
}

Eigen::Vector4d PruningContext::naive_conditional_log(int column) const {
  return naive_conditional_log(prune_column(column));
}

double PruningContext::column_log_likelihood(int column) const {
  const PartialLikelihoods partials = prune_column(column);
  const int naive = tree_->naive_node();
  Eigen::Vector4d f = partials.values[static_cast<std::size_t>(naive)];
  if (naive_row_ >= 0) {
    f = f.cwiseProduct(leaf_vector(naive_row_, column));
  }
  const double total = pi_.dot(f);
  if (!(total > 0.0)) return kNegInf;
  return std::log(total) + partials.log_scale[static_cast<std::size_t>(naive)];
}

PartialLikelihoods prune_partials(const CladeTree& tree, const Msa& msa,
                                  int column, const RateMatrix& q,
                                  double rate) {
  return PruningContext(tree, q, rate, msa).prune_column(column);
}

double naive_conditional_site_likelihood(const CladeTree& tree, const Msa& msa,
                                         int column, int naive_state,
                                         const RateMatrix& q, double rate) {
  if (naive_state < 0 || naive_state >= kNumBases) {
    throw std::invalid_argument("naive state index out of range");
  }
  const Eigen::Vector4d lg =
      PruningContext(tree, q, rate, msa).naive_conditional_log(column);
  return std::exp(lg(naive_state));
}

}  // namespace phylohmm
