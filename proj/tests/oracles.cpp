#include "oracles.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/util.hpp"

namespace oracle {

using phylohmm::CladeTree;
using phylohmm::EmissionTable;
using phylohmm::Msa;
using phylohmm::NaivePrior;
using phylohmm::RateMatrix;

double jc_same(double t) { return 0.25 + 0.75 * std::exp(-4.0 * t / 3.0); }
double jc_diff(double t) { return 0.25 - 0.25 * std::exp(-4.0 * t / 3.0); }
double jc_mismatch(double t) { return 0.75 * (1.0 - std::exp(-4.0 * t / 3.0)); }

std::vector<double> exp1_class_means(int k) {
  // E[X; X in (a,b)] for Exp(1) is (a+1)e^-a - (b+1)e^-b.
  std::vector<double> out;
  for (int i = 0; i < k; ++i) {
    const double a = -std::log(1.0 - static_cast<double>(i) / k);
    const double upper_mass =
        i + 1 == k ? 0.0
                   : (1.0 - static_cast<double>(i + 1) / k) *
                         (1.0 - std::log(1.0 - static_cast<double>(i + 1) / k));
    const double lower_mass = (a + 1.0) * std::exp(-a);
    out.push_back(k * (lower_mass - upper_mass));
  }
  return out;
}

namespace {

// Shared enumeration helper: edges directed away from `root`, observed tip
// constraints, free states at the remaining nodes.
struct EnumSetup {
  std::vector<std::pair<int, int>> edges;  // (from, to) away from root
  std::vector<double> lengths;             // per edge
  std::vector<int> fixed;                  // per node: state or -1 if free
  std::vector<int> free_nodes;
};

EnumSetup build_setup(const CladeTree& tree, const Msa& msa, int column,
                      int root) {
  const int n = tree.node_count();
  std::vector<std::vector<int>> adjacent(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    if (v == tree.naive_node()) continue;
    adjacent[static_cast<std::size_t>(v)].push_back(tree.node(v).parent);
    adjacent[static_cast<std::size_t>(tree.node(v).parent)].push_back(v);
  }
  EnumSetup setup;
  setup.fixed.assign(static_cast<std::size_t>(n), -1);
  for (int t : tree.tip_nodes()) {
    const int row = msa.row_of(tree.node(t).label);
    if (row < 0) throw std::runtime_error("oracle: tip missing from alignment");
    const int b = phylohmm::base_index(
        msa.rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(column)]);
    setup.fixed[static_cast<std::size_t>(t)] = b;  // -1 for N or gap: free
  }
  const int naive_row = msa.row_of(tree.naive_id());
  if (naive_row >= 0) {
    setup.fixed[static_cast<std::size_t>(tree.naive_node())] =
        phylohmm::base_index(msa.rows[static_cast<std::size_t>(naive_row)]
                                     [static_cast<std::size_t>(column)]);
  }

  std::vector<int> stack{root};
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  seen[static_cast<std::size_t>(root)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adjacent[static_cast<std::size_t>(u)]) {
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      // The branch length lives on the child side of the original rooting.
      const double len = tree.node(v).parent == u ? tree.node(v).branch_length
                                                  : tree.node(u).branch_length;
      setup.edges.emplace_back(u, v);
      setup.lengths.push_back(len);
      stack.push_back(v);
    }
  }
  for (int u = 0; u < n; ++u) {
    if (setup.fixed[static_cast<std::size_t>(u)] < 0) setup.free_nodes.push_back(u);
  }
  return setup;
}

double enumerate_likelihood(const EnumSetup& setup, const RateMatrix& q,
                            double rate, int pi_node, int node_count) {
  std::vector<Eigen::Matrix4d> p;
  p.reserve(setup.edges.size());
  for (double len : setup.lengths) p.push_back(q.transition(len * rate));

  const std::size_t n_free = setup.free_nodes.size();
  const long combos = static_cast<long>(std::pow(4.0, static_cast<double>(n_free)));
  std::vector<int> state(static_cast<std::size_t>(node_count), 0);
  double total = 0.0;
  for (long c = 0; c < combos; ++c) {
    long rem = c;
    for (int u = 0; u < node_count; ++u) {
      state[static_cast<std::size_t>(u)] = setup.fixed[static_cast<std::size_t>(u)];
    }
    for (std::size_t f = 0; f < n_free; ++f) {
      state[static_cast<std::size_t>(setup.free_nodes[f])] = rem % 4;
      rem /= 4;
    }
    double prob = pi_node >= 0
                      ? q.stationary()(state[static_cast<std::size_t>(pi_node)])
                      : 1.0;
    for (std::size_t e = 0; e < setup.edges.size(); ++e) {
      prob *= p[e](state[static_cast<std::size_t>(setup.edges[e].first)],
                   state[static_cast<std::size_t>(setup.edges[e].second)]);
    }
    total += prob;
  }
  return total;
}

}  // namespace

double column_likelihood_given_naive(const CladeTree& tree, const Msa& msa,
                                     int column, int naive_state,
                                     const RateMatrix& q, double rate) {
  EnumSetup setup = build_setup(tree, msa, column, tree.naive_node());
  setup.fixed[static_cast<std::size_t>(tree.naive_node())] = naive_state;
  setup.free_nodes.clear();
  for (int u = 0; u < tree.node_count(); ++u) {
    if (setup.fixed[static_cast<std::size_t>(u)] < 0) setup.free_nodes.push_back(u);
  }
  return enumerate_likelihood(setup, q, rate, -1, tree.node_count());
}

double standard_column_likelihood(const CladeTree& tree, const Msa& msa,
                                  int column, const RateMatrix& q, double rate,
                                  int virtual_root) {
  const EnumSetup setup = build_setup(tree, msa, column, virtual_root);
  return enumerate_likelihood(setup, q, rate, virtual_root, tree.node_count());
}

double forward_loglik_enumerated(const NaivePrior& prior,
                                 const EmissionTable& em) {
  const int n = em.length();
  const long combos = static_cast<long>(std::pow(4.0, n));
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(combos));
  std::string seq(static_cast<std::size_t>(n), 'A');
  for (long c = 0; c < combos; ++c) {
    long rem = c;
    double lp = 0.0;
    for (int j = 0; j < n; ++j) {
      const int b = static_cast<int>(rem % 4);
      rem /= 4;
      seq[static_cast<std::size_t>(j)] = phylohmm::index_base(b);
      lp += em.log_values(j, b);
    }
    lp += prior.log_prob(seq);
    terms.push_back(lp);
  }
  return phylohmm::log_sum_exp(terms);
}

std::map<std::string, double> naive_posterior_enumerated(
    const NaivePrior& prior, const EmissionTable& em) {
  const int n = em.length();
  const long combos = static_cast<long>(std::pow(4.0, n));
  std::map<std::string, double> log_joint;
  std::string seq(static_cast<std::size_t>(n), 'A');
  double max_lp = phylohmm::kNegInf;
  for (long c = 0; c < combos; ++c) {
    long rem = c;
    double lp = 0.0;
    for (int j = 0; j < n; ++j) {
      const int b = static_cast<int>(rem % 4);
      rem /= 4;
      seq[static_cast<std::size_t>(j)] = phylohmm::index_base(b);
      lp += em.log_values(j, b);
    }
    lp += prior.log_prob(seq);
    log_joint[seq] = lp;
    max_lp = std::max(max_lp, lp);
  }
  double total = 0.0;
  for (auto& [s, lp] : log_joint) total += std::exp(lp - max_lp);
  std::map<std::string, double> posterior;
  for (auto& [s, lp] : log_joint) {
    posterior[s] = std::exp(lp - max_lp) / total;
  }
  return posterior;
}

std::pair<std::string, double> viterbi_enumerated(const NaivePrior& prior,
                                                  const EmissionTable& em) {
  const int n = em.length();
  const long combos = static_cast<long>(std::pow(4.0, n));
  std::string best;
  double best_lp = phylohmm::kNegInf;
  std::string seq(static_cast<std::size_t>(n), 'A');
  for (long c = 0; c < combos; ++c) {
    long rem = c;
    double lp = 0.0;
    // Little-endian digit order would not be lexicographic; build the
    // sequence explicitly and compare as strings on ties.
    for (int j = 0; j < n; ++j) {
      const int b = static_cast<int>(rem % 4);
      rem /= 4;
      seq[static_cast<std::size_t>(j)] = phylohmm::index_base(b);
      lp += em.log_values(j, b);
    }
    lp += prior.log_prob(seq);
    if (lp > best_lp || (lp == best_lp && seq < best)) {
      best_lp = lp;
      best = seq;
    }
  }
  return {best, best_lp};
}

int colless_index(const CladeTree& tree) {
  std::vector<int> tip_count(static_cast<std::size_t>(tree.node_count()), 0);
  int total = 0;
  for (int u : tree.postorder()) {
    const auto& node = tree.node(u);
    if (node.is_tip() && u != tree.naive_node()) {
      tip_count[static_cast<std::size_t>(u)] = 1;
      continue;
    }
    if (u == tree.naive_node()) continue;
    const int left = tip_count[static_cast<std::size_t>(node.children[0])];
    const int right = tip_count[static_cast<std::size_t>(node.children[1])];
    tip_count[static_cast<std::size_t>(u)] = left + right;
    total += std::abs(left - right);
  }
  return total;
}

std::vector<double> without_replacement_inclusion(
    const std::vector<double>& weights, int n_final) {
  const int n = static_cast<int>(weights.size());
  std::vector<double> inclusion(static_cast<std::size_t>(n), 0.0);
  std::vector<int> draw;
  // Recursive enumeration over ordered draws.
  auto recurse = [&](auto&& self, double prob, double remaining_mass) -> void {
    if (static_cast<int>(draw.size()) == n_final) {
      for (int idx : draw) inclusion[static_cast<std::size_t>(idx)] += prob;
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (std::find(draw.begin(), draw.end(), i) != draw.end()) continue;
      draw.push_back(i);
      self(self, prob * weights[static_cast<std::size_t>(i)] / remaining_mass,
           remaining_mass - weights[static_cast<std::size_t>(i)]);
      draw.pop_back();
    }
  };
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  recurse(recurse, 1.0, total);
  return inclusion;
}

double chi_squared_critical(int dof, double significance) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, 1.0 - significance);
}

std::pair<double, int> merged_chi_squared(
    const std::vector<double>& expected_probs, const std::vector<long>& counts,
    long total, double min_expected) {
  std::vector<std::size_t> order(expected_probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return expected_probs[a] > expected_probs[b];
  });
  double merged_expected = 0.0;
  long merged_count = 0;
  double stat = 0.0;
  int cells = 0;
  for (std::size_t k : order) {
    const double expected = expected_probs[k] * static_cast<double>(total);
    if (expected >= min_expected) {
      const double diff = static_cast<double>(counts[k]) - expected;
      stat += diff * diff / expected;
      ++cells;
    } else {
      merged_expected += expected;
      merged_count += counts[k];
    }
  }
  if (merged_expected > 0.0) {
    const double diff = static_cast<double>(merged_count) - merged_expected;
    stat += diff * diff / merged_expected;
    ++cells;
  }
  return {stat, std::max(1, cells - 1)};
}

}  // namespace oracle
