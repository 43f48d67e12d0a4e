#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phylohmm/alphabet.hpp"
#include "phylohmm/mcmc.hpp"
#include "phylohmm/pruning.hpp"
#include "phylohmm/util.hpp"

using namespace phylohmm;

namespace {

GtrParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> e_dist(0.3, 2.5);
  std::uniform_real_distribution<double> f_dist(0.1, 1.0);
  GtrParams params;
  for (double& e : params.exchangeabilities) e = e_dist(rng);
  double total = 0.0;
  for (double& f : params.base_freqs) {
    f = f_dist(rng);
    total += f;
  }
  for (double& f : params.base_freqs) f /= total;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += params.base_freqs[static_cast<std::size_t>(i)];
  params.base_freqs[3] = 1.0 - sum;
  return params;
}

Msa random_msa(const CladeTree& tree, int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  Msa msa;
  for (int t : tree.tip_nodes()) {
    std::string row(static_cast<std::size_t>(n), 'A');
    for (char& c : row) c = index_base(pick(rng));
    msa.add(tree.node(t).label, row);
  }
  return msa;
}

}  // namespace

TEST_SUITE("pruning") {

TEST_CASE("zero-length cherry forces the observed state") {
  const CladeTree tree = CladeTree::parse_newick("(A:0,B:0,naive:0.1);", "naive");
  Msa msa;
  msa.add("A", "A");
  msa.add("B", "A");
  const RateMatrix q(GtrParams{});
  const PartialLikelihoods partials = prune_partials(tree, msa, 0, q, 1.0);
  const Eigen::Vector4d& f =
      partials.values[static_cast<std::size_t>(tree.attachment_node())];
  CHECK(f(0) == 1.0);
  CHECK(f(1) == 0.0);
  CHECK(f(2) == 0.0);
  CHECK(f(3) == 0.0);
}

TEST_CASE("three-tip conditional likelihood matches explicit enumeration") {
  std::mt19937_64 rng(23);
  const CladeTree tree = CladeTree::parse_newick(
      "((A:0.13,B:0.21):0.07,C:0.29,naive:0.05);", "naive");
  Msa msa;
  msa.add("A", "ACGN");
  msa.add("B", "ACTA");
  msa.add("C", "AGT-");
  for (int rep = 0; rep < 5; ++rep) {
    const RateMatrix q(random_params(rng));
    for (double rate : {0.31, 1.0, 2.6}) {
      for (int column = 0; column < 4; ++column) {
        for (int state = 0; state < 4; ++state) {
          const double expected = oracle::column_likelihood_given_naive(
              tree, msa, column, state, q, rate);
          const double actual = naive_conditional_site_likelihood(
              tree, msa, column, state, q, rate);
          CHECK(actual == doctest::Approx(expected).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("all-ambiguous columns carry no information") {
  const CladeTree tree = CladeTree::parse_newick(
      "((A:0.13,B:0.21):0.07,C:0.29,naive:0.05);", "naive");
  Msa msa;
  msa.add("A", "N");
  msa.add("B", "N");
  msa.add("C", "-");
  const RateMatrix q(GtrParams{});
  const PruningContext ctx(tree, q, 1.0, msa);
  const Eigen::Vector4d lg = ctx.naive_conditional_log(0);
  for (int i = 0; i < 4; ++i) CHECK(lg(i) == doctest::Approx(0.0));
}

TEST_CASE("single tip reduces to one transition probability") {
  const CladeTree tree = CladeTree::parse_newick("(A:0.1,naive:0.05);", "naive");
  Msa msa;
  msa.add("A", "A");
  std::mt19937_64 rng(3);
  const RateMatrix q(random_params(rng));
  const Eigen::Matrix4d p = q.transition(0.15);
  const PruningContext ctx(tree, q, 1.0, msa);
  const Eigen::Vector4d lg = ctx.naive_conditional_log(0);
  for (int state = 0; state < 4; ++state) {
    CHECK(std::exp(lg(state)) == doctest::Approx(p(state, 0)).epsilon(1e-14));
  }
}

TEST_CASE("law of total probability over the naive state") {
  std::mt19937_64 rng(29);
  const CladeTree tree = CladeTree::parse_newick(
      "((A:0.13,B:0.21):0.07,C:0.29,naive:0.05);", "naive");
  Msa msa;
  msa.add("A", "AC");
  msa.add("B", "CC");
  msa.add("C", "GT");
  const RateMatrix q(random_params(rng));
  const PruningContext ctx(tree, q, 1.0, msa);
  for (int column = 0; column < 2; ++column) {
    const Eigen::Vector4d lg = ctx.naive_conditional_log(column);
    double mixed = 0.0;
    for (int i = 0; i < 4; ++i) {
      mixed += q.stationary()(i) * std::exp(lg(i));
    }
    CHECK(std::log(mixed) ==
          doctest::Approx(ctx.column_log_likelihood(column)).epsilon(1e-12));
  }
}

TEST_CASE("pulley: the virtual root can sit at any node") {
  std::mt19937_64 rng(31);
  std::vector<std::string> tips{"A", "B", "C", "D", "E", "F"};
  for (int rep = 0; rep < 3; ++rep) {
    CladeTree tree = random_topology(tips, "naive", 0.1, rng);
    std::uniform_real_distribution<double> len(0.01, 0.6);
    for (int i = 0; i < tree.node_count(); ++i) {
      if (i != tree.naive_node()) tree.set_branch_length(i, len(rng));
    }
    const Msa msa = random_msa(tree, 2, rng);
    const RateMatrix q(random_params(rng));
    const PruningContext ctx(tree, q, 1.0, msa);
    for (int column = 0; column < 2; ++column) {
      const double reference =
          oracle::standard_column_likelihood(tree, msa, column, q, 1.0, 0);
      for (int root = 0; root < tree.node_count(); ++root) {
        const double alt =
            oracle::standard_column_likelihood(tree, msa, column, q, 1.0, root);
        CHECK(alt == doctest::Approx(reference).epsilon(1e-10));
      }
      CHECK(ctx.column_log_likelihood(column) ==
            doctest::Approx(std::log(reference)).epsilon(1e-10));
    }
  }
}

TEST_CASE("log-space scaling survives 200 tips") {
  std::mt19937_64 rng(37);
  std::vector<std::string> tips;
  for (int i = 0; i < 200; ++i) tips.push_back("t" + std::to_string(i));
  CladeTree tree = random_topology(tips, "naive", 0.1, rng);
  std::uniform_real_distribution<double> len(0.0, 1.0);
  for (int i = 0; i < tree.node_count(); ++i) {
    if (i != tree.naive_node()) tree.set_branch_length(i, len(rng));
  }
  const Msa msa = random_msa(tree, 1, rng);
  const RateMatrix q(GtrParams{});
  const PruningContext ctx(tree, q, 1.0, msa);
  const double ll = ctx.column_log_likelihood(0);
  CHECK(std::isfinite(ll));
  const Eigen::Vector4d lg = ctx.naive_conditional_log(0);
  for (int i = 0; i < 4; ++i) CHECK(std::isfinite(lg(i)));
}

TEST_CASE("partials stay in [0,1] with indicator leaves") {
  const CladeTree tree = CladeTree::parse_newick(
      "((A:0.13,B:0.21):0.07,C:0.29,naive:0.05);", "naive");
  Msa msa;
  msa.add("A", "A");
  msa.add("B", "C");
  msa.add("C", "N");
  const RateMatrix q(GtrParams{});
  const PartialLikelihoods partials = prune_partials(tree, msa, 0, q, 1.0);
  for (int u = 0; u < tree.node_count(); ++u) {
    int ones = 0;
    for (int i = 0; i < 4; ++i) {
      CHECK(partials.values[static_cast<std::size_t>(u)](i) >= 0.0);
      CHECK(partials.values[static_cast<std::size_t>(u)](i) <= 1.0);
      ones += partials.values[static_cast<std::size_t>(u)](i) == 1.0;
    }
    if (tree.node(u).is_tip() && u != tree.naive_node()) {
      const bool missing =
          is_missing(msa.rows[static_cast<std::size_t>(msa.row_of(
              tree.node(u).label))][0]);
      CHECK(ones == (missing ? 4 : 1));
    }
  }
}

TEST_CASE("unmapped tip labels are a data mismatch") {
  const CladeTree tree = CladeTree::parse_newick("(A:0.1,B:0.1,naive:0.1);",
                                                 "naive");
  Msa msa;
  msa.add("A", "A");
  msa.add("X", "C");
  const RateMatrix q(GtrParams{});
  CHECK_THROWS_WITH_AS(PruningContext(tree, q, 1.0, msa),
                       doctest::Contains("no matching alignment row"),
                       std::runtime_error);
}

TEST_CASE("rates must be positive") {
  const CladeTree tree = CladeTree::parse_newick("(A:0.1,B:0.1,naive:0.1);",
                                                 "naive");
  Msa msa;
  msa.add("A", "A");
  msa.add("B", "C");
  const RateMatrix q(GtrParams{});
  CHECK_THROWS_AS(PruningContext(tree, q, 0.0, msa), std::invalid_argument);
}

}  // TEST_SUITE
