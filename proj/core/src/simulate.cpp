#include "phylohmm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

namespace {

using nlohmann::json;

std::string tip_label(int index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s%03d", index + 1);
  return buf;
}

// Split-count distribution of the beta-splitting process: a block of n tips
// splits into (i, n-i) with probability proportional to
// C(n,i) * B(i+a, n-i+a), a = beta+1, conditioned on both sides non-empty.
// This is the count marginal of splitting the block's uniform variates at a
// Beta(a, a) point, and stays well defined down to beta > -2 where the split
// density itself is improper.
int draw_split_count(int n, double a, std::mt19937_64& rng) {
  if (n == 2) return 1;
  std::vector<double> logq(static_cast<std::size_t>(n - 1));
  double m = kNegInf;
  for (int i = 1; i < n; ++i) {
    const double lq = -std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                      std::lgamma(i + a) + std::lgamma(n - i + a);
    logq[static_cast<std::size_t>(i - 1)] = lq;
    m = std::max(m, lq);
  }
  std::vector<double> w(logq.size());
  for (std::size_t i = 0; i < logq.size(); ++i) w[i] = std::exp(logq[i] - m);
  return 1 + sample_categorical(w, rng);
}

char draw_state(const Eigen::Matrix4d& p, int from, std::mt19937_64& rng) {
  std::array<double, 4> w;
  for (int i = 0; i < 4; ++i) w[static_cast<std::size_t>(i)] = p(from, i);
  return index_base(sample_categorical(w, rng));
}

}  // namespace

void SimulationConfig::validate() const {
  if (!(beta > -2.0)) {
    throw std::invalid_argument("beta-splitting parameter must be > -2");
  }
  if (n_tips < 2) throw std::invalid_argument("simulation needs >= 2 tips");
  if (!(t0 >= 0.0)) throw std::invalid_argument("root branch length must be >= 0");
  if (!(branch_scale >= 0.0)) {
    throw std::invalid_argument("branch scale M must be >= 0");
  }
  if (k_rates < 1 || !(alpha > 0.0)) {
    throw std::invalid_argument("invalid rate model parameters");
  }
  gtr.validate();
}

CladeTree beta_splitting_topology(int n_tips, double beta, std::mt19937_64& rng,
                                  const std::string& naive_id) {
  if (n_tips < 2) throw std::invalid_argument("topology needs >= 2 tips");
  if (!(beta > -2.0)) {
    throw std::invalid_argument("beta-splitting parameter must be > -2");
  }
  const double a = beta + 1.0;

  // The tips' uniform variates fix their left-to-right order; the recursion
  // then only ever splits contiguous ranges of that order.
  std::vector<double> variates(static_cast<std::size_t>(n_tips));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& v : variates) v = unit(rng);
  std::vector<int> order(static_cast<std::size_t>(n_tips));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return variates[static_cast<std::size_t>(x)] <
                                       variates[static_cast<std::size_t>(y)]; });

  std::vector<TreeNode> nodes(1);  // node 0 is the naive leaf
  nodes[0].label = naive_id;

  // Recursive construction over [begin, end) ranges of the sorted order.
  auto build = [&](auto&& self, int begin, int end) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[static_cast<std::size_t>(id)].branch_length = 1.0;
    if (end - begin == 1) {
      nodes[static_cast<std::size_t>(id)].label =
          tip_label(order[static_cast<std::size_t>(begin)]);
      return id;
    }
    const int split = draw_split_count(end - begin, a, rng);
    const int left = self(self, begin, begin + split);
    const int right = self(self, begin + split, end);
    nodes[static_cast<std::size_t>(id)].children = {left, right};
    nodes[static_cast<std::size_t>(left)].parent = id;
    nodes[static_cast<std::size_t>(right)].parent = id;
    return id;
  };
  const int attachment = build(build, 0, n_tips);
  nodes[0].children = {attachment, -1};
  nodes[static_cast<std::size_t>(attachment)].parent = 0;
  return CladeTree(std::move(nodes), 0);
}

void assign_branch_lengths(CladeTree& tree, double branch_scale, double t0,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * branch_scale);
  for (int i = 0; i < tree.node_count(); ++i) {
    if (i == tree.naive_node()) continue;
    tree.set_branch_length(i, branch_scale > 0.0 ? uniform(rng) : 0.0);
  }
  tree.set_root_branch_length(t0);
}

SimulatedFamily evolve_sequences(const CladeTree& tree,
                                 const std::string& naive,
                                 const GtrParams& params,
                                 const RateModel& rates, std::mt19937_64& rng) {
  const int n = static_cast<int>(naive.size());
  const RateMatrix q(params);
  const int k = rates.category_count;

  // Transition matrices per (node edge, rate class).
  std::vector<std::vector<Eigen::Matrix4d>> edge_p(
      static_cast<std::size_t>(tree.node_count()));
  for (int u = 0; u < tree.node_count(); ++u) {
    if (u == tree.naive_node()) continue;
    edge_p[static_cast<std::size_t>(u)].reserve(static_cast<std::size_t>(k));
    for (double r : rates.rates) {
      edge_p[static_cast<std::size_t>(u)].push_back(
          q.transition(tree.node(u).branch_length * r));
    }
  }

  std::vector<std::string> node_seq(
      static_cast<std::size_t>(tree.node_count()),
      std::string(static_cast<std::size_t>(n), 'A'));
  node_seq[static_cast<std::size_t>(tree.naive_node())] = naive;
  std::uniform_int_distribution<int> rate_pick(0, k - 1);
  for (int j = 0; j < n; ++j) {
    const int category = rate_pick(rng);
    for (int u : tree.preorder()) {
      if (u == tree.naive_node()) continue;
      const int parent = tree.node(u).parent;
      const int from = base_index(
          node_seq[static_cast<std::size_t>(parent)][static_cast<std::size_t>(j)]);
      node_seq[static_cast<std::size_t>(u)][static_cast<std::size_t>(j)] =
          draw_state(edge_p[static_cast<std::size_t>(u)]
                           [static_cast<std::size_t>(category)],
                     from, rng);
    }
  }

  SimulatedFamily family{tree, naive, Msa{}, {}, {}};
  for (int t : tree.tip_nodes()) {
    family.msa.add(tree.node(t).label, node_seq[static_cast<std::size_t>(t)]);
  }
  const std::vector<int> internals = tree.internal_nodes();
  std::vector<std::pair<std::string, std::string>> rows;
  rows.reserve(internals.size());
  for (int u : internals) {
    rows.emplace_back(tree.clade_signature(u), node_seq[static_cast<std::size_t>(u)]);
  }
  std::sort(rows.begin(), rows.end());
  for (auto& [signature, states] : rows) {
    family.internal_signatures.push_back(std::move(signature));
    family.internal_states.push_back(std::move(states));
  }
  return family;
}

void write_family(const std::filesystem::path& directory,
                  const SimulatedFamily& family,
                  const SimulationConfig& config) {
  std::filesystem::create_directories(directory);
  {
    std::ofstream out(directory / "tree.nwk");
    if (!out) throw std::runtime_error("cannot write " + (directory / "tree.nwk").string());
    out << family.tree.to_newick() << '\n';
  }
  Msa naive_fasta;
  naive_fasta.add(config.naive_id, family.naive);
  naive_fasta.to_fasta(directory / "naive.fasta");
  family.msa.to_fasta(directory / "msa.fasta");
  {
    std::ofstream out(directory / "internal_truth.tsv");
    if (!out) throw std::runtime_error("cannot write internal_truth.tsv");
    out << "signature\tstates\n";
    for (std::size_t i = 0; i < family.internal_signatures.size(); ++i) {
      out << family.internal_signatures[i] << '\t' << family.internal_states[i]
          << '\n';
    }
  }
  {
    json meta;
    meta["beta"] = config.beta;
    meta["n_tips"] = config.n_tips;
    meta["t0"] = config.t0;
    meta["branch_scale"] = config.branch_scale;
    meta["k_rates"] = config.k_rates;
    meta["alpha"] = config.alpha;
    meta["pi"] = config.gtr.base_freqs;
    meta["e"] = config.gtr.exchangeabilities;
    meta["naive_id"] = config.naive_id;
    meta["seed"] = config.seed;
    meta["imbalance"] = family.tree.imbalance();
    std::ofstream out(directory / "meta.json");
    if (!out) throw std::runtime_error("cannot write meta.json");
    out << meta.dump(2) << '\n';
  }
}

SimulatedFamily read_family(const std::filesystem::path& directory,
                            const std::string& naive_id) {
  std::string id = naive_id;
  if (std::filesystem::exists(directory / "meta.json")) {
    std::ifstream meta_in(directory / "meta.json");
    json meta;
    meta_in >> meta;
    id = meta.value("naive_id", naive_id);
  }
  std::ifstream tree_in(directory / "tree.nwk");
  if (!tree_in) {
    throw std::runtime_error("cannot open " + (directory / "tree.nwk").string());
  }
  std::string newick;
  std::getline(tree_in, newick);

  SimulatedFamily family{CladeTree::parse_newick(newick, id), "", Msa{}, {}, {}};
  const Msa naive_fasta = Msa::from_fasta(directory / "naive.fasta");
  if (naive_fasta.count() != 1) {
    throw std::runtime_error("naive.fasta must hold exactly one sequence");
  }
  family.naive = naive_fasta.rows[0];
  family.msa = Msa::from_fasta(directory / "msa.fasta");

  std::ifstream truth_in(directory / "internal_truth.tsv");
  if (!truth_in) {
    throw std::runtime_error("cannot open internal_truth.tsv");
  }
  std::string line;
  std::getline(truth_in, line);  // header
  while (std::getline(truth_in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("malformed internal_truth.tsv row");
    }
    family.internal_signatures.push_back(line.substr(0, tab));
    family.internal_states.push_back(line.substr(tab + 1));
  }
  return family;
}

std::vector<std::string> run_experiment_grid(const GridConfig& grid,
                                             const NaivePrior& prior,
                                             const std::filesystem::path& outdir) {
  if (grid.replicates < 1) {
    throw std::invalid_argument("replicate count must be >= 1");
  }
  std::filesystem::create_directories(outdir);
  std::ofstream manifest(outdir / "manifest.tsv");
  if (!manifest) {
    throw std::runtime_error("cannot write manifest in " + outdir.string());
  }
  manifest << "path\tbeta\tn_tips\tt0\treplicate\tseed\timbalance\n";

  std::vector<std::string> paths;
  std::uint64_t cell_index = 0;
  char buf[160];
  for (double beta : grid.betas) {
    for (int n_tips : grid.tip_counts) {
      for (double t0 : grid.root_lengths) {
        for (int rep = 0; rep < grid.replicates; ++rep) {
          SimulationConfig config = grid.base;
          config.beta = beta;
          config.n_tips = n_tips;
          config.t0 = t0;
          config.seed = splitmix64(grid.base.seed + cell_index);
          config.validate();
          if (prior.length() < 1) {
            throw std::invalid_argument("prior must be non-empty");
          }
          std::snprintf(buf, sizeof(buf), "b%g_n%d_t%g_rep%02d", beta, n_tips,
                        t0, rep);
          const std::string name(buf);
          try {
            std::mt19937_64 rng = make_rng_stream(config.seed, 0);
            CladeTree tree =
                beta_splitting_topology(n_tips, beta, rng, config.naive_id);
            assign_branch_lengths(tree, config.branch_scale, t0, rng);
            const std::string naive = prior.sample(rng);
            const RateModel rates =
                discrete_gamma_rates(config.alpha, config.k_rates);
            const SimulatedFamily family =
                evolve_sequences(tree, naive, config.gtr, rates, rng);
            write_family(outdir / name, family, config);
            std::snprintf(buf, sizeof(buf), "%s\t%g\t%d\t%g\t%d\t%llu\t%.6g",
                          name.c_str(), beta, n_tips, t0, rep,
                          static_cast<unsigned long long>(config.seed),
                          family.tree.imbalance());
            manifest << buf << '\n';
            paths.push_back(name);
          } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + name + " failed: " +
                                     e.what());
          }
          ++cell_index;
        }
      }
    }
  }
  return paths;
}

}  // namespace phylohmm
