#include "phylohmm/ancestral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

namespace {

using nlohmann::json;

Eigen::Vector4d mix_rate_row(const std::vector<LogColumns4>& naive_logs,
                             int column) {
  const double log_k = std::log(static_cast<double>(naive_logs.size()));
  Eigen::Vector4d out;
  std::vector<double> terms(naive_logs.size());
  for (int i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < naive_logs.size(); ++k) {
      terms[k] = naive_logs[k](column, i);
    }
    out(i) = log_sum_exp_sorted(terms) - log_k;
  }
  return out;
}

// Pre-order draw from the naive leaf: at each internal node, the state is
// proportional to the transition row from the sampled parent state times the
// node's partial likelihoods. Returns states in internal_nodes() order.
std::vector<int> preorder_state_draw(const CladeTree& tree,
                                     const PruningContext& ctx,
                                     const PartialLikelihoods& partials,
                                     int naive_state, std::mt19937_64& rng) {
  std::vector<int> node_state(static_cast<std::size_t>(tree.node_count()), -1);
  node_state[static_cast<std::size_t>(tree.naive_node())] = naive_state;
  std::array<double, 4> w;
  for (int u : tree.preorder()) {
    const TreeNode& node = tree.node(u);
    if (u == tree.naive_node() || node.is_tip()) continue;
    const int parent_state = node_state[static_cast<std::size_t>(node.parent)];
    const Eigen::Matrix4d& p = ctx.edge_matrix(u);
    const Eigen::Vector4d& f = partials.values[static_cast<std::size_t>(u)];
    for (int i = 0; i < 4; ++i) {
      w[static_cast<std::size_t>(i)] = p(parent_state, i) * f(i);
    }
    node_state[static_cast<std::size_t>(u)] = sample_categorical(w, rng);
  }
  std::vector<int> out;
  for (int u : tree.internal_nodes()) {
    out.push_back(node_state[static_cast<std::size_t>(u)]);
  }
  return out;
}

}  // namespace

SampleWorkspace::SampleWorkspace(const PhyloSample& sample, const Msa& msa,
                                 int k_rates)
    : sample_(&sample) {
  const RateModel rates = discrete_gamma_rates(sample.alpha, k_rates);
  const RateMatrix q(sample.params);
  const int n = msa.width();
  contexts_.reserve(rates.rates.size());
  for (double r : rates.rates) {
    contexts_.emplace_back(sample.tree, q, r, msa);
  }
  partials_.resize(contexts_.size());
  naive_logs_.resize(contexts_.size());
  for (std::size_t k = 0; k < contexts_.size(); ++k) {
    partials_[k].reserve(static_cast<std::size_t>(n));
    naive_logs_[k].resize(n, 4);
    for (int j = 0; j < n; ++j) {
      partials_[k].push_back(contexts_[k].prune_column(j));
      naive_logs_[k].row(j) =
          contexts_[k].naive_conditional_log(partials_[k].back()).transpose();
    }
  }
  emissions_.log_values.resize(n, 4);
  for (int j = 0; j < n; ++j) {
    emissions_.log_values.row(j) = mix_rate_row(naive_logs_, j).transpose();
  }
}

double SampleWorkspace::site_log_likelihood(int column, int naive_state,
                                            int category) const {
  return naive_logs_[static_cast<std::size_t>(category)](column, naive_state);
}

int SampleWorkspace::sample_site_rate(int column, int naive_state,
                                      std::mt19937_64& rng) const {
  std::vector<double> w(contexts_.size());
  double m = kNegInf;
  for (std::size_t k = 0; k < contexts_.size(); ++k) {
    w[k] = naive_logs_[k](column, naive_state);
    m = std::max(m, w[k]);
  }
  if (m == kNegInf) {
    throw std::runtime_error("column has zero likelihood in every rate class");
  }
  for (double& x : w) x = std::exp(x - m);
  return sample_categorical(w, rng);
}

std::vector<int> SampleWorkspace::sample_ancestral_states(
    int column, int naive_state, int category, std::mt19937_64& rng) const {
  return preorder_state_draw(
      sample_->tree, contexts_[static_cast<std::size_t>(category)],
      partials_[static_cast<std::size_t>(category)][static_cast<std::size_t>(column)],
      naive_state, rng);
}

int sample_site_rate(const CladeTree& tree, const Msa& msa, int column,
                     int naive_state, const GtrParams& params,
                     const RateModel& rates, std::mt19937_64& rng) {
  PhyloSample sample{tree, params, rates.alpha, 0.0};
  SampleWorkspace ws(sample, msa, rates.category_count);
  return ws.sample_site_rate(column, naive_state, rng);
}

std::vector<int> sample_ancestral_states(const CladeTree& tree, const Msa& msa,
                                         int column, int naive_state,
                                         double rate, const GtrParams& params,
                                         std::mt19937_64& rng) {
  const RateMatrix q(params);
  const PruningContext ctx(tree, q, rate, msa);
  const PartialLikelihoods partials = ctx.prune_column(column);
  return preorder_state_draw(tree, ctx, partials, naive_state, rng);
}

std::vector<PosteriorDraw> sample_posterior(const Msa& msa,
                                            const NaivePrior& prior,
                                            std::vector<PhyloSample> pool,
                                            const SirConfig& config,
                                            int k_rates, int threads) {
  const auto [n_pool, n_final] = config.resolve(static_cast<int>(pool.size()));
  if (n_pool < static_cast<int>(pool.size())) {
    // Keep the most recent draws, matching thinned-trace conventions.
    pool.erase(pool.begin(),
               pool.end() - static_cast<std::ptrdiff_t>(n_pool));
  }
  WeightedPool weighted =
      build_weighted_pool(std::move(pool), msa, prior, k_rates, threads);

  std::mt19937_64 sir_rng = make_rng_stream(config.seed, 0);
  const std::vector<int> selected = resample_without_replacement(
      weighted.log_weights, n_final, sir_rng);

  std::vector<PosteriorDraw> draws(selected.size());
  parallel_for(selected.size(), threads, [&](std::size_t d) {
    const int idx = selected[d];
    const PhyloSample& sample =
        weighted.samples[static_cast<std::size_t>(idx)];
    std::mt19937_64 rng = make_rng_stream(config.seed, d + 1);

    SampleWorkspace ws(sample, msa, k_rates);
    const ForwardMessages fwd = forward(prior, ws.emissions());

    PosteriorDraw& draw = draws[d];
    draw.sample = sample;
    draw.log_weight = weighted.log_weights[static_cast<std::size_t>(idx)];
    draw.naive = backward_sample_naive(prior, ws.emissions(), fwd, rng);

    const int n = msa.width();
    draw.site_rates.resize(static_cast<std::size_t>(n));
    const std::vector<int> internals = sample.tree.internal_nodes();
    std::vector<std::string> states(internals.size(),
                                    std::string(static_cast<std::size_t>(n), 'A'));
    for (int j = 0; j < n; ++j) {
      const int naive_state = base_index(draw.naive[static_cast<std::size_t>(j)]);
      const int category = ws.sample_site_rate(j, naive_state, rng);
      draw.site_rates[static_cast<std::size_t>(j)] = category;
      const std::vector<int> node_states =
          ws.sample_ancestral_states(j, naive_state, category, rng);
      for (std::size_t u = 0; u < internals.size(); ++u) {
        states[u][static_cast<std::size_t>(j)] = index_base(node_states[u]);
      }
    }

    // Key rows by clade signature, sorted for cross-draw stability.
    std::vector<std::size_t> order(internals.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::string> signatures(internals.size());
    for (std::size_t u = 0; u < internals.size(); ++u) {
      signatures[u] = sample.tree.clade_signature(internals[u]);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return signatures[a] < signatures[b];
    });
    for (std::size_t u : order) {
      draw.internal_signatures.push_back(signatures[u]);
      draw.internal_states.push_back(states[u]);
    }
  });
  return draws;
}

void write_draw_archive(const std::filesystem::path& path,
                        const std::vector<PosteriorDraw>& draws) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write draw archive " + path.string());
  }
  for (const PosteriorDraw& draw : draws) {
    json record;
    record["tree"] = draw.sample.tree.to_newick();
    record["alpha"] = draw.sample.alpha;
    record["pi"] = draw.sample.params.base_freqs;
    record["e"] = draw.sample.params.exchangeabilities;
    record["proposal_loglik"] = draw.sample.proposal_loglik;
    record["log_weight"] = draw.log_weight;
    record["naive"] = draw.naive;
    record["site_rates"] = draw.site_rates;
    json internal = json::object();
    for (std::size_t u = 0; u < draw.internal_signatures.size(); ++u) {
      internal[draw.internal_signatures[u]] = draw.internal_states[u];
    }
    record["internal"] = internal;
    out << record.dump() << '\n';
  }
}

std::vector<PosteriorDraw> read_draw_archive(const std::filesystem::path& path,
                                             const std::string& naive_id) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open draw archive " + path.string());
  }
  std::vector<PosteriorDraw> draws;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed draw archive record: " +
                               std::string(e.what()));
    }
    PosteriorDraw draw{
        PhyloSample{CladeTree::parse_newick(record.at("tree").get<std::string>(),
                                            naive_id),
                    GtrParams{}, record.at("alpha").get<double>(),
                    record.at("proposal_loglik").get<double>()},
        record.value("log_weight", 0.0),
        record.at("naive").get<std::string>(),
        record.at("site_rates").get<std::vector<int>>(),
        {},
        {}};
    draw.sample.params.base_freqs =
        record.at("pi").get<std::array<double, 4>>();
    draw.sample.params.exchangeabilities =
        record.at("e").get<std::array<double, 6>>();
    for (const auto& [signature, states] : record.at("internal").items()) {
      draw.internal_signatures.push_back(signature);
      draw.internal_states.push_back(states.get<std::string>());
    }
    draws.push_back(std::move(draw));
  }
  return draws;
}

}  // namespace phylohmm
