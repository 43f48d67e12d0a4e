#include "phylohmm/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/pruning.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

namespace {

double log_gamma(double x) { return std::lgamma(x); }

template <std::size_t N>
double log_dirichlet(const std::array<double, N>& x,
                     const std::array<double, N>& concentration) {
  double lp = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!(x[i] > 0.0)) return kNegInf;
    lp += (concentration[i] - 1.0) * std::log(x[i]) - log_gamma(concentration[i]);
    total += concentration[i];
  }
  return lp + log_gamma(total);
}

template <std::size_t N>
std::array<double, N> dirichlet_draw(const std::array<double, N>& concentration,
                                     std::mt19937_64& rng) {
  std::array<double, N> out{};
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    std::gamma_distribution<double> gamma(concentration[i], 1.0);
    out[i] = gamma(rng);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

std::array<double, 6> simplex_e(const std::array<double, 6>& e) {
  double total = 0.0;
  for (double x : e) total += x;
  std::array<double, 6> out{};
  for (std::size_t i = 0; i < 6; ++i) out[i] = e[i] / total;
  return out;
}

std::array<double, 4> empirical_base_freqs(const Msa& msa) {
  std::array<double, 4> counts{1.0, 1.0, 1.0, 1.0};  // pseudocounts
  for (const std::string& row : msa.rows) {
    for (char c : row) {
      const int i = base_index(c);
      if (i >= 0) counts[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  double total = counts[0] + counts[1] + counts[2] + counts[3];
  for (double& x : counts) x /= total;
  return counts;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

}  // namespace

void McmcConfig::validate() const {
  if (thin < 1 || iterations < thin) {
    throw std::invalid_argument("MCMC requires iterations >= thin >= 1");
  }
  if (burnin_samples < 0) {
    throw std::invalid_argument("MCMC burn-in sample count must be >= 0");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("branch-length prior rate lambda must be > 0");
  }
  for (double c : pi_concentration) {
    if (!(c > 0.0)) throw std::invalid_argument("Dirichlet hyperparameters must be > 0");
  }
  for (double c : e_concentration) {
    if (!(c > 0.0)) throw std::invalid_argument("Dirichlet hyperparameters must be > 0");
  }
}

double augmented_log_likelihood(const CladeTree& tree, const GtrParams& params,
                                const RateModel& rates, const Msa& msa,
                                int threads) {
  const RateMatrix q(params);
  std::vector<PruningContext> contexts;
  contexts.reserve(rates.rates.size());
  for (double r : rates.rates) contexts.emplace_back(tree, q, r, msa);
  const double log_k = std::log(static_cast<double>(rates.rates.size()));

  std::vector<double> column_ll(static_cast<std::size_t>(msa.width()));
  parallel_for(static_cast<std::size_t>(msa.width()), threads,
               [&](std::size_t j) {
                 std::vector<double> per_rate(contexts.size());
                 for (std::size_t k = 0; k < contexts.size(); ++k) {
                   per_rate[k] =
                       contexts[k].column_log_likelihood(static_cast<int>(j));
                 }
                 column_ll[j] = log_sum_exp_sorted(per_rate) - log_k;
               });
  double total = 0.0;
  for (double ll : column_ll) total += ll;
  return total;
}

double log_prior_density(const CladeTree& tree, const GtrParams& params,
                         double alpha, const McmcConfig& config) {
  const double lambda = config.lambda;
  double lp = 0.0;
  for (int i = 0; i < tree.node_count(); ++i) {
    if (i == tree.naive_node()) continue;
    lp += std::log(lambda) - lambda * tree.node(i).branch_length;
  }
  lp += std::log(lambda) - lambda * alpha;
  lp += log_dirichlet(params.base_freqs, config.pi_concentration);
  lp += log_dirichlet(simplex_e(params.exchangeabilities), config.e_concentration);
  return lp;
}

CladeTree random_topology(const std::vector<std::string>& tip_ids,
                          const std::string& naive_id, double branch_length,
                          std::mt19937_64& rng) {
  if (tip_ids.empty()) {
    throw std::invalid_argument("random topology needs at least one tip");
  }
  std::vector<TreeNode> nodes(2);
  nodes[0].label = naive_id;
  nodes[0].children = {1, -1};
  nodes[1].parent = 0;
  nodes[1].label = tip_ids[0];
  nodes[1].branch_length = branch_length;

  // Sequential uniform edge insertion; every edge is identified by its child
  // node, so each non-naive node is one candidate slot.
  for (std::size_t next = 1; next < tip_ids.size(); ++next) {
    std::uniform_int_distribution<int> pick(1, static_cast<int>(nodes.size()) - 1);
    const int edge_child = pick(rng);
    const int joint = static_cast<int>(nodes.size());
    const int leaf = joint + 1;
    TreeNode joint_node;
    joint_node.parent = nodes[static_cast<std::size_t>(edge_child)].parent;
    joint_node.children = {edge_child, leaf};
    joint_node.branch_length = branch_length;
    TreeNode leaf_node;
    leaf_node.parent = joint;
    leaf_node.label = tip_ids[next];
    leaf_node.branch_length = branch_length;
    for (int& slot : nodes[static_cast<std::size_t>(joint_node.parent)].children) {
      if (slot == edge_child) slot = joint;
    }
    nodes[static_cast<std::size_t>(edge_child)].parent = joint;
    nodes.push_back(joint_node);
    nodes.push_back(leaf_node);
  }
  return CladeTree(std::move(nodes), 0);
}

std::vector<PhyloSample> run_mcmc(const Msa& augmented,
                                  const std::string& naive_id,
                                  const McmcConfig& config, int k_rates,
                                  int threads) {
  config.validate();
  augmented.validate();
  if (augmented.count() < 3) {
    throw std::invalid_argument(
        "proposal MCMC requires an augmented alignment with >= 3 sequences");
  }
  if (augmented.row_of(naive_id) < 0) {
    throw std::invalid_argument("augmented alignment lacks the naive row '" +
                                naive_id + "'");
  }

  std::mt19937_64 rng(splitmix64(config.seed));
  std::vector<std::string> tip_ids;
  for (const std::string& id : augmented.ids) {
    if (id != naive_id) tip_ids.push_back(id);
  }

  // Overdispersed but cheap initial state.
  CladeTree tree =
      random_topology(tip_ids, naive_id, 1.0 / config.lambda, rng);
  GtrParams params;
  params.base_freqs = empirical_base_freqs(augmented);
  params.exchangeabilities = {1.0 / 6, 1.0 / 6, 1.0 / 6,
                              1.0 / 6, 1.0 / 6, 1.0 / 6};
  double alpha = 1.0;
  RateModel rates = discrete_gamma_rates(alpha, k_rates);

  double loglik =
      augmented_log_likelihood(tree, params, rates, augmented, threads);
  double logprior = log_prior_density(tree, params, alpha, config);
  if (!std::isfinite(loglik) || !std::isfinite(logprior)) {
    throw std::runtime_error(
        "MCMC initialization failed: non-finite posterior density");
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<double, 5> move_weights = {
      config.weight_nni, config.weight_branch, config.weight_pi,
      config.weight_e, config.weight_alpha};

  std::vector<PhyloSample> samples;
  samples.reserve(static_cast<std::size_t>(config.iterations / config.thin));

  for (long iter = 1; iter <= config.iterations; ++iter) {
    CladeTree prop_tree = tree;
    GtrParams prop_params = params;
    double prop_alpha = alpha;
    RateModel prop_rates = rates;
    double log_hastings = 0.0;
    bool proposable = true;

    switch (sample_categorical(move_weights, rng)) {
      case 0: {  // nearest-neighbor interchange
        const std::vector<int> edges = prop_tree.internal_edges();
        if (edges.empty()) {
          proposable = false;
          break;
        }
        std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
        const int v = edges[pick(rng)];
        const int side = unit(rng) < 0.5 ? 0 : 1;
        prop_tree.apply_nni(v, side);
        break;
      }
      case 1: {  // branch-length multiplier
        std::uniform_int_distribution<int> pick(0, tree.node_count() - 1);
        int node = pick(rng);
        while (node == tree.naive_node()) node = pick(rng);
        const double t = prop_tree.branch_length(node);
        const double factor =
            std::exp(config.branch_window * (unit(rng) - 0.5));
        prop_tree.set_branch_length(node, t * factor);
        log_hastings = std::log(factor);
        break;
      }
      case 2: {  // Dirichlet-centered base-frequency proposal
        std::array<double, 4> center;
        for (std::size_t i = 0; i < 4; ++i) {
          center[i] = config.pi_proposal_scale * params.base_freqs[i];
        }
        prop_params.base_freqs = dirichlet_draw(center, rng);
        for (double f : prop_params.base_freqs) proposable = proposable && f > 0.0;
        if (!proposable) break;
        std::array<double, 4> reverse_center;
        for (std::size_t i = 0; i < 4; ++i) {
          reverse_center[i] =
              config.pi_proposal_scale * prop_params.base_freqs[i];
        }
        log_hastings = log_dirichlet(params.base_freqs, reverse_center) -
                       log_dirichlet(prop_params.base_freqs, center);
        break;
      }
      case 3: {  // Dirichlet-centered exchangeability proposal
        const std::array<double, 6> current = simplex_e(params.exchangeabilities);
        std::array<double, 6> center;
        for (std::size_t i = 0; i < 6; ++i) {
          center[i] = config.e_proposal_scale * current[i];
        }
        prop_params.exchangeabilities = dirichlet_draw(center, rng);
        for (double e : prop_params.exchangeabilities) {
          proposable = proposable && e > 0.0;
        }
        if (!proposable) break;
        std::array<double, 6> reverse_center;
        for (std::size_t i = 0; i < 6; ++i) {
          reverse_center[i] =
              config.e_proposal_scale * prop_params.exchangeabilities[i];
        }
        log_hastings = log_dirichlet(current, reverse_center) -
                       log_dirichlet(prop_params.exchangeabilities, center);
        break;
      }
      default: {  // log-normal random walk on alpha
        std::normal_distribution<double> step(0.0, config.alpha_step);
        prop_alpha = alpha * std::exp(step(rng));
        prop_rates = discrete_gamma_rates(prop_alpha, k_rates);
        log_hastings = std::log(prop_alpha / alpha);
        break;
      }
    }

    if (proposable) {
      const double prop_loglik = augmented_log_likelihood(
          prop_tree, prop_params, prop_rates, augmented, threads);
      const double prop_logprior =
          log_prior_density(prop_tree, prop_params, prop_alpha, config);
      const double log_accept =
          (prop_loglik + prop_logprior) - (loglik + logprior) + log_hastings;
      if (std::isfinite(prop_loglik) && std::log(unit(rng)) < log_accept) {
        tree = std::move(prop_tree);
        params = prop_params;
        alpha = prop_alpha;
        rates = std::move(prop_rates);
        loglik = prop_loglik;
        logprior = prop_logprior;
      }
    }

    if (iter % config.thin == 0) {
      samples.push_back(PhyloSample{tree, params, alpha, loglik});
    }
  }

  if (static_cast<long>(samples.size()) <= config.burnin_samples) {
    throw std::runtime_error("MCMC produced no post-burn-in samples");
  }
  samples.erase(samples.begin(),
                samples.begin() + static_cast<std::ptrdiff_t>(config.burnin_samples));
  return samples;
}

std::vector<PhyloSample> load_trace(const std::filesystem::path& newick_file,
                                    const std::filesystem::path& params_file,
                                    const Msa& msa, const std::string& naive_id,
                                    int k_rates) {
  std::ifstream trees_in(newick_file);
  if (!trees_in) {
    throw std::runtime_error("cannot open tree file " + newick_file.string());
  }
  std::vector<std::string> tree_lines;
  std::string line;
  while (std::getline(trees_in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tree_lines.push_back(line);
  }

  std::ifstream params_in(params_file);
  if (!params_in) {
    throw std::runtime_error("cannot open parameter file " +
                             params_file.string());
  }
  if (!std::getline(params_in, line)) {
    throw std::runtime_error("parameter file is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_tabs(line);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const std::array<std::string, 10> pi_e_names = {
      "pi_A", "pi_C", "pi_G", "pi_T", "e_AC",
      "e_AG", "e_AT", "e_CG", "e_CT", "e_GT"};
  std::array<int, 10> pi_e_cols{};
  const int alpha_col = column("alpha");
  if (alpha_col < 0) {
    throw std::runtime_error("parameter file is missing column 'alpha'");
  }
  for (std::size_t i = 0; i < pi_e_names.size(); ++i) {
    pi_e_cols[i] = column(pi_e_names[i]);
    if (pi_e_cols[i] < 0) {
      throw std::runtime_error("parameter file is missing column '" +
                               pi_e_names[i] + "'");
    }
  }
  const int loglik_col = column("loglik");
  const bool can_recompute = msa.row_of(naive_id) >= 0;
  if (loglik_col < 0 && !can_recompute) {
    throw std::runtime_error(
        "trace has no loglik column and the alignment lacks the naive row "
        "needed to recompute it");
  }

  std::vector<PhyloSample> samples;
  std::size_t row_index = 0;
  while (std::getline(params_in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row_index;
    if (row_index > tree_lines.size()) continue;  // keep counting for the report
    const std::vector<std::string> fields = split_tabs(line);
    auto field = [&](int col) {
      if (col < 0 || col >= static_cast<int>(fields.size())) {
        throw std::runtime_error("parameter row " + std::to_string(row_index) +
                                 " is missing fields");
      }
      return std::stod(fields[static_cast<std::size_t>(col)]);
    };

    GtrParams params;
    double pi_sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      params.base_freqs[static_cast<std::size_t>(i)] =
          field(pi_e_cols[static_cast<std::size_t>(i)]);
      pi_sum += params.base_freqs[static_cast<std::size_t>(i)];
    }
    if (std::abs(pi_sum - 1.0) > 1e-6) {
      throw std::runtime_error("parameter row " + std::to_string(row_index) +
                               ": base frequencies sum to " +
                               std::to_string(pi_sum) + ", expected 1");
    }
    for (double& f : params.base_freqs) f /= pi_sum;
    for (int i = 0; i < 6; ++i) {
      params.exchangeabilities[static_cast<std::size_t>(i)] =
          field(pi_e_cols[static_cast<std::size_t>(i) + 4]);
    }
    params.validate();

    PhyloSample sample{
        CladeTree::parse_newick(tree_lines[row_index - 1], naive_id), params,
        field(alpha_col), 0.0};
    if (!(sample.alpha > 0.0)) {
      throw std::runtime_error("parameter row " + std::to_string(row_index) +
                               ": alpha must be positive");
    }
    if (loglik_col >= 0) {
      sample.proposal_loglik = field(loglik_col);
    } else {
      sample.proposal_loglik = augmented_log_likelihood(
          sample.tree, sample.params,
          discrete_gamma_rates(sample.alpha, k_rates), msa);
    }
    if (!std::isfinite(sample.proposal_loglik)) {
      throw std::runtime_error("parameter row " + std::to_string(row_index) +
                               ": non-finite proposal log-likelihood");
    }
    samples.push_back(std::move(sample));
  }
  if (row_index != tree_lines.size()) {
    throw std::runtime_error(
        "trace row count mismatch: " + std::to_string(tree_lines.size()) +
        " trees vs " + std::to_string(row_index) + " parameter rows");
  }
  return samples;
}

void write_trace(const std::filesystem::path& newick_file,
                 const std::filesystem::path& params_file,
                 const std::vector<PhyloSample>& samples) {
  std::ofstream trees_out(newick_file);
  std::ofstream params_out(params_file);
  if (!trees_out || !params_out) {
    throw std::runtime_error("cannot write trace files");
  }
  params_out << "alpha\tpi_A\tpi_C\tpi_G\tpi_T\te_AC\te_AG\te_AT\te_CG\te_CT\te_GT\tloglik\n";
  char buf[40];
  auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  for (const PhyloSample& s : samples) {
    trees_out << s.tree.to_newick() << '\n';
    params_out << fmt(s.alpha);
    for (double f : s.params.base_freqs) params_out << '\t' << fmt(f);
    for (double e : s.params.exchangeabilities) params_out << '\t' << fmt(e);
    params_out << '\t' << fmt(s.proposal_loglik) << '\n';
  }
}

}  // namespace phylohmm
