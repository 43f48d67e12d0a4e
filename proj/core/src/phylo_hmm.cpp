#include "phylohmm/phylo_hmm.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

namespace {

void check_lengths(const NaivePrior& prior, const EmissionTable& em) {
  if (prior.length() != em.length()) {
    throw std::invalid_argument(
        "prior length " + std::to_string(prior.length()) +
        " does not match emission table length " + std::to_string(em.length()));
  }
}

// Mixes per-rate log likelihood vectors into one emission row.
Eigen::Vector4d mix_rates(const std::vector<Eigen::Vector4d>& per_rate) {
  const double log_k = std::log(static_cast<double>(per_rate.size()));
  Eigen::Vector4d out;
  std::vector<double> terms(per_rate.size());
  for (int i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < per_rate.size(); ++k) terms[k] = per_rate[k](i);
    out(i) = log_sum_exp_sorted(terms) - log_k;
  }
  return out;
}

}  // namespace

EmissionTable compute_emissions(const CladeTree& tree, const GtrParams& params,
                                const RateModel& rates, const Msa& msa,
                                int threads) {
  const RateMatrix q(params);
  std::vector<PruningContext> contexts;
  contexts.reserve(rates.rates.size());
  for (double r : rates.rates) contexts.emplace_back(tree, q, r, msa);

  EmissionTable em;
  em.log_values.resize(msa.width(), 4);
  parallel_for(static_cast<std::size_t>(msa.width()), threads,
               [&](std::size_t j) {
                 std::vector<Eigen::Vector4d> per_rate;
                 per_rate.reserve(contexts.size());
                 for (const PruningContext& ctx : contexts) {
                   per_rate.push_back(
                       ctx.naive_conditional_log(static_cast<int>(j)));
                 }
                 em.log_values.row(static_cast<Eigen::Index>(j)) =
                     mix_rates(per_rate).transpose();
               });
  return em;
}

EmissionTable star_tree_emissions(const Msa& msa, const GtrParams& params,
                                  const RateModel& rates, double tip_length) {
  const RateMatrix q(params);
  std::vector<Eigen::Matrix4d> log_p;
  log_p.reserve(rates.rates.size());
  for (double r : rates.rates) {
    Eigen::Matrix4d p = q.transition(tip_length * r);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        p(a, b) = p(a, b) > 0.0 ? std::log(p(a, b)) : kNegInf;
      }
    }
    log_p.push_back(p);
  }

  EmissionTable em;
  em.log_values.resize(msa.width(), 4);
  for (int j = 0; j < msa.width(); ++j) {
    std::vector<Eigen::Vector4d> per_rate(log_p.size(),
                                          Eigen::Vector4d::Zero());
    for (int s = 0; s < msa.count(); ++s) {
      const int obs = base_index(
          msa.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)]);
      if (obs < 0) continue;
      for (std::size_t k = 0; k < log_p.size(); ++k) {
        per_rate[k] += log_p[k].col(obs);
      }
    }
    em.log_values.row(j) = mix_rates(per_rate).transpose();
  }
  return em;
}

ForwardMessages forward(const NaivePrior& prior, const EmissionTable& em) {
  check_lengths(prior, em);
  const int n = em.length();
  ForwardMessages fwd;
  fwd.log_forward.resize(n, 4);
  for (int i = 0; i < 4; ++i) {
    fwd.log_forward(0, i) = prior.log_initial(i) + em.log_values(0, i);
  }
  std::array<double, 4> terms;
  for (int j = 1; j < n; ++j) {
    for (int b = 0; b < 4; ++b) {
      for (int a = 0; a < 4; ++a) {
        terms[static_cast<std::size_t>(a)] =
            fwd.log_forward(j - 1, a) + prior.log_transition(j - 1, a, b);
      }
      fwd.log_forward(j, b) = log_sum_exp(terms) + em.log_values(j, b);
    }
  }
  for (int i = 0; i < 4; ++i) {
    terms[static_cast<std::size_t>(i)] = fwd.log_forward(n - 1, i);
  }
  fwd.log_likelihood = log_sum_exp(terms);
  return fwd;
}

std::string backward_sample_naive(const NaivePrior& prior,
                                  const EmissionTable& em,
                                  const ForwardMessages& fwd,
                                  std::mt19937_64& rng) {
  check_lengths(prior, em);
  const int n = em.length();
  if (fwd.log_forward.rows() != n) {
    throw std::invalid_argument("forward messages do not match the emissions");
  }
  if (fwd.log_likelihood == kNegInf) {
    throw std::runtime_error("data are impossible under the phylo-HMM");
  }
  std::string out(static_cast<std::size_t>(n), 'A');
  std::array<double, 4> w;
  auto draw = [&](int column, int next_state) {
    double m = kNegInf;
    for (int i = 0; i < 4; ++i) {
      double lw = fwd.log_forward(column, i);
      if (next_state >= 0) lw += prior.log_transition(column, i, next_state);
      w[static_cast<std::size_t>(i)] = lw;
      m = std::max(m, lw);
    }
    if (m == kNegInf) {
      throw std::runtime_error("impossible phylo-HMM column during sampling");
    }
    for (double& x : w) x = std::exp(x - m);
    return sample_categorical(w, rng);
  };
  int state = draw(n - 1, -1);
  out[static_cast<std::size_t>(n - 1)] = index_base(state);
  for (int j = n - 2; j >= 0; --j) {
    state = draw(j, state);
    out[static_cast<std::size_t>(j)] = index_base(state);
  }
  return out;
}

std::pair<std::string, double> viterbi_naive(const NaivePrior& prior,
                                             const EmissionTable& em) {
  check_lengths(prior, em);
  const int n = em.length();

  // Suffix maxima: best[j][i] is the best log score of columns j..n-1 given
  // state i at column j. Reconstructing forwards with smallest-index argmax
  // then yields the lexicographically smallest maximizer.
  LogColumns4 best(n, 4);
  for (int i = 0; i < 4; ++i) best(n - 1, i) = em.log_values(n - 1, i);
  for (int j = n - 2; j >= 0; --j) {
    for (int a = 0; a < 4; ++a) {
      double m = kNegInf;
      for (int b = 0; b < 4; ++b) {
        m = std::max(m, prior.log_transition(j, a, b) + best(j + 1, b));
      }
      best(j, a) = em.log_values(j, a) + m;
    }
  }

  std::string seq(static_cast<std::size_t>(n), 'A');
  double total = kNegInf;
  int state = -1;
  for (int i = 0; i < 4; ++i) {
    const double score = prior.log_initial(i) + best(0, i);
    if (score > total) {
      total = score;
      state = i;
    }
  }
  if (state < 0 || total == kNegInf) {
    throw std::runtime_error("data are impossible under the phylo-HMM");
  }
  seq[0] = index_base(state);
  for (int j = 1; j < n; ++j) {
    int next = -1;
    double next_best = kNegInf;
    for (int b = 0; b < 4; ++b) {
      const double score = prior.log_transition(j - 1, state, b) + best(j, b);
      if (score > next_best) {
        next_best = score;
        next = b;
      }
    }
    seq[static_cast<std::size_t>(j)] = index_base(next);
    state = next;
  }
  return {seq, total};
}

}  // namespace phylohmm
