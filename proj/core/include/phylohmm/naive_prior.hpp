#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace phylohmm {

// Inhomogeneous discrete-time Markov chain over the naive (root) sequence:
// a 4-probability vector for position 1 and one row-stochastic 4x4 matrix per
// subsequent position, entry (a, b) = p(next = b | current = a).
//
// Zero transition probabilities are allowed; evaluation then returns -inf.
class NaivePrior {
 public:
  NaivePrior(Eigen::Vector4d initial, std::vector<Eigen::Matrix4d> transitions);

  // Reads the structured prior file: length, initial (A,C,G,T order) and a
  // transitions array of 4x4 matrices or {matrix, repeat} blocks, linear
  // space. Rows further than 1e-6 from 1 are rejected naming the position.
  static NaivePrior load(const std::filesystem::path& path);

  static NaivePrior uniform(int length);
  // Independent positions, each distributed as `probs`; the chain reduction
  // of a stationary root distribution.
  static NaivePrior iid(const std::array<double, 4>& probs, int length);

  int length() const { return length_; }
  const Eigen::Vector4d& initial() const { return initial_; }
  // Transition into position j+1 (0-based j in [0, length-2]).
  const Eigen::Matrix4d& transition(int j) const {
    return transitions_[static_cast<std::size_t>(j)];
  }
  double log_initial(int base) const { return log_initial_(base); }
  double log_transition(int j, int from, int to) const {
    return log_transitions_[static_cast<std::size_t>(j)](from, to);
  }

  // Marginal distribution of each position under the chain.
  Eigen::Vector4d marginal(int position) const;

  double log_prob(const std::string& sequence) const;
  std::string sample(std::mt19937_64& rng) const;

 private:
  int length_;
  Eigen::Vector4d initial_;
  std::vector<Eigen::Matrix4d> transitions_;
  Eigen::Vector4d log_initial_;
  std::vector<Eigen::Matrix4d> log_transitions_;
};

}  // namespace phylohmm
