#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace phylohmm {

// GTR substitution-process parameters. Exchangeabilities are stored in the
// pair order AC, AG, AT, CG, CT, GT; base frequencies in A, C, G, T order.
struct GtrParams {
  std::array<double, 6> exchangeabilities{1, 1, 1, 1, 1, 1};
  std::array<double, 4> base_freqs{0.25, 0.25, 0.25, 0.25};

  // Throws std::invalid_argument unless all exchangeabilities are positive
  // and the frequencies are strictly positive and sum to 1 within 1e-12.
  void validate() const;
};

// Discrete-gamma rate model: K equal-probability classes of Gamma(alpha,
// alpha), each represented by its class conditional mean, renormalized so the
// rates average to exactly 1.
struct RateModel {
  double alpha = 1.0;
  int category_count = 1;
  std::vector<double> rates{1.0};
};

RateModel discrete_gamma_rates(double alpha, int category_count);

// Unit-rate GTR rate matrix Q with its eigendecomposition cached so that
// transition matrices P(t) = exp(Qt) are a diagonal rescaling away.
//
// Q is scaled so the expected substitution rate at stationarity,
// -sum_i pi_i Q_ii, is 1: branch lengths are expected substitutions per site.
class RateMatrix {
 public:
  explicit RateMatrix(const GtrParams& params);

  const Eigen::Matrix4d& q() const { return q_; }
  const Eigen::Vector4d& stationary() const { return pi_; }

  // P(t); rows sum to 1, entries clamped to [0, 1]. Throws on negative or
  // non-finite t.
  Eigen::Matrix4d transition(double t) const;

 private:
  Eigen::Matrix4d q_;
  Eigen::Vector4d pi_;
  Eigen::Matrix4d eigvecs_;      // right eigenvectors of Q
  Eigen::Matrix4d inv_eigvecs_;  // their inverse
  Eigen::Vector4d eigvals_;
};

inline RateMatrix build_rate_matrix(const GtrParams& params) {
  return RateMatrix(params);
}

inline Eigen::Matrix4d transition_matrix(const RateMatrix& q, double t) {
  return q.transition(t);
}

}  // namespace phylohmm
