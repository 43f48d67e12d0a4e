#include "phylohmm/substitution.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace phylohmm {

void GtrParams::validate() const {
  for (double e : exchangeabilities) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw std::invalid_argument("GTR exchangeabilities must be positive");
    }
  }
  double sum = 0.0;
  for (double f : base_freqs) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw std::invalid_argument("GTR base frequencies must be positive");
    }
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("GTR base frequencies must sum to 1, got " +
                                std::to_string(sum));
  }
}

RateModel discrete_gamma_rates(double alpha, int category_count) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("gamma shape must be positive");
  }
  if (category_count < 1) {
    throw std::invalid_argument("rate category count must be >= 1");
  }
  const int k = category_count;
  RateModel model;
  model.alpha = alpha;
  model.category_count = k;
  model.rates.assign(static_cast<std::size_t>(k), 1.0);
  if (k == 1) return model;

  // Class boundaries are quantiles of Gamma(alpha, alpha); the class mean
  // over [a, b] follows from the incomplete-gamma identity
  //   E[X; X in (a,b)] = P(alpha+1, alpha*b) - P(alpha+1, alpha*a)
  // (the Gamma(alpha, alpha) mean is 1), so each class mean is K times that.
  std::vector<double> boundaries(static_cast<std::size_t>(k) + 1);
  boundaries.front() = 0.0;
  boundaries.back() = std::numeric_limits<double>::infinity();
  for (int i = 1; i < k; ++i) {
    const double p = static_cast<double>(i) / k;
    boundaries[static_cast<std::size_t>(i)] =
        boost::math::gamma_p_inv(alpha, p) / alpha;
  }
  double mean = 0.0;
  for (int i = 0; i < k; ++i) {
    const double a = boundaries[static_cast<std::size_t>(i)];
    const double b = boundaries[static_cast<std::size_t>(i) + 1];
    const double lower = boost::math::gamma_p(alpha + 1.0, alpha * a);
    const double upper = std::isinf(b)
                             ? 1.0
                             : boost::math::gamma_p(alpha + 1.0, alpha * b);
    model.rates[static_cast<std::size_t>(i)] = k * (upper - lower);
    mean += model.rates[static_cast<std::size_t>(i)];
  }
  // Absorb quadrature error so the rates average to exactly 1.
  mean /= k;
  for (double& r : model.rates) r /= mean;
  for (int i = 1; i < k; ++i) {
    if (!(model.rates[static_cast<std::size_t>(i)] >
          model.rates[static_cast<std::size_t>(i) - 1])) {
      throw std::runtime_error("discrete gamma rates are not increasing");
    }
  }
  return model;
}

RateMatrix::RateMatrix(const GtrParams& params) {
  params.validate();
  for (int i = 0; i < 4; ++i) pi_(i) = params.base_freqs[static_cast<std::size_t>(i)];

  int pair = 0;
  q_.setZero();
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double e = params.exchangeabilities[static_cast<std::size_t>(pair++)];
      q_(i, j) = e * pi_(j);
      q_(j, i) = e * pi_(i);
    }
  }
  double expected_rate = 0.0;
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j != i) row += q_(i, j);
    }
    q_(i, i) = -row;
    expected_rate += pi_(i) * row;
  }
  q_ /= expected_rate;

  // Eigendecomposition of the pi-symmetrized matrix; Q shares its spectrum
  // and the eigenvectors transform back through the sqrt(pi) scaling.
  const Eigen::Vector4d sqrt_pi = pi_.array().sqrt();
  const Eigen::Matrix4d sym = sqrt_pi.asDiagonal() * q_ *
                              sqrt_pi.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(
      Eigen::Matrix4d((sym + sym.transpose()) / 2.0));
  eigvals_ = solver.eigenvalues();
  eigvecs_ = sqrt_pi.cwiseInverse().asDiagonal() * solver.eigenvectors();
  inv_eigvecs_ = solver.eigenvectors().transpose() * sqrt_pi.asDiagonal();
}

Eigen::Matrix4d RateMatrix::transition(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("branch length must be finite and >= 0");
  }
  if (t == 0.0) return Eigen::Matrix4d::Identity();
  const Eigen::Vector4d scaled = (eigvals_.array() * t).exp();
  Eigen::Matrix4d p = eigvecs_ * scaled.asDiagonal() * inv_eigvecs_;
  // Clamp the eigendecomposition round-off.
  return p.array().max(0.0).min(1.0).matrix();
}

}  // namespace phylohmm
