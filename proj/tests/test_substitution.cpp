#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phylohmm/substitution.hpp"

using namespace phylohmm;

namespace {

GtrParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> e_dist(0.2, 3.0);
  std::uniform_real_distribution<double> f_dist(0.1, 1.0);
  GtrParams params;
  for (double& e : params.exchangeabilities) e = e_dist(rng);
  double total = 0.0;
  for (double& f : params.base_freqs) {
    f = f_dist(rng);
    total += f;
  }
  for (double& f : params.base_freqs) f /= total;
  // Exact renormalization to satisfy the 1e-12 simplex invariant.
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += params.base_freqs[static_cast<std::size_t>(i)];
  params.base_freqs[3] = 1.0 - sum;
  return params;
}

}  // namespace

TEST_SUITE("substitution") {

TEST_CASE("jukes-cantor rate matrix") {
  const RateMatrix q(GtrParams{});
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double expected = i == j ? -1.0 : 1.0 / 3.0;
      CHECK(q.q()(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("stationarity of pi under Q") {
  GtrParams params;
  params.base_freqs = {0.1, 0.2, 0.3, 0.4};
  params.exchangeabilities = {1.3, 0.7, 2.0, 0.4, 1.1, 0.9};
  const RateMatrix q(params);
  const Eigen::Vector4d flow = q.q().transpose() * q.stationary();
  for (int i = 0; i < 4; ++i) CHECK(std::abs(flow(i)) < 1e-12);
}

TEST_CASE("hand-computed matrix for e = (1,2,1,1,2,1), uniform pi") {
  GtrParams params;
  params.exchangeabilities = {1, 2, 1, 1, 2, 1};
  const RateMatrix q(params);
  // Worked by hand from Q_ij = e_ij pi_j: the expected rate is already 1,
  // so no rescaling applies.
  const double expected[4][4] = {{-1.0, 0.25, 0.50, 0.25},
                                 {0.25, -1.0, 0.25, 0.50},
                                 {0.50, 0.25, -1.0, 0.25},
                                 {0.25, 0.50, 0.25, -1.0}};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(q.q()(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("unit expected substitution rate and detailed balance of Q") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    const GtrParams params = random_params(rng);
    const RateMatrix q(params);
    double rate = 0.0;
    double row_sums = 0.0;
    for (int i = 0; i < 4; ++i) {
      rate -= q.stationary()(i) * q.q()(i, i);
      double row = 0.0;
      for (int j = 0; j < 4; ++j) {
        row += q.q()(i, j);
        if (i != j) {
          CHECK(q.q()(i, j) >= 0.0);
          CHECK(std::abs(q.stationary()(i) * q.q()(i, j) -
                         q.stationary()(j) * q.q()(j, i)) < 1e-12);
        }
      }
      row_sums += std::abs(row);
    }
    CHECK(rate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row_sums < 1e-12);
  }
}

TEST_CASE("exchangeability scale invariance") {
  std::mt19937_64 rng(11);
  const GtrParams params = random_params(rng);
  GtrParams scaled = params;
  for (double& e : scaled.exchangeabilities) e *= 37.5;
  const RateMatrix a(params);
  const RateMatrix b(scaled);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(a.q()(i, j) - b.q()(i, j)) < 1e-12);
    }
  }
}

TEST_CASE("invalid parameters are rejected") {
  GtrParams params;
  params.exchangeabilities[2] = 0.0;
  CHECK_THROWS_AS(RateMatrix{params}, std::invalid_argument);
  params = GtrParams{};
  params.base_freqs = {0.5, 0.3, 0.1, 0.2};
  CHECK_THROWS_AS(RateMatrix{params}, std::invalid_argument);
  params = GtrParams{};
  params.base_freqs = {0.5, 0.5, 0.0, 0.0};
  CHECK_THROWS_AS(RateMatrix{params}, std::invalid_argument);
}

TEST_CASE("transition matrix at t = 0 is exactly the identity") {
  std::mt19937_64 rng(3);
  const RateMatrix q(random_params(rng));
  CHECK((q.transition(0.0) - Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("jukes-cantor closed form at t = 0.1") {
  const RateMatrix q(GtrParams{});
  const Eigen::Matrix4d p = q.transition(0.1);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double expected = i == j ? oracle::jc_same(0.1) : oracle::jc_diff(0.1);
      CHECK(p(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  CHECK(oracle::jc_same(0.1) == doctest::Approx(0.906389).epsilon(1e-6));
}

TEST_CASE("transition matrices are stochastic and satisfy the semigroup and "
          "detailed-balance properties") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> t_dist(0.0, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const GtrParams params = random_params(rng);
    const RateMatrix q(params);
    const double s = t_dist(rng);
    const double t = t_dist(rng);
    const Eigen::Matrix4d ps = q.transition(s);
    const Eigen::Matrix4d pt = q.transition(t);
    const Eigen::Matrix4d pst = q.transition(s + t);
    CHECK(((ps * pt) - pst).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(pt.row(i).sum() - 1.0) < 1e-10);
      for (int j = 0; j < 4; ++j) {
        CHECK(pt(i, j) >= 0.0);
        CHECK(pt(i, j) <= 1.0);
        CHECK(std::abs(q.stationary()(i) * pt(i, j) -
                       q.stationary()(j) * pt(j, i)) < 1e-10);
      }
    }
  }
}

TEST_CASE("transition matrix rejects bad branch lengths") {
  const RateMatrix q(GtrParams{});
  CHECK_THROWS_AS(q.transition(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(q.transition(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(q.transition(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("single rate class is exactly one") {
  const RateModel rm = discrete_gamma_rates(2.7, 1);
  REQUIRE(rm.rates.size() == 1);
  CHECK(rm.rates[0] == 1.0);
}

TEST_CASE("alpha = 1, K = 4 matches the exponential closed form") {
  const RateModel rm = discrete_gamma_rates(1.0, 4);
  const std::vector<double> expected = oracle::exp1_class_means(4);
  REQUIRE(rm.rates.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(rm.rates[static_cast<std::size_t>(k)] ==
          doctest::Approx(expected[static_cast<std::size_t>(k)]).epsilon(1e-10));
  }
  // Values documented for the emission mixture: (0.1369, 0.4768, 1, 2.3863).
  CHECK(rm.rates[0] == doctest::Approx(0.1369).epsilon(1e-3));
  CHECK(rm.rates[1] == doctest::Approx(0.4768).epsilon(1e-3));
  CHECK(rm.rates[2] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rm.rates[3] == doctest::Approx(2.3863).epsilon(1e-3));
}

TEST_CASE("rates are increasing with mean exactly one, concentrating as "
          "alpha grows") {
  double prev_spread = std::numeric_limits<double>::infinity();
  for (double alpha : {0.5, 1.0, 10.0, 1000.0}) {
    const RateModel rm = discrete_gamma_rates(alpha, 8);
    double mean = 0.0;
    double spread = 0.0;
    for (std::size_t k = 0; k < rm.rates.size(); ++k) {
      if (k > 0) CHECK(rm.rates[k] > rm.rates[k - 1]);
      mean += rm.rates[k];
      spread = std::max(spread, std::abs(rm.rates[k] - 1.0));
    }
    CHECK(std::abs(mean / 8.0 - 1.0) < 1e-12);
    CHECK(spread < prev_spread);
    prev_spread = spread;
  }
  const RateModel rm = discrete_gamma_rates(1e6, 4);
  for (double r : rm.rates) CHECK(std::abs(r - 1.0) < 1e-2);
}

TEST_CASE("invalid rate model parameters are rejected") {
  CHECK_THROWS_AS(discrete_gamma_rates(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(discrete_gamma_rates(-1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(discrete_gamma_rates(1.0, 0), std::invalid_argument);
}

}  // TEST_SUITE
