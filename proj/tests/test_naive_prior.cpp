#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/naive_prior.hpp"
#include "phylohmm/util.hpp"

using namespace phylohmm;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

NaivePrior random_prior(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Eigen::Vector4d initial;
  for (int i = 0; i < 4; ++i) initial(i) = unit(rng);
  initial /= initial.sum();
  std::vector<Eigen::Matrix4d> transitions;
  for (int j = 1; j < n; ++j) {
    Eigen::Matrix4d m;
    for (int a = 0; a < 4; ++a) {
      Eigen::Vector4d row;
      for (int b = 0; b < 4; ++b) row(b) = unit(rng);
      m.row(a) = (row / row.sum()).transpose();
    }
    transitions.push_back(m);
  }
  return NaivePrior(initial, transitions);
}

}  // namespace

TEST_SUITE("naive_prior") {

TEST_CASE("loads a uniform prior from the repeat shorthand") {
  const auto path = write_temp("uniform_prior.json", R"({
    "length": 5,
    "initial": [0.25, 0.25, 0.25, 0.25],
    "transitions": [
      {"matrix": [[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25],
                  [0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]],
       "repeat": 4}
    ]
  })");
  const NaivePrior prior = NaivePrior::load(path);
  CHECK(prior.length() == 5);
  for (int j = 0; j < 5; ++j) {
    const Eigen::Vector4d marginal = prior.marginal(j);
    for (int i = 0; i < 4; ++i) CHECK(marginal(i) == doctest::Approx(0.25));
  }
  CHECK(prior.log_prob("ACGTA") == doctest::Approx(5.0 * std::log(0.25)));
}

TEST_CASE("row-sum violations name the offending position") {
  const auto path = write_temp("bad_prior.json", R"({
    "length": 2,
    "initial": [0.25, 0.25, 0.25, 0.25],
    "transitions": [
      [[0.2,0.3,0.2,0.2],[0.25,0.25,0.25,0.25],
       [0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]]
    ]
  })");
  CHECK_THROWS_WITH_AS(NaivePrior::load(path), doctest::Contains("position 2"),
                       std::runtime_error);
}

TEST_CASE("length bookkeeping and malformed files are rejected") {
  const auto short_file = write_temp("short_prior.json", R"({
    "length": 3,
    "initial": [0.25, 0.25, 0.25, 0.25],
    "transitions": [
      {"matrix": [[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25],
                  [0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]],
       "repeat": 1}
    ]
  })");
  CHECK_THROWS_WITH_AS(NaivePrior::load(short_file),
                       doctest::Contains("expected 2"), std::runtime_error);
  const auto garbage = write_temp("garbage_prior.json", "not json {{{");
  CHECK_THROWS_WITH_AS(NaivePrior::load(garbage), doctest::Contains("malformed"),
                       std::runtime_error);
  CHECK_THROWS_AS(NaivePrior::load("/nonexistent/prior.json"),
                  std::runtime_error);
}

TEST_CASE("deterministic two-position chain") {
  Eigen::Vector4d initial(1.0, 0.0, 0.0, 0.0);
  Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
  t(0, 1) = 1.0;  // A -> C
  t(1, 0) = 1.0;
  t(2, 0) = 1.0;
  t(3, 0) = 1.0;
  const NaivePrior prior(initial, {t});
  CHECK(prior.log_prob("AC") == doctest::Approx(0.0));
  CHECK(prior.log_prob("AA") == kNegInf);
  CHECK(prior.log_prob("CA") == kNegInf);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) CHECK(prior.sample(rng) == "AC");
  CHECK(prior.marginal(1)(1) == doctest::Approx(1.0));
}

TEST_CASE("ambiguous bases cannot be scored") {
  const NaivePrior prior = NaivePrior::uniform(3);
  CHECK_THROWS_AS(prior.log_prob("ANA"), std::invalid_argument);
  CHECK_THROWS_AS(prior.log_prob("A-A"), std::invalid_argument);
  CHECK_THROWS_AS(prior.log_prob("AC"), std::invalid_argument);
}

TEST_CASE("probabilities of all sequences sum to one") {
  std::mt19937_64 rng(17);
  for (int n : {1, 2, 4, 6}) {
    const NaivePrior prior = random_prior(n, rng);
    const long combos = static_cast<long>(std::pow(4.0, n));
    double total = 0.0;
    std::string seq(static_cast<std::size_t>(n), 'A');
    for (long c = 0; c < combos; ++c) {
      long rem = c;
      for (int j = 0; j < n; ++j) {
        seq[static_cast<std::size_t>(j)] = index_base(static_cast<int>(rem % 4));
        rem /= 4;
      }
      total += std::exp(prior.log_prob(seq));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sampler agrees with the density") {
  std::mt19937_64 rng(99);
  const NaivePrior prior = random_prior(3, rng);
  std::mt19937_64 sampler_rng(7);
  const long draws = 200000;
  std::map<std::string, long> counts;
  for (long i = 0; i < draws; ++i) ++counts[prior.sample(sampler_rng)];
  std::string seq(3, 'A');
  for (long c = 0; c < 64; ++c) {
    long rem = c;
    for (int j = 0; j < 3; ++j) {
      seq[static_cast<std::size_t>(j)] = index_base(static_cast<int>(rem % 4));
      rem /= 4;
    }
    const double p = std::exp(prior.log_prob(seq));
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
    const double observed =
        static_cast<double>(counts[seq]) / static_cast<double>(draws);
    CHECK(std::abs(observed - p) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("per-position frequencies of the uniform prior") {
  const NaivePrior prior = NaivePrior::uniform(3);
  std::mt19937_64 rng(12345);
  const long draws = 100000;
  std::array<std::array<long, 4>, 3> counts{};
  for (long i = 0; i < draws; ++i) {
    const std::string seq = prior.sample(rng);
    for (int j = 0; j < 3; ++j) {
      ++counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(
          base_index(seq[static_cast<std::size_t>(j)]))];
    }
  }
  const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(draws));
  for (const auto& row : counts) {
    for (long c : row) {
      CHECK(std::abs(static_cast<double>(c) / draws - 0.25) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("sampling is reproducible under a fixed seed") {
  std::mt19937_64 rng_a(42);
  std::mt19937_64 rng_b(42);
  const NaivePrior prior = NaivePrior::uniform(20);
  for (int i = 0; i < 10; ++i) CHECK(prior.sample(rng_a) == prior.sample(rng_b));
}

}  // TEST_SUITE
