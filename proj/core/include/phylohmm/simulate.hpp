#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "phylohmm/msa.hpp"
#include "phylohmm/naive_prior.hpp"
#include "phylohmm/substitution.hpp"
#include "phylohmm/tree.hpp"

namespace phylohmm {

struct SimulationConfig {
  double beta = -1.0;          // beta-splitting balance parameter, > -2
  int n_tips = 40;             // clonal-family sequence count
  double t0 = 0.01759;         // root branch length
  double branch_scale = 0.0179;  // mean of the Uniform(0, 2M) branch draw
  int k_rates = 4;
  double alpha = 1.0;
  GtrParams gtr;
  std::string naive_id = "naive";
  std::uint64_t seed = 1;

  void validate() const;
};

// Beta-splitting topology over n_tips observed tips plus the naive leaf,
// with unit placeholder branch lengths. Tips are labeled s001, s002, ...
CladeTree beta_splitting_topology(int n_tips, double beta, std::mt19937_64& rng,
                                  const std::string& naive_id = "naive");

// Every branch of the splitting tree gets an independent Uniform(0, 2M)
// draw; the naive attachment branch is set to exactly t0.
void assign_branch_lengths(CladeTree& tree, double branch_scale, double t0,
                           std::mt19937_64& rng);

struct SimulatedFamily {
  CladeTree tree;
  std::string naive;
  Msa msa;
  std::vector<std::string> internal_signatures;
  std::vector<std::string> internal_states;
};

// Simulates one column rate category (uniform over the rate classes) and
// states tipward from the naive sequence; returns the observed tips and the
// full true internal-state record.
SimulatedFamily evolve_sequences(const CladeTree& tree,
                                 const std::string& naive,
                                 const GtrParams& params,
                                 const RateModel& rates, std::mt19937_64& rng);

// Writes tree.nwk, naive.fasta, internal_truth.tsv, msa.fasta and meta.json
// into `directory`.
void write_family(const std::filesystem::path& directory,
                  const SimulatedFamily& family, const SimulationConfig& config);
SimulatedFamily read_family(const std::filesystem::path& directory,
                            const std::string& naive_id = "naive");

struct GridConfig {
  std::vector<double> betas{-1.5, -1.25, -1.0};
  std::vector<int> tip_counts{40, 80};
  std::vector<double> root_lengths{0.01759, 0.1};
  int replicates = 15;
  SimulationConfig base;  // evolution parameters and master seed
};

// One directory per (beta, N_CF, t0, replicate) cell plus a manifest.tsv
// index; returns the manifest rows (relative paths).
std::vector<std::string> run_experiment_grid(const GridConfig& grid,
                                             const NaivePrior& prior,
                                             const std::filesystem::path& outdir);

}  // namespace phylohmm
