#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phylohmm/ancestral.hpp"
#include "phylohmm/msa.hpp"
#include "phylohmm/naive_prior.hpp"
#include "phylohmm/simulate.hpp"

namespace phylohmm {

// Standard genetic code, frame starting at the first column; stop codons
// render '*', codons containing N or '-' render 'X'. Length must be a
// multiple of 3.
std::string translate_dna(const std::string& dna);

int hamming(const std::string& a, const std::string& b);

// Column order of the per-site amino-acid posterior matrix.
inline constexpr std::array<char, 22> kAminoAcidColumns = {
    'A', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'K', 'L', 'M',
    'N', 'P', 'Q', 'R', 'S', 'T', 'V', 'W', 'Y', '*', 'X'};

struct NaiveReportEntry {
  std::string amino_acids;
  double probability = 0.0;
  // DNA sequences translating to this entry with their own probabilities.
  std::vector<std::pair<std::string, double>> dna_variants;
};

struct NaiveReport {
  std::vector<NaiveReportEntry> entries;  // descending probability
  std::vector<std::array<double, 22>> site_posteriors;
};

NaiveReport naive_posterior_report(const std::vector<PosteriorDraw>& draws);

// Per-site posterior over the four bases of the sampled naive DNA sequences.
std::vector<std::array<double, 4>> naive_dna_logo(
    const std::vector<PosteriorDraw>& draws);

// Writes naive_aa.fasta, naive_dna_map.fasta and naive_logo.tsv.
void write_naive_report(const NaiveReport& report,
                        const std::filesystem::path& out_dir);

struct ValidationConfig {
  double rho = 0.5;                           // decision boundary, in (0,1)
  std::optional<std::pair<int, int>> region;  // 1-based inclusive columns
  std::string lineage_tip;
  double lineage_cutoff = 0.04;
  bool dna = false;  // compare at the DNA level instead of amino acids

  void validate(int n_columns) const;
};

struct LineageNode {
  enum class Kind { kNaive, kIntermediate, kTip };
  Kind kind;
  std::string sequence;
  double probability = 0.0;
  int rank = 0;  // 1-based within its kind, by descending probability
};

struct LineageEdge {
  int from = 0;  // indices into LineageSummary::nodes
  int to = 0;
  double probability = 0.0;
  std::string mutations;  // e.g. "A12T,S40P"
};

// Aggregated naive-to-tip trajectories: each draw contributes exactly one
// path of distinct sequences (consecutive duplicates collapsed).
struct LineageSummary {
  std::vector<std::vector<std::string>> paths;
  std::vector<LineageNode> nodes;
  std::vector<LineageEdge> edges;
  // Fraction of draws whose ancestral path (naive plus intermediates, tip
  // excluded) contains each unique sequence; input to the classification.
  std::vector<std::pair<std::string, double>> ancestral_probabilities;
};

LineageSummary lineage_report(const std::vector<PosteriorDraw>& draws,
                              const Msa& msa, const ValidationConfig& config);

// Plain-text graph description (Graphviz-compatible); nodes and edges with
// probability below the cutoff are omitted.
void write_lineage_dot(const LineageSummary& summary, double cutoff,
                       const std::filesystem::path& path);
void write_lineage_table(const LineageSummary& summary,
                         const std::filesystem::path& path);

struct Classification {
  double ppv = 0.0;
  bool ppv_defined = true;  // false when the prediction set is empty
  double tpr = 0.0;
  int prediction_size = 0;
  int truth_size = 0;
};

Classification asr_classification(const LineageSummary& summary,
                                  const std::vector<std::string>& truth_lineage,
                                  double rho);

// Sequences on the true naive-to-tip ancestral path (tip excluded),
// consecutive duplicates collapsed, translated unless dna is set.
std::vector<std::string> true_lineage(const SimulatedFamily& truth,
                                      const std::string& tip_id, bool dna);

// Observed tip farthest from the naive leaf in branch-length distance; ties
// resolve to the lexicographically smallest label.
std::string farthest_tip(const CladeTree& tree);

// Most frequent sampled naive DNA sequence, ties lexicographically smallest.
std::string map_naive_sequence(const std::vector<PosteriorDraw>& draws);

// Independent-column naive estimate under a star topology with equal branch
// lengths: argmax of the prior position marginal times the star emission.
// The comparison baseline for a phylogeny-free method.
std::string star_baseline_naive(const Msa& msa, const NaivePrior& prior,
                                int k_rates);

// Viterbi naive sequence under the prior with star-topology emissions; the
// default proposal-stage point estimate.
std::string star_naive_estimate(const Msa& msa, const NaivePrior& prior,
                                int k_rates);

}  // namespace phylohmm
