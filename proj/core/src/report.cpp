#include "phylohmm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/phylo_hmm.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

namespace {

std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

int aa_column(char aa) {
  for (std::size_t i = 0; i < kAminoAcidColumns.size(); ++i) {
    if (kAminoAcidColumns[i] == aa) return static_cast<int>(i);
  }
  throw std::logic_error(std::string("unknown amino acid '") + aa + "'");
}

std::string mutation_list(const std::string& from, const std::string& to) {
  std::string out;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] == to[i]) continue;
    if (!out.empty()) out.push_back(',');
    out.push_back(from[i]);
    out += std::to_string(i + 1);
    out.push_back(to[i]);
  }
  return out;
}

const char* kind_name(LineageNode::Kind kind) {
  switch (kind) {
    case LineageNode::Kind::kNaive: return "naive";
    case LineageNode::Kind::kIntermediate: return "intermediate";
    default: return "tip";
  }
}

}  // namespace

std::string translate_dna(const std::string& dna) {
  if (dna.size() % 3 != 0) {
    throw std::invalid_argument(
        "sequence length " + std::to_string(dna.size()) +
        " is not divisible by 3; cannot fix the reading frame");
  }
  static const std::array<char, 64> table = [] {
    // Codon index is 16*first + 4*second + third in A,C,G,T digit order.
    const char* bases = "ACGT";
    auto idx = [&](const char* codon) {
      auto digit = [&](char b) {
        return static_cast<int>(std::string(bases).find(b));
      };
      return 16 * digit(codon[0]) + 4 * digit(codon[1]) + digit(codon[2]);
    };
    std::array<char, 64> t{};
    const std::pair<const char*, char> entries[] = {
        {"TTT", 'F'}, {"TTC", 'F'}, {"TTA", 'L'}, {"TTG", 'L'}, {"CTT", 'L'},
        {"CTC", 'L'}, {"CTA", 'L'}, {"CTG", 'L'}, {"ATT", 'I'}, {"ATC", 'I'},
        {"ATA", 'I'}, {"ATG", 'M'}, {"GTT", 'V'}, {"GTC", 'V'}, {"GTA", 'V'},
        {"GTG", 'V'}, {"TCT", 'S'}, {"TCC", 'S'}, {"TCA", 'S'}, {"TCG", 'S'},
        {"CCT", 'P'}, {"CCC", 'P'}, {"CCA", 'P'}, {"CCG", 'P'}, {"ACT", 'T'},
        {"ACC", 'T'}, {"ACA", 'T'}, {"ACG", 'T'}, {"GCT", 'A'}, {"GCC", 'A'},
        {"GCA", 'A'}, {"GCG", 'A'}, {"TAT", 'Y'}, {"TAC", 'Y'}, {"TAA", '*'},
        {"TAG", '*'}, {"CAT", 'H'}, {"CAC", 'H'}, {"CAA", 'Q'}, {"CAG", 'Q'},
        {"AAT", 'N'}, {"AAC", 'N'}, {"AAA", 'K'}, {"AAG", 'K'}, {"GAT", 'D'},
        {"GAC", 'D'}, {"GAA", 'E'}, {"GAG", 'E'}, {"TGT", 'C'}, {"TGC", 'C'},
        {"TGA", '*'}, {"TGG", 'W'}, {"CGT", 'R'}, {"CGC", 'R'}, {"CGA", 'R'},
        {"CGG", 'R'}, {"AGT", 'S'}, {"AGC", 'S'}, {"AGA", 'R'}, {"AGG", 'R'},
        {"GGT", 'G'}, {"GGC", 'G'}, {"GGA", 'G'}, {"GGG", 'G'}};
    for (const auto& [codon, aa] : entries) t[static_cast<std::size_t>(idx(codon))] = aa;
    return t;
  }();

  std::string out;
  out.reserve(dna.size() / 3);
  for (std::size_t i = 0; i < dna.size(); i += 3) {
    int index = 0;
    bool ambiguous = false;
    for (std::size_t k = 0; k < 3; ++k) {
      const int b = base_index(dna[i + k]);
      if (b < 0) {
        ambiguous = true;
        break;
      }
      index = index * 4 + b;
    }
    out.push_back(ambiguous ? 'X' : table[static_cast<std::size_t>(index)]);
  }
  return out;
}

int hamming(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming distance requires equal lengths");
  }
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

void ValidationConfig::validate(int n_columns) const {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument("decision boundary rho must lie in (0, 1)");
  }
  if (region) {
    if (region->first < 1 || region->second > n_columns ||
        region->first > region->second) {
      throw std::invalid_argument("region interval out of bounds");
    }
  }
  if (!(lineage_cutoff >= 0.0)) {
    throw std::invalid_argument("lineage cutoff must be >= 0");
  }
}

NaiveReport naive_posterior_report(const std::vector<PosteriorDraw>& draws) {
  if (draws.empty()) {
    throw std::invalid_argument("naive report requires at least one draw");
  }
  const double weight = 1.0 / static_cast<double>(draws.size());
  std::map<std::string, std::map<std::string, double>> by_aa;  // aa -> dna -> p
  for (const PosteriorDraw& draw : draws) {
    by_aa[translate_dna(draw.naive)][draw.naive] += weight;
  }

  NaiveReport report;
  for (const auto& [aa, variants] : by_aa) {
    NaiveReportEntry entry;
    entry.amino_acids = aa;
    for (const auto& [dna, p] : variants) {
      entry.probability += p;
      entry.dna_variants.emplace_back(dna, p);
    }
    std::sort(entry.dna_variants.begin(), entry.dna_variants.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });
    report.entries.push_back(std::move(entry));
  }
  std::sort(report.entries.begin(), report.entries.end(),
            [](const NaiveReportEntry& a, const NaiveReportEntry& b) {
              if (a.probability != b.probability) {
                return a.probability > b.probability;
              }
              return a.amino_acids < b.amino_acids;
            });

  const std::size_t aa_len = report.entries.front().amino_acids.size();
  report.site_posteriors.assign(aa_len, std::array<double, 22>{});
  for (const auto& entry : report.entries) {
    for (std::size_t j = 0; j < aa_len; ++j) {
      report.site_posteriors[j][static_cast<std::size_t>(
          aa_column(entry.amino_acids[j]))] += entry.probability;
    }
  }
  return report;
}

std::vector<std::array<double, 4>> naive_dna_logo(
    const std::vector<PosteriorDraw>& draws) {
  if (draws.empty()) {
    throw std::invalid_argument("logo requires at least one draw");
  }
  const std::size_t n = draws.front().naive.size();
  std::vector<std::array<double, 4>> logo(n, std::array<double, 4>{});
  const double weight = 1.0 / static_cast<double>(draws.size());
  for (const PosteriorDraw& draw : draws) {
    for (std::size_t j = 0; j < n; ++j) {
      logo[j][static_cast<std::size_t>(base_index(draw.naive[j]))] += weight;
    }
  }
  return logo;
}

void write_naive_report(const NaiveReport& report,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "naive_aa.fasta");
    if (!out) throw std::runtime_error("cannot write naive_aa.fasta");
    int rank = 1;
    for (const auto& entry : report.entries) {
      out << ">naive_rank" << rank << " posterior=" << fmt6(entry.probability)
          << '\n'
          << entry.amino_acids << '\n';
      ++rank;
    }
  }
  {
    std::ofstream out(out_dir / "naive_dna_map.fasta");
    if (!out) throw std::runtime_error("cannot write naive_dna_map.fasta");
    int rank = 1;
    for (const auto& entry : report.entries) {
      out << ">naive_rank" << rank << " posterior=" << fmt6(entry.probability)
          << '\n'
          << entry.amino_acids << '\n';
      int variant = 1;
      for (const auto& [dna, p] : entry.dna_variants) {
        out << ">naive_rank" << rank << ".dna" << variant
            << " posterior=" << fmt6(p) << '\n'
            << dna << '\n';
        ++variant;
      }
      ++rank;
    }
  }
  {
    std::ofstream out(out_dir / "naive_logo.tsv");
    if (!out) throw std::runtime_error("cannot write naive_logo.tsv");
    out << "position";
    for (char c : kAminoAcidColumns) out << '\t' << c;
    out << '\n';
    for (std::size_t j = 0; j < report.site_posteriors.size(); ++j) {
      out << (j + 1);
      for (double p : report.site_posteriors[j]) out << '\t' << fmt6(p);
      out << '\n';
    }
  }
}

LineageSummary lineage_report(const std::vector<PosteriorDraw>& draws,
                              const Msa& msa, const ValidationConfig& config) {
  if (draws.empty()) {
    throw std::invalid_argument("lineage report requires at least one draw");
  }
  const int tip_row = msa.row_of(config.lineage_tip);
  if (tip_row < 0) {
    throw std::invalid_argument("unknown lineage tip '" + config.lineage_tip +
                                "'");
  }

  LineageSummary summary;
  const double weight = 1.0 / static_cast<double>(draws.size());
  std::map<std::pair<int, std::string>, double> node_probs;
  std::map<std::pair<std::string, std::string>, double> edge_probs;
  std::map<std::string, double> ancestral_probs;

  for (const PosteriorDraw& draw : draws) {
    const CladeTree& tree = draw.sample.tree;
    const int tip = tree.find_tip(config.lineage_tip);
    if (tip < 0) {
      throw std::invalid_argument("draw tree lacks lineage tip '" +
                                  config.lineage_tip + "'");
    }
    // Node path from the naive leaf down to the tip.
    std::vector<int> path_nodes;
    for (int u = tip; u != tree.naive_node(); u = tree.node(u).parent) {
      path_nodes.push_back(u);
    }
    path_nodes.push_back(tree.naive_node());
    std::reverse(path_nodes.begin(), path_nodes.end());

    std::vector<std::string> sequences;
    for (int u : path_nodes) {
      std::string seq;
      if (u == tree.naive_node()) {
        seq = draw.naive;
      } else if (tree.node(u).is_tip()) {
        seq = msa.rows[static_cast<std::size_t>(tip_row)];
      } else {
        const std::string signature = tree.clade_signature(u);
        const auto it =
            std::find(draw.internal_signatures.begin(),
                      draw.internal_signatures.end(), signature);
        if (it == draw.internal_signatures.end()) {
          throw std::runtime_error("draw lacks internal states for clade " +
                                   signature);
        }
        seq = draw.internal_states[static_cast<std::size_t>(
            it - draw.internal_signatures.begin())];
      }
      if (!config.dna) seq = translate_dna(seq);
      if (sequences.empty() || sequences.back() != seq) {
        sequences.push_back(std::move(seq));
      }
    }

    // Aggregate nodes per kind, edges per sequence transition, and the
    // set of distinct ancestral sequences for classification.
    std::set<std::pair<int, std::string>> seen_nodes;
    std::set<std::pair<std::string, std::string>> seen_edges;
    std::set<std::string> seen_ancestral;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      const bool is_tip_node = i + 1 == sequences.size() && sequences.size() > 1;
      const int kind = i == 0 ? 0 : (is_tip_node ? 2 : 1);
      seen_nodes.insert({kind, sequences[i]});
      if (!is_tip_node) seen_ancestral.insert(sequences[i]);
      if (i + 1 < sequences.size()) {
        seen_edges.insert({sequences[i], sequences[i + 1]});
      }
    }
    for (const auto& key : seen_nodes) node_probs[key] += weight;
    for (const auto& key : seen_edges) edge_probs[key] += weight;
    for (const auto& seq : seen_ancestral) ancestral_probs[seq] += weight;
    summary.paths.push_back(std::move(sequences));
  }

  // Ranks within each kind by descending probability.
  for (int kind = 0; kind < 3; ++kind) {
    std::vector<std::pair<double, std::string>> ordered;
    for (const auto& [key, p] : node_probs) {
      if (key.first == kind) ordered.emplace_back(p, key.second);
    }
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t r = 0; r < ordered.size(); ++r) {
      summary.nodes.push_back(LineageNode{
          static_cast<LineageNode::Kind>(kind), ordered[r].second,
          ordered[r].first, static_cast<int>(r) + 1});
    }
  }
  auto node_index = [&](const std::string& seq, bool is_first, bool is_last) {
    const LineageNode::Kind kind =
        is_first ? LineageNode::Kind::kNaive
                 : (is_last ? LineageNode::Kind::kTip
                            : LineageNode::Kind::kIntermediate);
    for (std::size_t i = 0; i < summary.nodes.size(); ++i) {
      if (summary.nodes[i].kind == kind && summary.nodes[i].sequence == seq) {
        return static_cast<int>(i);
      }
    }
    throw std::logic_error("lineage node lookup failed");
  };
  for (const auto& [key, p] : edge_probs) {
    // Identify endpoint kinds from any path containing this transition.
    int from = -1;
    int to = -1;
    for (const auto& path : summary.paths) {
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (path[i] == key.first && path[i + 1] == key.second) {
          from = node_index(path[i], i == 0, false);
          to = node_index(path[i + 1], false, i + 2 == path.size());
          break;
        }
      }
      if (from >= 0) break;
    }
    summary.edges.push_back(LineageEdge{
        from, to, p, mutation_list(key.first, key.second)});
  }
  for (const auto& [seq, p] : ancestral_probs) {
    summary.ancestral_probabilities.emplace_back(seq, p);
  }
  return summary;
}

void write_lineage_dot(const LineageSummary& summary, double cutoff,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "digraph lineage {\n  rankdir=LR;\n  node [shape=box];\n";
  std::vector<int> kept(summary.nodes.size(), 0);
  for (std::size_t i = 0; i < summary.nodes.size(); ++i) {
    const LineageNode& node = summary.nodes[i];
    if (node.probability < cutoff) continue;
    kept[i] = 1;
    out << "  n" << i << " [label=\"" << kind_name(node.kind) << " rank="
        << node.rank << " p=" << fmt6(node.probability) << "\"];\n";
  }
  for (const LineageEdge& edge : summary.edges) {
    if (edge.probability < cutoff) continue;
    if (!kept[static_cast<std::size_t>(edge.from)] ||
        !kept[static_cast<std::size_t>(edge.to)]) {
      continue;
    }
    out << "  n" << edge.from << " -> n" << edge.to << " [label=\""
        << edge.mutations << "\" penwidth=" << fmt6(0.5 + 2.5 * edge.probability)
        << "];\n";
  }
  out << "}\n";
}

void write_lineage_table(const LineageSummary& summary,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "kind\trank\tprobability\tsequence\n";
  for (const LineageNode& node : summary.nodes) {
    out << kind_name(node.kind) << '\t' << node.rank << '\t'
        << fmt6(node.probability) << '\t' << node.sequence << '\n';
  }
}

Classification asr_classification(const LineageSummary& summary,
                                  const std::vector<std::string>& truth_lineage,
                                  double rho) {
  std::set<std::string> truth(truth_lineage.begin(), truth_lineage.end());
  std::set<std::string> prediction;
  for (const auto& [seq, p] : summary.ancestral_probabilities) {
    if (p >= rho) prediction.insert(seq);
  }
  int overlap = 0;
  for (const std::string& seq : prediction) overlap += truth.count(seq) > 0;

  Classification out;
  out.prediction_size = static_cast<int>(prediction.size());
  out.truth_size = static_cast<int>(truth.size());
  if (prediction.empty()) {
    out.ppv_defined = false;
    out.ppv = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.ppv = static_cast<double>(overlap) / static_cast<double>(prediction.size());
  }
  out.tpr = truth.empty()
                ? 0.0
                : static_cast<double>(overlap) / static_cast<double>(truth.size());
  return out;
}

std::vector<std::string> true_lineage(const SimulatedFamily& truth,
                                      const std::string& tip_id, bool dna) {
  const CladeTree& tree = truth.tree;
  const int tip = tree.find_tip(tip_id);
  if (tip < 0) {
    throw std::invalid_argument("unknown lineage tip '" + tip_id + "'");
  }
  std::vector<int> path_nodes;
  for (int u = tree.node(tip).parent; u != tree.naive_node();
       u = tree.node(u).parent) {
    path_nodes.push_back(u);
  }
  path_nodes.push_back(tree.naive_node());
  std::reverse(path_nodes.begin(), path_nodes.end());

  std::vector<std::string> out;
  for (int u : path_nodes) {
    std::string seq;
    if (u == tree.naive_node()) {
      seq = truth.naive;
    } else {
      const std::string signature = tree.clade_signature(u);
      const auto it = std::find(truth.internal_signatures.begin(),
                                truth.internal_signatures.end(), signature);
      if (it == truth.internal_signatures.end()) {
        throw std::runtime_error("truth record lacks internal states for " +
                                 signature);
      }
      seq = truth.internal_states[static_cast<std::size_t>(
          it - truth.internal_signatures.begin())];
    }
    if (!dna) seq = translate_dna(seq);
    if (out.empty() || out.back() != seq) out.push_back(std::move(seq));
  }
  return out;
}

std::string farthest_tip(const CladeTree& tree) {
  std::string best_label;
  double best = -1.0;
  for (int t : tree.tip_nodes()) {
    const double d = tree.distance_from_naive(t);
    const std::string& label = tree.node(t).label;
    if (d > best || (d == best && label < best_label)) {
      best = d;
      best_label = label;
    }
  }
  return best_label;
}

std::string map_naive_sequence(const std::vector<PosteriorDraw>& draws) {
  if (draws.empty()) {
    throw std::invalid_argument("no draws to take the point estimate from");
  }
  std::map<std::string, int> counts;
  for (const PosteriorDraw& draw : draws) ++counts[draw.naive];
  const std::string* best = nullptr;
  int best_count = 0;
  for (const auto& [seq, count] : counts) {
    if (count > best_count) {
      best = &seq;
      best_count = count;
    }
  }
  return *best;
}

namespace {

// Rough per-tip divergence for the star baseline: average JC-corrected
// mismatch fraction against the column-consensus sequence.
double star_tip_length(const Msa& msa) {
  const int n = msa.width();
  std::string consensus(static_cast<std::size_t>(n), 'A');
  for (int j = 0; j < n; ++j) {
    std::array<int, 4> counts{};
    for (int s = 0; s < msa.count(); ++s) {
      const int b = base_index(
          msa.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)]);
      if (b >= 0) ++counts[static_cast<std::size_t>(b)];
    }
    int arg = 0;
    for (int i = 1; i < 4; ++i) {
      if (counts[static_cast<std::size_t>(i)] > counts[static_cast<std::size_t>(arg)]) arg = i;
    }
    consensus[static_cast<std::size_t>(j)] = index_base(arg);
  }
  double mean_mismatch = 0.0;
  for (int s = 0; s < msa.count(); ++s) {
    int mism = 0;
    int informative = 0;
    for (int j = 0; j < n; ++j) {
      const char c = msa.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
      if (is_missing(c)) continue;
      ++informative;
      mism += c != consensus[static_cast<std::size_t>(j)];
    }
    if (informative > 0) {
      mean_mismatch += static_cast<double>(mism) / informative;
    }
  }
  mean_mismatch /= std::max(1, msa.count());
  const double capped = std::min(mean_mismatch, 0.70);
  const double jc = -0.75 * std::log(1.0 - 4.0 * capped / 3.0);
  return std::max(jc, 1e-4);
}

GtrParams empirical_star_params(const Msa& msa) {
  std::array<double, 4> counts{1.0, 1.0, 1.0, 1.0};
  for (const std::string& row : msa.rows) {
    for (char c : row) {
      const int b = base_index(c);
      if (b >= 0) counts[static_cast<std::size_t>(b)] += 1.0;
    }
  }
  const double total = counts[0] + counts[1] + counts[2] + counts[3];
  GtrParams params;
  for (std::size_t i = 0; i < 4; ++i) params.base_freqs[i] = counts[i] / total;
  return params;
}

}  // namespace

std::string star_baseline_naive(const Msa& msa, const NaivePrior& prior,
                                int k_rates) {
  if (prior.length() != msa.width()) {
    throw std::invalid_argument("prior length does not match the alignment");
  }
  const GtrParams params = empirical_star_params(msa);
  const RateModel rates = discrete_gamma_rates(1.0, k_rates);
  const EmissionTable em =
      star_tree_emissions(msa, params, rates, star_tip_length(msa));
  std::string out(static_cast<std::size_t>(msa.width()), 'A');
  for (int j = 0; j < msa.width(); ++j) {
    const Eigen::Vector4d marginal = prior.marginal(j);
    int arg = 0;
    double best = kNegInf;
    for (int i = 0; i < 4; ++i) {
      const double lp = (marginal(i) > 0.0 ? std::log(marginal(i)) : kNegInf) +
                        em.log_values(j, i);
      if (lp > best) {
        best = lp;
        arg = i;
      }
    }
    out[static_cast<std::size_t>(j)] = index_base(arg);
  }
  return out;
}

std::string star_naive_estimate(const Msa& msa, const NaivePrior& prior,
                                int k_rates) {
  if (prior.length() != msa.width()) {
    throw std::invalid_argument("prior length does not match the alignment");
  }
  const GtrParams params = empirical_star_params(msa);
  const RateModel rates = discrete_gamma_rates(1.0, k_rates);
  const EmissionTable em =
      star_tree_emissions(msa, params, rates, star_tip_length(msa));
  return viterbi_naive(prior, em).first;
}

}  // namespace phylohmm
