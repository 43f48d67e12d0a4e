#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phylohmm {

// Aligned clonal DNA sequences over {A,C,G,T,N,-}; rows of equal width with
// unique identifiers. `region` optionally marks a 1-based inclusive column
// interval of interest (e.g. CDR3).
struct Msa {
  std::vector<std::string> ids;
  std::vector<std::string> rows;
  std::optional<std::pair<int, int>> region;

  int count() const { return static_cast<int>(rows.size()); }
  int width() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }

  // Index of the row with the given identifier; -1 if absent.
  int row_of(const std::string& id) const;

  void add(std::string id, std::string seq);
  void validate() const;

  static Msa from_fasta(const std::filesystem::path& path);
  void to_fasta(const std::filesystem::path& path) const;
};

}  // namespace phylohmm
