#include "phylohmm/msa.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "phylohmm/alphabet.hpp"

namespace phylohmm {

int Msa::row_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<int>(i);
  }
  return -1;
}

void Msa::add(std::string id, std::string seq) {
  ids.push_back(std::move(id));
  rows.push_back(std::move(seq));
}

void Msa::validate() const {
  if (ids.size() != rows.size()) {
    throw std::runtime_error("MSA id/row count mismatch");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw std::runtime_error("MSA contains an empty identifier");
    if (!seen.insert(id).second) {
      throw std::runtime_error("duplicate MSA identifier '" + id + "'");
    }
  }
  const std::size_t n = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != n) {
      throw std::runtime_error("MSA row '" + ids[i] +
                               "' has mismatched length");
    }
    for (char c : rows[i]) base_index(c);  // throws on a bad character
  }
  if (region) {
    if (region->first < 1 || region->second > static_cast<int>(n) ||
        region->first > region->second) {
      throw std::runtime_error("MSA region interval out of bounds");
    }
  }
}

Msa Msa::from_fasta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open FASTA file " + path.string());
  }
  Msa msa;
  std::string line;
  std::string id;
  std::string seq;
  auto flush = [&]() {
    if (!id.empty()) msa.add(id, seq);
    id.clear();
    seq.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
      // The identifier is the first whitespace-delimited token.
      std::size_t end = line.find_first_of(" \t", 1);
      id = line.substr(1, end == std::string::npos ? std::string::npos : end - 1);
      if (id.empty()) throw std::runtime_error("empty FASTA header in " + path.string());
    } else {
      if (id.empty()) {
        throw std::runtime_error("FASTA sequence data before any header in " +
                                 path.string());
      }
      for (char c : line) {
        seq.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      }
    }
  }
  flush();
  msa.validate();
  return msa;
}

void Msa::to_fasta(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write FASTA file " + path.string());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << '>' << ids[i] << '\n' << rows[i] << '\n';
  }
}

}  // namespace phylohmm
