#include "phylohmm/naive_prior.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "phylohmm/alphabet.hpp"
#include "phylohmm/util.hpp"

namespace phylohmm {

namespace {

using nlohmann::json;

Eigen::Vector4d normalized_row(const Eigen::Vector4d& row, int position) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!(row(i) >= 0.0) || !std::isfinite(row(i))) {
      throw std::runtime_error("prior probabilities must be finite and >= 0 "
                               "at position " + std::to_string(position));
    }
    sum += row(i);
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::runtime_error("prior row at position " +
                             std::to_string(position) +
                             " sums to " + std::to_string(sum) +
                             ", expected 1 within 1e-6");
  }
  return row / sum;
}

Eigen::Vector4d parse_vec4(const json& j, int position) {
  if (!j.is_array() || j.size() != 4) {
    throw std::runtime_error("prior vector at position " +
                             std::to_string(position) +
                             " must hold 4 probabilities");
  }
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Eigen::Matrix4d parse_matrix(const json& j, int position) {
  if (!j.is_array() || j.size() != 4) {
    throw std::runtime_error("prior transition at position " +
                             std::to_string(position) + " must be a 4x4 matrix");
  }
  Eigen::Matrix4d m;
  for (int a = 0; a < 4; ++a) {
    m.row(a) = normalized_row(parse_vec4(j[static_cast<std::size_t>(a)], position),
                              position).transpose();
  }
  return m;
}

Eigen::Matrix4d log_matrix(const Eigen::Matrix4d& m) {
  Eigen::Matrix4d out;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      out(a, b) = m(a, b) > 0.0 ? std::log(m(a, b)) : kNegInf;
    }
  }
  return out;
}

}  // namespace

NaivePrior::NaivePrior(Eigen::Vector4d initial,
                       std::vector<Eigen::Matrix4d> transitions)
    : length_(static_cast<int>(transitions.size()) + 1),
      initial_(normalized_row(initial, 1)),
      transitions_(std::move(transitions)) {
  log_transitions_.reserve(transitions_.size());
  for (std::size_t j = 0; j < transitions_.size(); ++j) {
    for (int a = 0; a < 4; ++a) {
      transitions_[j].row(a) =
          normalized_row(transitions_[j].row(a).transpose(),
                         static_cast<int>(j) + 2).transpose();
    }
    log_transitions_.push_back(log_matrix(transitions_[j]));
  }
  for (int i = 0; i < 4; ++i) {
    log_initial_(i) = initial_(i) > 0.0 ? std::log(initial_(i)) : kNegInf;
  }
}

NaivePrior NaivePrior::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open prior file " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed prior file " + path.string() + ": " +
                             e.what());
  }
  if (!doc.contains("length") || !doc.contains("initial")) {
    throw std::runtime_error("prior file must contain 'length' and 'initial'");
  }
  const int length = doc["length"].get<int>();
  if (length < 1) throw std::runtime_error("prior length must be >= 1");
  const Eigen::Vector4d initial = parse_vec4(doc["initial"], 1);

  std::vector<Eigen::Matrix4d> transitions;
  if (length > 1) {
    if (!doc.contains("transitions")) {
      throw std::runtime_error("prior file must contain 'transitions'");
    }
    for (const json& entry : doc["transitions"]) {
      if (entry.is_object()) {
        const int repeat = entry.value("repeat", 1);
        if (repeat < 1) throw std::runtime_error("transition repeat must be >= 1");
        const Eigen::Matrix4d m =
            parse_matrix(entry.at("matrix"),
                         static_cast<int>(transitions.size()) + 2);
        for (int r = 0; r < repeat; ++r) transitions.push_back(m);
      } else {
        transitions.push_back(
            parse_matrix(entry, static_cast<int>(transitions.size()) + 2));
      }
    }
  }
  if (static_cast<int>(transitions.size()) != length - 1) {
    throw std::runtime_error(
        "prior file declares length " + std::to_string(length) + " but has " +
        std::to_string(transitions.size()) + " transition matrices; expected " +
        std::to_string(length - 1));
  }
  return NaivePrior(initial, std::move(transitions));
}

NaivePrior NaivePrior::uniform(int length) {
  return iid({0.25, 0.25, 0.25, 0.25}, length);
}

NaivePrior NaivePrior::iid(const std::array<double, 4>& probs, int length) {
  if (length < 1) throw std::invalid_argument("prior length must be >= 1");
  Eigen::Vector4d initial;
  for (int i = 0; i < 4; ++i) initial(i) = probs[static_cast<std::size_t>(i)];
  Eigen::Matrix4d m;
  for (int a = 0; a < 4; ++a) m.row(a) = initial.transpose();
  return NaivePrior(initial, std::vector<Eigen::Matrix4d>(
                                 static_cast<std::size_t>(length - 1), m));
}

Eigen::Vector4d NaivePrior::marginal(int position) const {
  if (position < 0 || position >= length_) {
    throw std::out_of_range("prior position out of range");
  }
  Eigen::Vector4d p = initial_;
  for (int j = 0; j < position; ++j) {
    p = transitions_[static_cast<std::size_t>(j)].transpose() * p;
  }
  return p;
}

double NaivePrior::log_prob(const std::string& sequence) const {
  if (static_cast<int>(sequence.size()) != length_) {
    throw std::invalid_argument("sequence length does not match the prior");
  }
  int prev = base_index(sequence[0]);
  if (prev < 0) {
    throw std::invalid_argument("prior evaluation requires unambiguous bases");
  }
  double lp = log_initial_(prev);
  for (int j = 1; j < length_; ++j) {
    const int cur = base_index(sequence[static_cast<std::size_t>(j)]);
    if (cur < 0) {
      throw std::invalid_argument("prior evaluation requires unambiguous bases");
    }
    lp += log_transitions_[static_cast<std::size_t>(j) - 1](prev, cur);
    prev = cur;
  }
  return lp;
}

std::string NaivePrior::sample(std::mt19937_64& rng) const {
  std::string out(static_cast<std::size_t>(length_), 'A');
  std::array<double, 4> w;
  for (int i = 0; i < 4; ++i) w[static_cast<std::size_t>(i)] = initial_(i);
  int state = sample_categorical(w, rng);
  out[0] = index_base(state);
  for (int j = 1; j < length_; ++j) {
    const Eigen::Matrix4d& t = transitions_[static_cast<std::size_t>(j) - 1];
    for (int i = 0; i < 4; ++i) w[static_cast<std::size_t>(i)] = t(state, i);
    state = sample_categorical(w, rng);
    out[static_cast<std::size_t>(j)] = index_base(state);
  }
  return out;
}

}  // namespace phylohmm
