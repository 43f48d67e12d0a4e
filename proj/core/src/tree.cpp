#include "phylohmm/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace phylohmm {

namespace {

// n-ary node set produced by the Newick grammar, before re-orientation.
struct RawNode {
  int parent = -1;
  std::vector<int> children;
  double length = 0.0;
  bool has_length = false;
  std::string label;
};

class NewickParser {
 public:
  explicit NewickParser(const std::string& text) : text_(text) {}

  std::vector<RawNode> parse() {
    const int root = parse_subtree();
    // A length on the outermost node is meaningless for an unrooted tree.
    if (peek() == ':') {
      advance();
      parse_number();
    }
    expect(';');
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    (void)root;
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("Newick syntax error at line " +
                             std::to_string(line_) + " column " +
                             std::to_string(col_) + ": " + what);
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void advance() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 0;
    }
    ++pos_;
    ++col_;
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      advance_raw();
    }
  }

  void advance_raw() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 0;
    }
    ++pos_;
    ++col_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  static bool is_label_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '-' || c == '|' || c == '/';
  }

  std::string parse_label() {
    skip_space();
    std::string label;
    while (pos_ < text_.size() && is_label_char(text_[pos_])) {
      label.push_back(text_[pos_]);
      advance_raw();
    }
    return label;
  }

  double parse_number() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.' || text_[pos_] == '-' || text_[pos_] == '+' ||
            text_[pos_] == 'e' || text_[pos_] == 'E')) {
      advance_raw();
    }
    if (start == pos_) fail("expected a branch length");
    try {
      return std::stod(text_.substr(start, pos_ - start));
    } catch (const std::exception&) {
      fail("malformed branch length '" + text_.substr(start, pos_ - start) + "'");
    }
  }

  int parse_subtree() {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (peek() == '(') {
      advance();
      while (true) {
        const int child = parse_subtree();
        nodes_[static_cast<std::size_t>(child)].parent = id;
        nodes_[static_cast<std::size_t>(id)].children.push_back(child);
        if (peek() == ',') {
          advance();
          continue;
        }
        break;
      }
      expect(')');
      nodes_[static_cast<std::size_t>(id)].label = parse_label();  // internal labels ignored later
    } else {
      std::string label = parse_label();
      if (label.empty()) fail("expected a leaf label");
      nodes_[static_cast<std::size_t>(id)].label = std::move(label);
    }
    if (peek() == ':') {
      advance();
      nodes_[static_cast<std::size_t>(id)].length = parse_number();
      nodes_[static_cast<std::size_t>(id)].has_length = true;
    }
    return id;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<RawNode> nodes_;
};

std::string format_length(double t) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", t);
  return buf;
}

}  // namespace

CladeTree::CladeTree(std::vector<TreeNode> nodes, int naive)
    : nodes_(std::move(nodes)), naive_(naive) {
  rebuild_orders();
  validate();
}

CladeTree CladeTree::parse_newick(const std::string& text,
                                  const std::string& naive_id) {
  NewickParser parser(text);
  std::vector<RawNode> raw = parser.parse();

  int naive_raw = -1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].children.empty() && raw[i].label == naive_id) {
      naive_raw = static_cast<int>(i);
      break;
    }
  }
  if (naive_raw < 0) {
    throw std::runtime_error("Newick tree has no leaf labeled '" + naive_id +
                             "' (the naive identifier)");
  }

  // Undirected adjacency; each raw edge carries the child's length.
  const int n_raw = static_cast<int>(raw.size());
  std::vector<std::vector<std::pair<int, double>>> adjacent(
      static_cast<std::size_t>(n_raw));
  for (int i = 0; i < n_raw; ++i) {
    const RawNode& node = raw[static_cast<std::size_t>(i)];
    if (node.parent < 0) continue;
    if (!node.has_length) {
      throw std::runtime_error("Newick node '" + node.label +
                               "' is missing a branch length");
    }
    if (!(node.length >= 0.0) || !std::isfinite(node.length)) {
      throw std::runtime_error("Newick branch lengths must be finite and >= 0");
    }
    adjacent[static_cast<std::size_t>(i)].emplace_back(node.parent, node.length);
    adjacent[static_cast<std::size_t>(node.parent)].emplace_back(i, node.length);
  }

  // Orient away from the naive leaf.
  std::vector<TreeNode> nodes(static_cast<std::size_t>(n_raw));
  std::vector<int> stack{naive_raw};
  std::vector<char> seen(static_cast<std::size_t>(n_raw), 0);
  seen[static_cast<std::size_t>(naive_raw)] = 1;
  nodes[static_cast<std::size_t>(naive_raw)].label =
      raw[static_cast<std::size_t>(naive_raw)].label;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& [v, len] : adjacent[static_cast<std::size_t>(u)]) {
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      TreeNode& child = nodes[static_cast<std::size_t>(v)];
      child.parent = u;
      child.branch_length = len;
      if (raw[static_cast<std::size_t>(v)].children.empty()) {
        child.label = raw[static_cast<std::size_t>(v)].label;
      }
      TreeNode& parent = nodes[static_cast<std::size_t>(u)];
      if (parent.children[0] < 0) {
        parent.children[0] = v;
      } else if (parent.children[1] < 0) {
        parent.children[1] = v;
      } else {
        throw std::runtime_error(
            "polytomy in Newick tree at node '" +
            raw[static_cast<std::size_t>(u)].label +
            "'; only the implicit trifurcation at the naive attachment is "
            "supported");
      }
      stack.push_back(v);
    }
  }
  for (int i = 0; i < n_raw; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw std::runtime_error("Newick tree is disconnected");
    }
  }

  // Splice out degree-two join nodes (e.g. the root of a rooted Newick).
  std::vector<char> removed(static_cast<std::size_t>(n_raw), 0);
  for (int i = 0; i < n_raw; ++i) {
    TreeNode& node = nodes[static_cast<std::size_t>(i)];
    if (i == naive_raw || node.child_count() != 1) continue;
    const int child = node.children[0];
    TreeNode& c = nodes[static_cast<std::size_t>(child)];
    c.branch_length += node.branch_length;
    c.parent = node.parent;
    TreeNode& p = nodes[static_cast<std::size_t>(node.parent)];
    for (int& slot : p.children) {
      if (slot == i) slot = child;
    }
    removed[static_cast<std::size_t>(i)] = 1;
  }

  // Compact indices.
  std::vector<int> remap(static_cast<std::size_t>(n_raw), -1);
  std::vector<TreeNode> compact;
  compact.reserve(static_cast<std::size_t>(n_raw));
  for (int i = 0; i < n_raw; ++i) {
    if (removed[static_cast<std::size_t>(i)]) continue;
    remap[static_cast<std::size_t>(i)] = static_cast<int>(compact.size());
    compact.push_back(nodes[static_cast<std::size_t>(i)]);
  }
  for (TreeNode& node : compact) {
    if (node.parent >= 0) node.parent = remap[static_cast<std::size_t>(node.parent)];
    for (int& c : node.children) {
      if (c >= 0) c = remap[static_cast<std::size_t>(c)];
    }
  }
  return CladeTree(std::move(compact), remap[static_cast<std::size_t>(naive_raw)]);
}

void CladeTree::rebuild_orders() {
  postorder_.clear();
  preorder_.clear();
  tips_.clear();
  preorder_.reserve(nodes_.size());
  std::vector<int> stack{naive_};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    preorder_.push_back(u);
    const TreeNode& node = nodes_[static_cast<std::size_t>(u)];
    if (node.is_tip() && u != naive_) tips_.push_back(u);
    for (int c : node.children) {
      if (c >= 0) stack.push_back(c);
    }
  }
  postorder_.assign(preorder_.rbegin(), preorder_.rend());
  std::sort(tips_.begin(), tips_.end(), [this](int a, int b) {
    return nodes_[static_cast<std::size_t>(a)].label <
           nodes_[static_cast<std::size_t>(b)].label;
  });
}

void CladeTree::validate() const {
  if (naive_ < 0 || naive_ >= node_count()) {
    throw std::runtime_error("naive node index out of range");
  }
  const TreeNode& naive = nodes_[static_cast<std::size_t>(naive_)];
  if (naive.parent != -1 || naive.child_count() != 1) {
    throw std::runtime_error("naive leaf must be the traversal root with one child");
  }
  if (naive.label.empty()) {
    throw std::runtime_error("naive leaf must carry its identifier");
  }
  if (preorder_.size() != nodes_.size()) {
    throw std::runtime_error("tree is not connected");
  }
  std::unordered_set<std::string> labels;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (static_cast<int>(i) != naive_) {
      if (node.parent < 0 || node.parent >= node_count()) {
        throw std::runtime_error("node has an invalid parent");
      }
      if (!(node.branch_length >= 0.0) || !std::isfinite(node.branch_length)) {
        throw std::runtime_error("branch lengths must be finite and >= 0");
      }
      if (node.child_count() == 1) {
        throw std::runtime_error("internal nodes must be binary");
      }
      if (node.is_tip()) {
        if (node.label.empty()) throw std::runtime_error("unlabeled tip");
        if (!labels.insert(node.label).second) {
          throw std::runtime_error("duplicate tip label '" + node.label + "'");
        }
      }
    }
  }
  if (labels.count(naive.label) != 0) {
    throw std::runtime_error("a tip shares the naive identifier '" +
                             naive.label + "'");
  }
  if (tips_.empty()) {
    throw std::runtime_error("tree has no observed tips");
  }
}

double CladeTree::root_branch_length() const {
  return nodes_[static_cast<std::size_t>(attachment_node())].branch_length;
}

void CladeTree::set_root_branch_length(double t0) {
  set_branch_length(attachment_node(), t0);
}

void CladeTree::set_branch_length(int node, double t) {
  if (node == naive_) throw std::runtime_error("the naive leaf has no branch");
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("branch length must be finite and >= 0");
  }
  nodes_[static_cast<std::size_t>(node)].branch_length = t;
}

double CladeTree::total_branch_length() const {
  double total = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (static_cast<int>(i) != naive_) total += nodes_[i].branch_length;
  }
  return total;
}

std::vector<int> CladeTree::internal_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (static_cast<int>(i) != naive_ && !nodes_[i].is_tip()) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

int CladeTree::find_tip(const std::string& label) const {
  for (int t : tips_) {
    if (nodes_[static_cast<std::size_t>(t)].label == label) return t;
  }
  return -1;
}

double CladeTree::distance_from_naive(int node) const {
  double d = 0.0;
  for (int u = node; u != naive_; u = nodes_[static_cast<std::size_t>(u)].parent) {
    d += nodes_[static_cast<std::size_t>(u)].branch_length;
  }
  return d;
}

double CladeTree::imbalance() const {
  double mean = 0.0;
  std::vector<double> dist;
  dist.reserve(tips_.size());
  for (int t : tips_) {
    dist.push_back(distance_from_naive(t));
    mean += dist.back();
  }
  mean /= static_cast<double>(dist.size());
  double var = 0.0;
  for (double d : dist) var += (d - mean) * (d - mean);
  var /= static_cast<double>(dist.size());
  return std::sqrt(var);
}

std::string CladeTree::clade_signature(int node) const {
  std::vector<std::string> labels;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[static_cast<std::size_t>(u)];
    if (n.is_tip()) {
      labels.push_back(n.label);
      continue;
    }
    for (int c : n.children) {
      if (c >= 0) stack.push_back(c);
    }
  }
  std::sort(labels.begin(), labels.end());
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += labels[i];
  }
  return out;
}

std::vector<int> CladeTree::internal_edges() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_tip() || static_cast<int>(i) == naive_) continue;
    if (node.parent != naive_) out.push_back(static_cast<int>(i));
  }
  return out;
}

void CladeTree::apply_nni(int v, int side) {
  const TreeNode& vnode = nodes_[static_cast<std::size_t>(v)];
  if (vnode.is_tip() || vnode.parent < 0 || vnode.parent == naive_) {
    throw std::invalid_argument("NNI requires an internal edge");
  }
  const int u = vnode.parent;
  TreeNode& unode = nodes_[static_cast<std::size_t>(u)];
  const int sibling_slot = unode.children[0] == v ? 1 : 0;
  const int s = unode.children[sibling_slot];
  const int a = nodes_[static_cast<std::size_t>(v)].children[side];
  if (s < 0 || a < 0) throw std::invalid_argument("malformed NNI move");
  unode.children[sibling_slot] = a;
  nodes_[static_cast<std::size_t>(v)].children[side] = s;
  nodes_[static_cast<std::size_t>(a)].parent = u;
  nodes_[static_cast<std::size_t>(s)].parent = v;
  rebuild_orders();
}

void CladeTree::write_subtree(int node, std::string& out) const {
  const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
  if (n.is_tip()) {
    out += n.label;
  } else {
    out.push_back('(');
    write_subtree(n.children[0], out);
    out.push_back(',');
    write_subtree(n.children[1], out);
    out.push_back(')');
  }
  out.push_back(':');
  out += format_length(n.branch_length);
}

std::string CladeTree::to_newick() const {
  const int att = attachment_node();
  const TreeNode& a = nodes_[static_cast<std::size_t>(att)];
  std::string out;
  out.push_back('(');
  if (a.is_tip()) {
    // Single-sequence family: one edge between the tip and the naive leaf.
    out += a.label;
    out += ":";
    out += format_length(a.branch_length);
    out += ",";
    out += naive_id();
    out += ":0";
  } else {
    write_subtree(a.children[0], out);
    out.push_back(',');
    write_subtree(a.children[1], out);
    out.push_back(',');
    out += naive_id();
    out.push_back(':');
    out += format_length(a.branch_length);
  }
  out += ");";
  return out;
}

}  // namespace phylohmm
