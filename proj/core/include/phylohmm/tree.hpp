#pragma once

#include <array>
#include <string>
#include <vector>

namespace phylohmm {

// One node of a CladeTree. `branch_length` is the length of the edge to the
// parent; the naive leaf (the traversal root) has none.
struct TreeNode {
  int parent = -1;
  std::array<int, 2> children{-1, -1};
  double branch_length = 0.0;
  std::string label;  // non-empty for the naive leaf and observed tips

  int child_count() const {
    return (children[0] >= 0 ? 1 : 0) + (children[1] >= 0 ? 1 : 0);
  }
  bool is_tip() const { return children[0] < 0 && children[1] < 0; }
};

// Unrooted binary clonal tree with a designated naive leaf, stored oriented
// away from that leaf: the naive leaf is the traversal root with a single
// child (the attachment node) whose branch length is the root branch t0.
//
// With m observed tips the tree has m-1 internal nodes and 2m-1 branches.
// A value type: copies are independent; the mutating operations exist for
// proposal moves and simulation, which work on private copies.
class CladeTree {
 public:
  // Empty placeholder; every operation requires a parsed or built tree.
  CladeTree() = default;

  // Builds from an explicit node set; `naive` must be a leaf with parent -1
  // and exactly one child. Validates all structural invariants.
  CladeTree(std::vector<TreeNode> nodes, int naive);

  // Parses a Newick string; the tree is re-oriented so the leaf labeled
  // `naive_id` becomes the traversal root. Degree-two join nodes introduced
  // by rooted Newick conventions are suppressed (their branch lengths add).
  static CladeTree parse_newick(const std::string& text,
                                const std::string& naive_id);

  // Serializes in the unrooted convention rooted at the attachment node,
  // with the naive leaf as the final child.
  std::string to_newick() const;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int tip_count() const { return static_cast<int>(tips_.size()); }
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int naive_node() const { return naive_; }
  int attachment_node() const { return nodes_[static_cast<std::size_t>(naive_)].children[0]; }
  const std::string& naive_id() const { return nodes_[static_cast<std::size_t>(naive_)].label; }

  double root_branch_length() const;
  void set_root_branch_length(double t0);
  double branch_length(int node) const { return nodes_[static_cast<std::size_t>(node)].branch_length; }
  void set_branch_length(int node, double t);
  double total_branch_length() const;

  // Children-before-parents order ending at the naive leaf, and its reverse.
  const std::vector<int>& postorder() const { return postorder_; }
  const std::vector<int>& preorder() const { return preorder_; }
  const std::vector<int>& tip_nodes() const { return tips_; }
  std::vector<int> internal_nodes() const;  // excludes tips and the naive leaf

  int find_tip(const std::string& label) const;  // -1 if absent

  // Sum of branch lengths on the path from the naive leaf to `node`.
  double distance_from_naive(int node) const;

  // Population standard deviation of the naive-to-tip path lengths.
  double imbalance() const;

  // Sorted comma-joined tip labels below an internal node; stable across
  // draws with different topologies, used to key serialized internal states.
  std::string clade_signature(int node) const;

  // Nodes v such that the edge (parent(v), v) joins two internal nodes;
  // these are the edges eligible for nearest-neighbor interchange.
  std::vector<int> internal_edges() const;

  // Swaps the sibling of `v` with child `side` (0 or 1) of `v`, the
  // interchange across the edge (parent(v), v). Branch lengths travel with
  // their subtrees.
  void apply_nni(int v, int side);

 private:
  void rebuild_orders();
  void validate() const;
  void write_subtree(int node, std::string& out) const;

  std::vector<TreeNode> nodes_;
  int naive_ = -1;
  std::vector<int> postorder_;
  std::vector<int> preorder_;
  std::vector<int> tips_;
};

}  // namespace phylohmm
