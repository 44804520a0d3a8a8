#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mfmclust/core_data.hpp"

namespace mfmclust {

/// Raised by parse_newick; carries the character offset of the problem.
class NewickError : public InputError {
 public:
  NewickError(const std::string& what, std::size_t offset)
      : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct TreeNode {
  int parent = -1;
  std::vector<int> children;
  std::string label;
};

/// Rooted topology. Every internal node has at least two children and every
/// leaf carries a unique label. Internal nodes are numbered 0..|J|-1 in
/// preorder; that numbering is what a node-level selection vector indexes.
class PhyloTree {
 public:
  PhyloTree() = default;
  PhyloTree(std::vector<TreeNode> nodes, int root);

  int root() const { return root_; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  bool is_leaf(int id) const { return node(id).children.empty(); }

  /// Internal node ids in preorder.
  const std::vector<int>& internal_nodes() const { return internal_; }
  /// Leaf ids in preorder.
  const std::vector<int>& leaves() const { return leaves_; }
  int n_internal() const { return static_cast<int>(internal_.size()); }

  std::vector<std::string> leaf_labels() const;

  /// Stable key for a node: "root", then "/k" per step to the k-th child.
  std::string node_path(int id) const;

 private:
  std::vector<TreeNode> nodes_;
  int root_ = -1;
  std::vector<int> internal_;
  std::vector<int> leaves_;
};

/// Parses a Newick string terminated by ';'. Branch lengths and comments are
/// accepted and dropped; single-child internal nodes are collapsed.
PhyloTree parse_newick(std::string_view text);
PhyloTree read_newick(const std::string& path);

/// Topology-only Newick, leaves and internal labels included.
std::string to_newick(const PhyloTree& tree);

/// Root with one leaf per name.
PhyloTree star_tree(const std::vector<std::string>& leaf_names);

/// Per-sample branch counts at every internal node. Branches of internal node
/// p (preorder position) occupy columns offset(p) .. offset(p)+arity(p)-1 of
/// `branch`, in child order.
struct TreeCounts {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> branch;
  std::vector<int> offset;
  std::vector<int> arity;

  Eigen::Index n_samples() const { return branch.rows(); }
  int n_internal() const { return static_cast<int>(offset.size()); }
  std::int64_t node_total(Eigen::Index sample, int p) const {
    return branch.row(sample).segment(offset[static_cast<std::size_t>(p)], arity[static_cast<std::size_t>(p)]).sum();
  }
};

/// Sums leaf counts up the tree. Leaf labels must match the matrix's feature
/// names one-to-one (in any order).
TreeCounts propagate_tree_counts(const CountMatrix& m, const PhyloTree& tree);

}  // namespace mfmclust
