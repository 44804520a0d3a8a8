#include "mfmclust/phylo_tree.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace mfmclust {

PhyloTree::PhyloTree(std::vector<TreeNode> nodes, int root) : nodes_(std::move(nodes)), root_(root) {
  if (root_ < 0 || root_ >= n_nodes()) throw InputError("tree root out of range");
  std::vector<int> stack{root_};
  std::vector<char> visited(nodes_.size(), 0);
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (visited[static_cast<std::size_t>(id)]) throw InputError("tree contains a cycle");
    visited[static_cast<std::size_t>(id)] = 1;
    const auto& n = node(id);
    if (n.children.empty()) {
      leaves_.push_back(id);
      continue;
    }
    if (n.children.size() < 2) throw InputError("internal node with a single child");
    internal_.push_back(id);
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      if (node(*it).parent != id) throw InputError("inconsistent parent link in tree");
      stack.push_back(*it);
    }
  }
  if (std::count(visited.begin(), visited.end(), 0) != 0) throw InputError("tree has unreachable nodes");
  if (leaves_.size() < 2) throw InputError("tree needs at least two leaves");
}

std::vector<std::string> PhyloTree::leaf_labels() const {
  std::vector<std::string> out;
  out.reserve(leaves_.size());
  for (int id : leaves_) out.push_back(node(id).label);
  return out;
}

std::string PhyloTree::node_path(int id) const {
  std::vector<int> steps;
  for (int cur = id; cur != root_;) {
    const int parent = node(cur).parent;
    const auto& siblings = node(parent).children;
    steps.push_back(static_cast<int>(std::find(siblings.begin(), siblings.end(), cur) - siblings.begin()));
    cur = parent;
  }
  std::string path = "root";
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) path += "/" + std::to_string(*it);
  return path;
}

namespace {

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : text_(text) {}

  PhyloTree parse() {
    skip_space();
    if (pos_ >= text_.size()) throw NewickError("empty tree", pos_);
    const int root = parse_subtree();
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ')') throw NewickError("unbalanced ')'", pos_);
    if (pos_ >= text_.size() || text_[pos_] != ';') throw NewickError("expected ';'", pos_);
    ++pos_;
    skip_space();
    if (pos_ != text_.size()) throw NewickError("unexpected text after ';'", pos_);
    return collapse(root);
  }

 private:
  static bool is_delimiter(char c) {
    return c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' || c == ']' || c == ' ' ||
           c == '\t' || c == '\n' || c == '\r';
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '[') {
        const auto close = text_.find(']', pos_);
        if (close == std::string_view::npos) throw NewickError("unterminated comment", pos_);
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  std::string parse_label() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      const std::size_t start = pos_++;
      std::string out;
      while (true) {
        if (pos_ >= text_.size()) throw NewickError("unterminated quoted label", start);
        if (text_[pos_] == '\'') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
            out += '\'';
            pos_ += 2;
            continue;
          }
          ++pos_;
          return out;
        }
        out += text_[pos_++];
      }
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_length() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
      if (pos_ == start) throw NewickError("missing branch length after ':'", start);
      const std::string num(text_.substr(start, pos_ - start));
      char* end = nullptr;
      std::strtod(num.c_str(), &end);
      if (end != num.c_str() + num.size()) throw NewickError("malformed branch length '" + num + "'", start);
    }
  }

  int parse_subtree() {
    skip_space();
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const std::size_t open = pos_++;
      while (true) {
        const int child = parse_subtree();
        nodes_[static_cast<std::size_t>(child)].parent = id;
        nodes_[static_cast<std::size_t>(id)].children.push_back(child);
        skip_space();
        if (pos_ >= text_.size()) throw NewickError("unbalanced '(' opened", open);
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        throw NewickError(std::string("unexpected '") + text_[pos_] + "'", pos_);
      }
      nodes_[static_cast<std::size_t>(id)].label = parse_label();
    } else {
      const std::size_t at = pos_;
      auto label = parse_label();
      if (label.empty()) throw NewickError("leaf without a label", at);
      if (!leaf_labels_.insert(label).second) throw NewickError("duplicate leaf label '" + label + "'", at);
      nodes_[static_cast<std::size_t>(id)].label = std::move(label);
    }
    skip_length();
    return id;
  }

  // Rebuilds the tree without single-child internal nodes.
  PhyloTree collapse(int raw_root) {
    std::vector<TreeNode> out;
    auto skip_unary = [&](int id) {
      while (nodes_[static_cast<std::size_t>(id)].children.size() == 1)
        id = nodes_[static_cast<std::size_t>(id)].children.front();
      return id;
    };
    struct Item {
      int raw;
      int parent;
    };
    std::vector<Item> stack{{skip_unary(raw_root), -1}};
    while (!stack.empty()) {
      const Item item = stack.back();
      stack.pop_back();
      const int id = static_cast<int>(out.size());
      TreeNode n;
      n.parent = item.parent;
      n.label = nodes_[static_cast<std::size_t>(item.raw)].label;
      out.push_back(std::move(n));
      if (item.parent >= 0) out[static_cast<std::size_t>(item.parent)].children.push_back(id);
      const auto& kids = nodes_[static_cast<std::size_t>(item.raw)].children;
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back({skip_unary(*it), id});
    }
    if (out.front().children.empty()) throw NewickError("tree needs at least two leaves", 0);
    // Children were pushed in reverse and popped in order, so child order is preserved.
    return PhyloTree(std::move(out), 0);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<TreeNode> nodes_;
  std::unordered_set<std::string> leaf_labels_;
};

std::string quote_label(const std::string& label) {
  if (label.empty()) return label;
  bool plain = true;
  for (char c : label)
    if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' || c == ']' || c == '\'' ||
        c == '\t' || c == '\n' || c == ' ')
      plain = false;
  if (plain) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

}  // namespace

PhyloTree parse_newick(std::string_view text) { return NewickParser(text).parse(); }

PhyloTree read_newick(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open tree file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_newick(buf.str());
}

std::string to_newick(const PhyloTree& tree) {
  std::string out;
  // Iterative to cope with deep caterpillar trees.
  struct Frame {
    int id;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    auto& f = stack.back();
    const auto& n = tree.node(f.id);
    if (n.children.empty()) {
      out += quote_label(n.label);
      stack.pop_back();
      continue;
    }
    if (f.next_child == 0) out += '(';
    if (f.next_child < n.children.size()) {
      if (f.next_child > 0) out += ',';
      const int child = n.children[f.next_child++];
      stack.push_back({child, 0});
      continue;
    }
    out += ')';
    out += quote_label(n.label);
    stack.pop_back();
  }
  return out + ";";
}

PhyloTree star_tree(const std::vector<std::string>& leaf_names) {
  std::vector<TreeNode> nodes(leaf_names.size() + 1);
  for (std::size_t k = 0; k < leaf_names.size(); ++k) {
    nodes[k + 1].parent = 0;
    nodes[k + 1].label = leaf_names[k];
    nodes[0].children.push_back(static_cast<int>(k + 1));
  }
  return PhyloTree(std::move(nodes), 0);
}

TreeCounts propagate_tree_counts(const CountMatrix& m, const PhyloTree& tree) {
  std::unordered_map<std::string, Eigen::Index> column;
  for (std::size_t j = 0; j < m.feature_names().size(); ++j)
    column.emplace(m.feature_names()[j], static_cast<Eigen::Index>(j));

  std::vector<std::string> unmatched;
  std::unordered_set<std::string> seen;
  for (int leaf : tree.leaves()) {
    const auto& label = tree.node(leaf).label;
    if (!column.count(label)) unmatched.push_back("leaf '" + label + "' has no count column");
    seen.insert(label);
  }
  for (const auto& f : m.feature_names())
    if (!seen.count(f)) unmatched.push_back("feature '" + f + "' is not a tree leaf");
  if (!unmatched.empty()) {
    std::string msg = "tree leaves do not match count table features: ";
    for (std::size_t k = 0; k < unmatched.size(); ++k) msg += (k ? "; " : "") + unmatched[k];
    throw InputError(msg);
  }

  using Mat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
  Mat subtree = Mat::Zero(m.n_samples(), tree.n_nodes());
  for (int leaf : tree.leaves()) subtree.col(leaf) = m.counts().col(column.at(tree.node(leaf).label));
  const auto& internal = tree.internal_nodes();
  for (auto it = internal.rbegin(); it != internal.rend(); ++it)
    for (int child : tree.node(*it).children) subtree.col(*it) += subtree.col(child);

  TreeCounts tc;
  int n_branches = 0;
  for (int id : internal) {
    tc.offset.push_back(n_branches);
    tc.arity.push_back(static_cast<int>(tree.node(id).children.size()));
    n_branches += tc.arity.back();
  }
  tc.branch.resize(m.n_samples(), n_branches);
  for (std::size_t p = 0; p < internal.size(); ++p) {
    const auto& kids = tree.node(internal[p]).children;
    for (std::size_t k = 0; k < kids.size(); ++k) tc.branch.col(tc.offset[p] + static_cast<int>(k)) = subtree.col(kids[k]);
  }
  return tc;
}

}  // namespace mfmclust
