#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "staging/dialog.hpp"
#include "staging/token.hpp"

namespace staging {

class SiteError : public std::runtime_error {
public:
  enum class Kind {
    Malformed,
    DuplicateLabel,
    LeafWithoutPage,
    PageOnInternalNode,
    Cycle,
    DepthCap,
    RepeatedLabelOnPath,
    IndistinguishableLeaves,
    UnknownToken,
  };
  SiteError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// A page or link in a hierarchical site. Leaves carry a page; internal nodes
/// carry children. The label is absent only on leaves whose label has been
/// consumed by pruning.
struct SiteNode {
  std::optional<Token> label;
  std::optional<std::string> page;
  std::optional<Stager> stager;
  std::vector<SiteNode> children;

  bool is_leaf() const noexcept { return children.empty(); }

  friend bool operator==(const SiteNode&, const SiteNode&) = default;
};

/// One root-to-leaf path: the labels met below the root, in order.
struct SitePath {
  std::vector<Token> labels;
  std::string page;

  std::set<Token> label_set() const { return {labels.begin(), labels.end()}; }
  friend bool operator==(const SitePath&, const SitePath&) = default;
  friend auto operator<=>(const SitePath&, const SitePath&) = default;
};

/// A validated site hierarchy together with its token universe.
///
/// The universe is the set of labels that can be supplied as input: every
/// non-root label, plus the root's own label when the root is itself the only
/// page. The root label otherwise names the site.
class SiteTree {
public:
  SiteTree(std::string name, SiteNode root) : name_(std::move(name)), root_(std::move(root)) {
    validate();
  }

  const std::string& name() const noexcept { return name_; }
  const SiteNode& root() const noexcept { return root_; }
  const std::set<Token>& token_universe() const noexcept { return universe_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t leaf_count() const noexcept { return leaves_; }

  bool in_universe(const Token& t) const { return universe_.contains(t); }

  std::vector<SitePath> paths() const {
    std::vector<SitePath> out;
    std::vector<Token> stack;
    if (root_.is_leaf()) {
      if (root_.label) stack.push_back(*root_.label);
      out.push_back({stack, root_.page.value_or("")});
      return out;
    }
    auto walk = [&](auto&& self, const SiteNode& n) -> void {
      if (n.label) stack.push_back(*n.label);
      if (n.is_leaf()) {
        out.push_back({stack, n.page.value_or("")});
      } else {
        for (const auto& c : n.children) self(self, c);
      }
      if (n.label) stack.pop_back();
    };
    for (const auto& c : root_.children) walk(walk, c);
    return out;
  }

  /// Depth (edges from the root) of the shallowest node carrying `t`.
  std::optional<std::size_t> depth_of(const Token& t) const {
    std::optional<std::size_t> best;
    auto walk = [&](auto&& self, const SiteNode& n, std::size_t d) -> void {
      if (n.label == t && (!best || d < *best)) best = d;
      for (const auto& c : n.children) self(self, c, d + 1);
    };
    walk(walk, root_, 0);
    return best;
  }

  std::optional<std::string> single_page() const {
    if (leaves_ != 1) return std::nullopt;
    const SiteNode* n = &root_;
    while (!n->is_leaf()) n = &n->children.front();
    return n->page;
  }

  friend bool operator==(const SiteTree& a, const SiteTree& b) {
    return a.name_ == b.name_ && a.root_ == b.root_;
  }

private:
  void validate() {
    universe_.clear();
    depth_ = 0;
    leaves_ = 0;
    if (root_.is_leaf()) {
      if (!root_.page) throw SiteError(SiteError::Kind::LeafWithoutPage, "root leaf has no page");
      if (root_.label) universe_.insert(*root_.label);
      leaves_ = 1;
      return;
    }
    if (root_.page)
      throw SiteError(SiteError::Kind::PageOnInternalNode, "internal root node has a page");
    std::vector<Token> path;
    std::set<std::set<Token>> leaf_sets;
    auto walk = [&](auto&& self, const SiteNode& n, std::size_t d) -> void {
      if (n.label) {
        if (std::find(path.begin(), path.end(), *n.label) != path.end())
          throw SiteError(SiteError::Kind::RepeatedLabelOnPath,
                          "label '" + n.label->text() + "' repeats along one path");
        path.push_back(*n.label);
        universe_.insert(*n.label);
      } else if (!n.is_leaf()) {
        throw SiteError(SiteError::Kind::Malformed, "internal node without a label");
      }
      if (n.is_leaf()) {
        if (!n.page)
          throw SiteError(SiteError::Kind::LeafWithoutPage,
                          "leaf '" + (n.label ? n.label->text() : std::string("?")) +
                              "' has no page");
        depth_ = std::max(depth_, d);
        ++leaves_;
        if (!leaf_sets.insert({path.begin(), path.end()}).second)
          throw SiteError(SiteError::Kind::IndistinguishableLeaves,
                          "two leaves are reached by the same set of labels");
      } else {
        if (n.page)
          throw SiteError(SiteError::Kind::PageOnInternalNode,
                          "internal node '" + n.label->text() + "' has a page");
        check_siblings(n);
        for (const auto& c : n.children) self(self, c, d + 1);
      }
      if (n.label) path.pop_back();
    };
    check_siblings(root_);
    for (const auto& c : root_.children) walk(walk, c, 1);
  }

  static void check_siblings(const SiteNode& n) {
    std::set<Token> seen;
    for (const auto& c : n.children) {
      if (c.label && !seen.insert(*c.label).second)
        throw SiteError(SiteError::Kind::DuplicateLabel,
                        "duplicate sibling label '" + c.label->text() + "'");
    }
  }

  std::string name_;
  SiteNode root_;
  std::set<Token> universe_;
  std::size_t depth_ = 0;
  std::size_t leaves_ = 0;
};

}  // namespace staging
