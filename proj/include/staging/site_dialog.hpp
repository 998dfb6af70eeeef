#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "staging/dialog.hpp"
#include "staging/enumerate.hpp"
#include "staging/site.hpp"

namespace staging {

enum class DialogMode {
  Browsing,   // links staged by interpreters: strictly top-down
  OutOfTurn,  // links staged by partial evaluators: any order
};

namespace detail {

inline DialogNode page_dialog(const SiteNode& n, DialogMode mode);

// A link to `n`: its label plus the dialog of the page it leads to. Under PE
// (and A) the label sits to the right of the subdialog so an alternator-bearing
// subdialog is on the far left; I and C need the label first.
inline DialogNode link_dialog(const SiteNode& n, DialogMode mode) {
  if (n.is_leaf()) return n.label ? DialogNode::prompt(*n.label) : DialogNode::theta();
  Stager s = n.stager.value_or(mode == DialogMode::Browsing ? Stager::I : Stager::PE);
  DialogNode below = page_dialog(n, mode);
  DialogNode label = DialogNode::prompt(*n.label);
  std::vector<DialogNode> kids;
  if (s == Stager::I || s == Stager::C) {
    kids.push_back(std::move(label));
    kids.push_back(std::move(below));
  } else {
    kids.push_back(std::move(below));
    kids.push_back(std::move(label));
  }
  return make_simplified(s, std::move(kids));
}

// The choice among the links on page `n`.
inline DialogNode page_dialog(const SiteNode& n, DialogMode mode) {
  std::vector<DialogNode> links;
  links.reserve(n.children.size());
  for (const auto& c : n.children) links.push_back(link_dialog(c, mode));
  return make_simplified(Stager::A, std::move(links));
}

}  // namespace detail

/// Dialog script for navigating `tree`: every page is an alternator over its
/// links. Per-node stager annotations override the mode's default.
inline DialogNode site_to_dialog(const SiteTree& tree, DialogMode mode) {
  const SiteNode& root = tree.root();
  if (root.is_leaf()) return root.label ? DialogNode::prompt(*root.label) : DialogNode::theta();
  return detail::page_dialog(root, mode);
}

/// Labels currently solicited: the link labels at the head of each live
/// alternative.
inline std::vector<Token> solicitation(const DialogNode& node) {
  std::vector<Token> out;
  auto add = [&](const Token& t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  auto visit = [&](auto&& self, const DialogNode& n) -> void {
    if (n.is_theta()) return;
    if (n.is_prompt()) {
      add(n.token());
      return;
    }
    const auto& ch = n.children();
    switch (n.stager()) {
      case Stager::A:
        for (const auto& c : ch) self(self, c);
        break;
      case Stager::I:
      case Stager::C: self(self, ch.front()); break;
      case Stager::PE: {
        bool any = false;
        for (const auto& c : ch) {
          if (c.is_prompt()) {
            add(c.token());
            any = true;
          }
        }
        if (!any)
          for (const auto& c : ch) self(self, c);
        break;
      }
    }
  };
  visit(visit, node);
  return out;
}

struct SequenceCount {
  std::uint64_t count = 0;
  bool closed_form = false;
  std::uint64_t leaves = 0;
  std::size_t facets = 0;  // tokens per leaf, when closed_form
};

/// Number of remaining labels on every root-to-leaf path, if they all agree.
inline std::optional<std::size_t> uniform_facet_count(const SiteTree& tree) {
  std::optional<std::size_t> k;
  for (const auto& p : tree.paths()) {
    if (k && *k != p.labels.size()) return std::nullopt;
    k = p.labels.size();
  }
  return k;
}

inline std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Counts the input sequences that reach a page. Level-uniform sites with one
/// token per turn use leaves x depth!; anything else is enumerated on the
/// out-of-turn dialog.
inline SequenceCount count_sequences(const SiteTree& tree, bool multi_token,
                                     std::size_t state_cap = 1'000'000) {
  if (!multi_token) {
    if (auto k = uniform_facet_count(tree)) {
      return {tree.leaf_count() * factorial(*k), true, tree.leaf_count(), *k};
    }
  }
  EnumerationOptions opts;
  opts.multi_token = multi_token;
  opts.state_cap = state_cap;
  auto e = enumerate_sequences(site_to_dialog(tree, DialogMode::OutOfTurn), opts);
  return {e.count, false, tree.leaf_count(), 0};
}

}  // namespace staging
