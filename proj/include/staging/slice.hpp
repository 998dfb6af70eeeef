#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "staging/fd.hpp"
#include "staging/site.hpp"

namespace staging {

struct PruneResult {
  SiteTree tree;
  std::set<Token> consumed;
  // Set when exactly one page remains.
  std::optional<std::string> collapsed_page;
};

namespace detail {

// A labeled page that must also hold children keeps its page as an unlabeled
// child: the label alone already reaches that page.
inline void demote_page(SiteNode& n) {
  if (!n.is_leaf() || !n.page) return;
  n.children.push_back(SiteNode{std::nullopt, std::move(n.page), std::nullopt, {}});
  n.page.reset();
}

// Adds `node` to a sibling list, merging it into a same-labeled sibling.
inline void merge_into(std::vector<SiteNode>& siblings, SiteNode node) {
  if (node.label) {
    for (auto& s : siblings) {
      if (s.label == node.label) {
        if (!s.stager) s.stager = node.stager;
        if (s.is_leaf() || node.is_leaf()) {
          demote_page(s);
          demote_page(node);
        }
        for (auto& c : node.children) merge_into(s.children, std::move(c));
        return;
      }
    }
  }
  siblings.push_back(std::move(node));
}

// Forward slice marks every page below a node labeled `t`; the backward slice
// keeps only the paths reaching those pages. Matched nodes are then spliced
// out, their children taking their place. Returns the replacement list.
inline std::vector<SiteNode> slice(const SiteNode& n, const Token& t, bool below_match) {
  const bool matched = n.label == t;
  const bool keep_all = below_match || matched;

  std::vector<SiteNode> kids;
  if (n.is_leaf()) {
    if (!keep_all) return {};
  } else {
    for (const auto& c : n.children)
      for (auto& r : slice(c, t, keep_all)) merge_into(kids, std::move(r));
    if (kids.empty()) return {};
  }

  if (matched) {
    if (n.is_leaf()) return {SiteNode{std::nullopt, n.page, std::nullopt, {}}};
    return kids;
  }
  SiteNode out{n.label, n.page, n.stager, std::move(kids)};
  return {std::move(out)};
}

}  // namespace detail

inline PruneResult make_prune_result(SiteTree tree, std::set<Token> consumed) {
  auto page = tree.single_page();
  return PruneResult{std::move(tree), std::move(consumed), std::move(page)};
}

/// Restricts the site to the pages consistent with `token` and splices the
/// now-filled facet out of every retained path.
inline PruneResult prune_site(const SiteTree& tree, const Token& token) {
  if (!tree.in_universe(token))
    throw SiteError(SiteError::Kind::UnknownToken, "'" + token.text() + "' is not a label of this site");
  const SiteNode& root = tree.root();
  SiteNode next;
  if (root.is_leaf()) {
    next = SiteNode{std::nullopt, root.page, root.stager, {}};
  } else {
    next = SiteNode{root.label, std::nullopt, root.stager, {}};
    for (const auto& c : root.children)
      for (auto& r : detail::slice(c, token, false)) detail::merge_into(next.children, std::move(r));
  }
  return make_prune_result(SiteTree(tree.name(), std::move(next)), {token});
}

/// Expands the utterance through `fds`, then prunes by every resulting token.
/// Atomic: a token outside the (shrinking) universe rejects the whole input.
inline PruneResult prune_with_expansion(const SiteTree& tree, const Utterance& utt,
                                        const std::vector<FunctionalDependency>& fds) {
  std::set<Token> tokens = expand_input({utt.begin(), utt.end()}, fds);
  for (const auto& t : tokens)
    if (!tree.in_universe(t))
      throw SiteError(SiteError::Kind::UnknownToken, "'" + t.text() + "' is not a label of this site");
  SiteTree cur = tree;
  for (const auto& t : tokens) cur = prune_site(cur, t).tree;
  return make_prune_result(std::move(cur), std::move(tokens));
}

}  // namespace staging
