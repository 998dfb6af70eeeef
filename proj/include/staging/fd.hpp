#pragma once

#include <algorithm>
#include <iterator>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "staging/site.hpp"

namespace staging {

/// Token-set implication that holds on every root-to-leaf path of a site:
/// any path whose labels include `lhs` also includes `rhs`.
struct FunctionalDependency {
  std::set<Token> lhs;
  std::set<Token> rhs;

  FunctionalDependency(std::set<Token> l, std::set<Token> r) : lhs(std::move(l)), rhs(std::move(r)) {
    if (lhs.empty() || rhs.empty())
      throw std::invalid_argument("functional dependency sides must be non-empty");
    for (const auto& t : lhs)
      if (rhs.contains(t))
        throw std::invalid_argument("functional dependency sides must be disjoint");
  }

  friend bool operator==(const FunctionalDependency&, const FunctionalDependency&) = default;
  friend auto operator<=>(const FunctionalDependency&, const FunctionalDependency&) = default;
};

inline bool holds_on(const FunctionalDependency& fd, const std::vector<SitePath>& paths) {
  for (const auto& p : paths) {
    auto labels = p.label_set();
    bool has_lhs = std::includes(labels.begin(), labels.end(), fd.lhs.begin(), fd.lhs.end());
    if (has_lhs && !std::includes(labels.begin(), labels.end(), fd.rhs.begin(), fd.rhs.end()))
      return false;
  }
  return true;
}

/// Mines every confidence-1 dependency {a} -> R over root-to-leaf label sets,
/// with R maximal. Dependencies with empty R are omitted.
inline std::vector<FunctionalDependency> mine_fds(const SiteTree& tree) {
  std::vector<std::set<Token>> sets;
  for (const auto& p : tree.paths()) sets.push_back(p.label_set());

  std::vector<FunctionalDependency> out;
  for (const auto& a : tree.token_universe()) {
    std::optional<std::set<Token>> common;
    for (const auto& s : sets) {
      if (!s.contains(a)) continue;
      if (!common) {
        common = s;
      } else {
        std::set<Token> next;
        std::set_intersection(common->begin(), common->end(), s.begin(), s.end(),
                              std::inserter(next, next.end()));
        common = std::move(next);
      }
      if (common->size() == 1) break;  // only `a` itself is left
    }
    if (!common) continue;
    common->erase(a);
    if (!common->empty()) out.emplace_back(std::set<Token>{a}, std::move(*common));
  }
  return out;
}

/// Closes `tokens` under the dependencies: any fd whose lhs is present adds its
/// rhs, repeated to a fixpoint.
inline std::set<Token> expand_input(std::set<Token> tokens,
                                    const std::vector<FunctionalDependency>& fds) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& fd : fds) {
      if (!std::includes(tokens.begin(), tokens.end(), fd.lhs.begin(), fd.lhs.end())) continue;
      for (const auto& t : fd.rhs) changed = tokens.insert(t).second || changed;
    }
  }
  return tokens;
}

}  // namespace staging
