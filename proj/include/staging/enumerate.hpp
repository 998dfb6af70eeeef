#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "staging/reduce.hpp"

namespace staging {

class EnumerationLimitError : public std::runtime_error {
public:
  explicit EnumerationLimitError(std::size_t cap)
      : std::runtime_error("sequence enumeration exceeded the state cap of " +
                           std::to_string(cap) + " explored states"),
        cap_(cap) {}
  std::size_t cap() const noexcept { return cap_; }

private:
  std::size_t cap_;
};

struct EnumerationOptions {
  bool multi_token = false;
  std::size_t state_cap = 1'000'000;
  // When set, completing sequences are listed (up to list_cap of them).
  bool collect = false;
  std::size_t list_cap = 100'000;
};

using UtteranceSequence = std::vector<Utterance>;

struct SequenceEnumeration {
  std::uint64_t count = 0;
  std::vector<UtteranceSequence> sequences;  // filled only when collecting
  std::size_t explored_states = 0;
};

namespace detail {

struct Move {
  Utterance utterance;
  DialogNode next;
};

class SequenceEnumerator {
public:
  explicit SequenceEnumerator(EnumerationOptions opts) : opts_(opts) {}

  SequenceEnumeration run(const DialogNode& root) {
    SequenceEnumeration out;
    out.count = count(root);
    if (opts_.collect) {
      UtteranceSequence prefix;
      collect(root, prefix, out.sequences);
    }
    out.explored_states = explored_;
    return out;
  }

private:
  void charge() {
    if (++explored_ > opts_.state_cap) throw EnumerationLimitError(opts_.state_cap);
  }

  const std::vector<Move>& moves(const DialogNode& node, const std::string& key) {
    if (auto it = moves_.find(key); it != moves_.end()) return it->second;
    charge();
    std::vector<Move> out = opts_.multi_token ? group_moves(node) : single_moves(node);
    return moves_.emplace(key, std::move(out)).first->second;
  }

  std::vector<Move> single_moves(const DialogNode& node) {
    std::vector<Move> out;
    for (const auto& t : valid_tokens(node)) {
      auto r = reduce(node, t);
      if (r.accepted) out.push_back({Utterance(t), std::move(r.result)});
    }
    return out;
  }

  // One move per non-empty token set that some ordering accepts. Orderings are
  // explored lexicographically, so each set keeps its smallest accepted order.
  std::vector<Move> group_moves(const DialogNode& node) {
    std::vector<Move> out;
    std::set<std::set<Token>> seen_sets;
    std::unordered_set<std::string> seen_paths;
    std::vector<Token> order;
    std::set<Token> used;

    auto dfs = [&](auto&& self, const DialogNode& cur, bool interp) -> void {
      for (const auto& t : valid_tokens(cur)) {
        if (used.contains(t)) continue;
        auto s = reduce_step(cur, t);
        if (!s) continue;
        bool via_interp = interp || s->through_interpreter;
        order.push_back(t);
        used.insert(t);
        if (order.size() == 1 || !via_interp) {
          std::string path_key = render_script(s->result) + "\x1f";
          for (const auto& u : used) path_key += u.text() + "\x1f";
          if (seen_paths.insert(path_key).second) {
            charge();
            if (seen_sets.insert(used).second) out.push_back({Utterance(order), s->result});
            if (!via_interp) self(self, s->result, via_interp);
          }
        }
        used.erase(t);
        order.pop_back();
      }
    };
    dfs(dfs, node, false);
    return out;
  }

  std::uint64_t count(const DialogNode& node) {
    if (node.is_theta()) return 1;
    std::string key = render_script(node);
    if (auto it = counts_.find(key); it != counts_.end()) return it->second;
    std::uint64_t total = 0;
    // Copy: recursion may rehash moves_.
    std::vector<Move> ms = moves(node, key);
    for (const auto& m : ms) total += count(m.next);
    counts_.emplace(std::move(key), total);
    return total;
  }

  void collect(const DialogNode& node, UtteranceSequence& prefix,
               std::vector<UtteranceSequence>& out) {
    if (out.size() >= opts_.list_cap) return;
    if (node.is_theta()) {
      out.push_back(prefix);
      return;
    }
    std::vector<Move> ms = moves(node, render_script(node));
    for (const auto& m : ms) {
      prefix.push_back(m.utterance);
      collect(m.next, prefix, out);
      prefix.pop_back();
    }
  }

  EnumerationOptions opts_;
  std::size_t explored_ = 0;
  std::unordered_map<std::string, std::vector<Move>> moves_;
  std::unordered_map<std::string, std::uint64_t> counts_;
};

}  // namespace detail

/// Exhaustively counts (and optionally lists) the input sequences that drive
/// `node` to THETA. With `multi_token` each turn is a non-empty set of tokens.
/// Exceeding `state_cap` throws EnumerationLimitError rather than truncating.
inline SequenceEnumeration enumerate_sequences(const DialogNode& node,
                                               EnumerationOptions opts = {}) {
  return detail::SequenceEnumerator(opts).run(node);
}

}  // namespace staging
