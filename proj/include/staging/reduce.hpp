#pragma once

#include <optional>
#include <set>
#include <vector>

#include "staging/dialog.hpp"

namespace staging {

/// Result of staging a dialog with some input. A rejected outcome carries the
/// input node unchanged.
struct ReductionOutcome {
  bool accepted;
  DialogNode result;
  Utterance consumed;
};

namespace detail {

struct Step {
  DialogNode result;
  // The consumed prompt sat below an interpreter; such input must arrive alone.
  bool through_interpreter = false;
};

inline std::optional<Step> reduce_step(const DialogNode& node, const Token& a);

inline std::optional<Step> reduce_pe(const std::vector<DialogNode>& ch, const Token& a) {
  // Any matching prompt child is removed.
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (ch[i].is_prompt_for(a)) {
      std::vector<DialogNode> rest = ch;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
      return Step{make_simplified(Stager::PE, std::move(rest))};
    }
  }
  // A run of alternator-bearing subdialogs on the far left is rewritten in
  // place, without committing the enclosing PE to that subdialog.
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (!contains_alternator(ch[i])) break;
    if (auto s = reduce_step(ch[i], a)) {
      std::vector<DialogNode> next = ch;
      next[i] = std::move(s->result);
      return Step{make_simplified(Stager::PE, std::move(next)), s->through_interpreter};
    }
  }
  // Entering any other subdialog: it must be completed before the rest.
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (!ch[i].is_composite()) continue;
    if (auto s = reduce_step(ch[i], a)) {
      std::vector<DialogNode> rest;
      rest.reserve(ch.size() - 1);
      for (std::size_t j = 0; j < ch.size(); ++j)
        if (j != i) rest.push_back(ch[j]);
      DialogNode remainder =
          rest.empty() ? DialogNode::theta() : make_simplified(Stager::PE, std::move(rest));
      std::vector<DialogNode> seq;
      seq.push_back(std::move(s->result));
      seq.push_back(std::move(remainder));
      return Step{make_simplified(Stager::C, std::move(seq)), s->through_interpreter};
    }
  }
  return std::nullopt;
}

inline std::optional<Step> reduce_sequential(Stager stager, const std::vector<DialogNode>& ch,
                                             const Token& a) {
  const bool interp = stager == Stager::I;
  const DialogNode& head = ch.front();
  if (head.is_prompt_for(a)) {
    std::vector<DialogNode> rest(ch.begin() + 1, ch.end());
    return Step{make_simplified(stager, std::move(rest)), interp};
  }
  if (head.is_composite()) {
    if (auto s = reduce_step(head, a)) {
      std::vector<DialogNode> next = ch;
      next.front() = std::move(s->result);
      return Step{make_simplified(stager, std::move(next)), interp || s->through_interpreter};
    }
  }
  return std::nullopt;
}

inline std::optional<Step> reduce_alternator(const std::vector<DialogNode>& ch, const Token& a) {
  for (const auto& c : ch)
    if (c.is_prompt_for(a)) return Step{DialogNode::theta()};

  // Keep exactly the subdialogs the token changes; everything else is pruned.
  std::vector<DialogNode> kept;
  bool interp = false;
  for (const auto& c : ch) {
    if (!c.is_composite()) continue;
    if (auto s = reduce_step(c, a)) {
      interp = interp || s->through_interpreter;
      kept.push_back(std::move(s->result));
    }
  }
  if (kept.empty()) return std::nullopt;
  return Step{make_simplified(Stager::A, std::move(kept)), interp};
}

inline std::optional<Step> reduce_step(const DialogNode& node, const Token& a) {
  if (node.is_theta()) return std::nullopt;
  if (node.is_prompt()) {
    if (node.token() == a) return Step{DialogNode::theta()};
    return std::nullopt;
  }
  const auto& ch = node.children();
  if (ch.size() == 1 && ch.front().is_prompt_for(a))
    return Step{DialogNode::theta(), node.stager() == Stager::I};

  switch (node.stager()) {
    case Stager::PE: return reduce_pe(ch, a);
    case Stager::C:
    case Stager::I: return reduce_sequential(node.stager(), ch, a);
    case Stager::A: return reduce_alternator(ch, a);
  }
  return std::nullopt;
}

}  // namespace detail

/// Stages `node` with a single token. The first applicable reduction rule
/// fires; when none does the outcome is rejected and the node returned as is.
/// Precondition: `node` is simplified.
inline ReductionOutcome reduce(const DialogNode& node, const Token& token) {
  if (auto s = detail::reduce_step(node, token))
    return {true, std::move(s->result), Utterance(token)};
  return {false, node, Utterance(token)};
}

/// Folds `reduce` over the utterance. All-or-nothing: one rejected token
/// rejects the utterance. Interpreter-staged prompts only accept one-token
/// utterances.
inline ReductionOutcome apply_utterance(const DialogNode& node, const Utterance& utt) {
  DialogNode cur = node;
  for (const auto& t : utt) {
    auto s = detail::reduce_step(cur, t);
    if (!s || (s->through_interpreter && utt.size() > 1)) return {false, node, utt};
    cur = std::move(s->result);
  }
  return {true, std::move(cur), utt};
}

/// Tokens the node accepts right now, computed from stager semantics.
inline std::set<Token> valid_tokens(const DialogNode& node) {
  std::set<Token> out;
  auto visit = [&](auto&& self, const DialogNode& n) -> void {
    if (n.is_theta()) return;
    if (n.is_prompt()) {
      out.insert(n.token());
      return;
    }
    switch (n.stager()) {
      case Stager::C:
      case Stager::I: self(self, n.children().front()); break;
      case Stager::PE:
      case Stager::A:
        for (const auto& c : n.children()) self(self, c);
        break;
    }
  };
  visit(visit, node);
  return out;
}

inline bool is_complete(const DialogNode& node) { return node.is_theta(); }

}  // namespace staging
