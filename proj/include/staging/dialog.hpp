#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "staging/token.hpp"

namespace staging {

/// Transformation policy attached to a composite dialog node.
///  I  - interpreter: strict sequential order, one token per turn.
///  PE - partial evaluator: children may be filled in any order.
///  C  - currier: children filled as a consecutive prefix.
///  A  - alternator: exactly one child is pursued.
enum class Stager { I, PE, C, A };

inline std::string_view to_string(Stager s) {
  switch (s) {
    case Stager::I: return "I";
    case Stager::PE: return "PE";
    case Stager::C: return "C";
    case Stager::A: return "A";
  }
  return "?";
}

inline std::optional<Stager> stager_from_string(std::string_view s) {
  if (s == "I") return Stager::I;
  if (s == "PE") return Stager::PE;
  if (s == "C") return Stager::C;
  if (s == "A") return Stager::A;
  return std::nullopt;
}

class DialogNode;

struct Theta {
  friend bool operator==(const Theta&, const Theta&) = default;
};

struct Prompt {
  Token token;
  friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct Composite {
  Stager stager;
  std::vector<DialogNode> children;
  friend bool operator==(const Composite&, const Composite&) = default;
};

/// A {dialog script, stager} tree. Immutable value; copies are deep.
class DialogNode {
public:
  static DialogNode theta() { return DialogNode(Theta{}); }
  static DialogNode prompt(Token t) { return DialogNode(Prompt{std::move(t)}); }
  static DialogNode prompt(std::string_view t) { return prompt(Token(t)); }
  static DialogNode composite(Stager s, std::vector<DialogNode> children) {
    if (children.empty()) throw std::invalid_argument("composite dialog needs at least one child");
    return DialogNode(Composite{s, std::move(children)});
  }

  bool is_theta() const noexcept { return std::holds_alternative<Theta>(v_); }
  bool is_prompt() const noexcept { return std::holds_alternative<Prompt>(v_); }
  bool is_composite() const noexcept { return std::holds_alternative<Composite>(v_); }

  const Token& token() const { return std::get<Prompt>(v_).token; }
  Stager stager() const { return std::get<Composite>(v_).stager; }
  const std::vector<DialogNode>& children() const { return std::get<Composite>(v_).children; }

  bool is_prompt_for(const Token& t) const noexcept {
    const auto* p = std::get_if<Prompt>(&v_);
    return p != nullptr && p->token == t;
  }

  std::size_t prompt_count() const {
    if (is_prompt()) return 1;
    if (is_theta()) return 0;
    std::size_t n = 0;
    for (const auto& c : children()) n += c.prompt_count();
    return n;
  }

  friend bool operator==(const DialogNode&, const DialogNode&) = default;

private:
  template <class V>
  explicit DialogNode(V v) : v_(std::move(v)) {}

  std::variant<Theta, Prompt, Composite> v_;
};

class ScriptParseError : public std::runtime_error {
public:
  ScriptParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

namespace detail {

class ScriptParser {
public:
  explicit ScriptParser(std::string_view text) : text_(text) {}

  DialogNode parse_all() {
    skip_ws();
    if (at_end()) throw ScriptParseError("empty script", pos_);
    DialogNode node = parse_node();
    skip_ws();
    if (!at_end()) throw ScriptParseError("unexpected trailing input", pos_);
    return node;
  }

private:
  bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool is_bare_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '[' && c != ']' && c != '"' &&
           c != '\\';
  }

  DialogNode parse_node() {
    skip_ws();
    if (at_end()) throw ScriptParseError("expected dialog node", pos_);
    std::size_t start = pos_;
    char c = text_[pos_];
    if (c == '"') return DialogNode::prompt(Token(parse_quoted()));
    if (c == '[' || c == ']') throw ScriptParseError(std::string("unexpected '") + c + "'", pos_);

    while (!at_end() && is_bare_char(text_[pos_])) ++pos_;
    std::string_view word = text_.substr(start, pos_ - start);
    if (word.empty()) throw ScriptParseError("unexpected character", pos_);

    if (!at_end() && text_[pos_] == '[') {
      auto stager = stager_from_string(word);
      if (!stager) throw ScriptParseError("unknown stager '" + std::string(word) + "'", start);
      ++pos_;
      std::vector<DialogNode> children;
      for (;;) {
        skip_ws();
        if (at_end()) throw ScriptParseError("unterminated composite", start);
        if (text_[pos_] == ']') {
          ++pos_;
          break;
        }
        children.push_back(parse_node());
      }
      if (children.empty()) throw ScriptParseError("composite with no children", start);
      return DialogNode::composite(*stager, std::move(children));
    }
    if (word == "THETA") return DialogNode::theta();
    return DialogNode::prompt(Token(word));
  }

  std::string parse_quoted() {
    std::size_t start = pos_++;
    std::string out;
    while (!at_end()) {
      char ch = text_[pos_++];
      if (ch == '\\') {
        if (at_end()) break;
        out.push_back(text_[pos_++]);
      } else if (ch == '"') {
        if (normalize_token_text(out).empty()) throw ScriptParseError("empty quoted token", start);
        return out;
      } else {
        out.push_back(ch);
      }
    }
    throw ScriptParseError("unterminated quoted token", start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void render_into(const DialogNode& n, std::string& out) {
  if (n.is_theta()) {
    out += "THETA";
  } else if (n.is_prompt()) {
    out += quote_token(n.token());
  } else {
    out += to_string(n.stager());
    out.push_back('[');
    bool first = true;
    for (const auto& c : n.children()) {
      if (!first) out.push_back(' ');
      first = false;
      render_into(c, out);
    }
    out.push_back(']');
  }
}

}  // namespace detail

/// Parses script notation:
///   node := TOKEN | ('I'|'PE'|'C'|'A') '[' node+ ']' | 'THETA'
/// Tokens are bare words or double-quoted strings. The result is not simplified.
inline DialogNode parse_script(std::string_view text) {
  return detail::ScriptParser(text).parse_all();
}

inline std::string render_script(const DialogNode& node) {
  std::string out;
  detail::render_into(node, out);
  return out;
}

/// True iff the node itself or any descendant composite is an alternator.
inline bool contains_alternator(const DialogNode& node) {
  if (!node.is_composite()) return false;
  if (node.stager() == Stager::A) return true;
  for (const auto& c : node.children())
    if (contains_alternator(c)) return true;
  return false;
}

/// Builds a composite from already-simplified children, applying theta
/// concatenation and the single-subdialog collapse at this level only.
inline DialogNode make_simplified(Stager s, std::vector<DialogNode> children) {
  std::erase_if(children, [](const DialogNode& c) { return c.is_theta(); });
  if (children.empty()) return DialogNode::theta();
  // A lone prompt stays wrapped: it is the sole-prompt case of reduction.
  if (children.size() == 1 && children.front().is_composite()) return std::move(children.front());
  return DialogNode::composite(s, std::move(children));
}

/// Fixpoint of: drop THETA children, collapse a composite whose only child is a
/// subdialog, and turn an all-THETA composite into THETA. Applied bottom-up.
inline DialogNode simplify(const DialogNode& node) {
  if (!node.is_composite()) return node;
  std::vector<DialogNode> kids;
  kids.reserve(node.children().size());
  for (const auto& c : node.children()) kids.push_back(simplify(c));
  return make_simplified(node.stager(), std::move(kids));
}

inline bool is_simplified(const DialogNode& node) { return simplify(node) == node; }

/// Distinct prompt tokens appearing anywhere in the node, in first-seen order.
inline std::vector<Token> prompt_tokens(const DialogNode& node) {
  std::vector<Token> out;
  auto visit = [&](auto&& self, const DialogNode& n) -> void {
    if (n.is_prompt()) {
      if (std::find(out.begin(), out.end(), n.token()) == out.end()) out.push_back(n.token());
    } else if (n.is_composite()) {
      for (const auto& c : n.children()) self(self, c);
    }
  };
  visit(visit, node);
  return out;
}

}  // namespace staging
