#pragma once

#include <cctype>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace staging {

// Case-fold, trim, and collapse internal whitespace runs to one space.
inline std::string normalize_token_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

/// An atomic unit of user input: a hyperlink label or prompt symbol.
class Token {
public:
  explicit Token(std::string_view raw) : text_(normalize_token_text(raw)) {
    if (text_.empty()) throw std::invalid_argument("token is empty after normalization");
  }

  const std::string& text() const noexcept { return text_; }

  friend bool operator==(const Token&, const Token&) = default;
  friend auto operator<=>(const Token&, const Token&) = default;

private:
  std::string text_;
};

class UtteranceError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Tokens supplied together in one turn. Never empty.
class Utterance {
public:
  explicit Utterance(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty()) throw UtteranceError("utterance must contain at least one token");
  }
  explicit Utterance(Token t) : tokens_{std::move(t)} {}

  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }

  friend bool operator==(const Utterance&, const Utterance&) = default;

private:
  std::vector<Token> tokens_;
};

// Bare tokens may not contain whitespace, brackets, quotes or backslashes.
inline bool needs_quoting(std::string_view text) {
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '[' || ch == ']' || ch == '"' ||
        ch == '\\')
      return true;
  }
  return false;
}

inline std::string quote_token(const Token& t) {
  if (!needs_quoting(t.text())) return t.text();
  std::string out = "\"";
  for (char ch : t.text()) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

/// Splits free text into tokens. Whitespace separates tokens; a double-quoted
/// run is one token (so `"ice cream maker" d` is two tokens). Backslash escapes
/// `"` and `\` inside quotes.
inline std::vector<Token> split_tokens(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::string word;
    if (text[i] == '"') {
      std::size_t start = i++;
      bool closed = false;
      while (i < text.size()) {
        char ch = text[i++];
        if (ch == '\\' && i < text.size()) {
          word.push_back(text[i++]);
        } else if (ch == '"') {
          closed = true;
          break;
        } else {
          word.push_back(ch);
        }
      }
      if (!closed)
        throw UtteranceError("unterminated quote at offset " + std::to_string(start));
    } else {
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
        word.push_back(text[i++]);
    }
    out.emplace_back(word);
  }
  return out;
}

inline Utterance parse_utterance(std::string_view text) { return Utterance(split_tokens(text)); }

inline std::string render_utterance(const Utterance& u) {
  std::string out;
  for (const auto& t : u) {
    if (!out.empty()) out.push_back(' ');
    out += quote_token(t);
  }
  return out;
}

}  // namespace staging
