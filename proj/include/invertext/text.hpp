#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "invertext/rng.hpp"

namespace invertext {

enum class TokenMode { Word, Char };

inline std::string token_mode_name(TokenMode m) {
  return m == TokenMode::Word ? "word" : "char";
}

inline TokenMode token_mode_from(const std::string& s) {
  if (s == "word") return TokenMode::Word;
  if (s == "char") return TokenMode::Char;
  throw std::invalid_argument("unknown token mode: " + s);
}

struct TokenSequence {
  std::vector<std::string> tokens;
  TokenMode mode = TokenMode::Word;
};

namespace detail {

inline bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

// One UTF-8 scalar starting at i; returns byte length (1 on malformed input).
inline std::size_t utf8_len(std::string_view s, std::size_t i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  std::size_t n = 1;
  if ((c & 0xe0) == 0xc0) n = 2;
  else if ((c & 0xf0) == 0xe0) n = 3;
  else if ((c & 0xf8) == 0xf0) n = 4;
  if (i + n > s.size()) n = 1;
  return n;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

// Word mode: lowercase, split on maximal runs of non-alphanumerics.
// Char mode: one token per Unicode scalar, case preserved.
inline TokenSequence tokenize(const std::string& text, TokenMode mode) {
  TokenSequence out;
  out.mode = mode;
  if (mode == TokenMode::Word) {
    std::string cur;
    auto flush = [&] {
      if (!cur.empty()) {
        out.tokens.push_back(cur);
        cur.clear();
      }
    };
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      unsigned char uc = static_cast<unsigned char>(c);
      if (uc < 0x80) {
        if (detail::is_ascii_alnum(c)) {
          cur.push_back(static_cast<char>(std::tolower(uc)));
        } else {
          flush();
        }
        ++i;
      } else {
        // non-ASCII scalars count as alphanumeric content
        std::size_t n = detail::utf8_len(text, i);
        cur.append(text, i, n);
        i += n;
      }
    }
    flush();
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      std::size_t n = detail::utf8_len(text, i);
      std::string tok = text.substr(i, n);
      if (!(n == 1 && std::isspace(static_cast<unsigned char>(tok[0]))))
        out.tokens.push_back(tok);
      i += n;
    }
  }
  if (out.tokens.empty()) throw std::runtime_error("no tokens");
  return out;
}

inline std::string detokenize(const TokenSequence& seq) {
  if (seq.tokens.empty()) throw std::runtime_error("empty token sequence");
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0 && seq.mode == TokenMode::Word) out.push_back(' ');
    out += seq.tokens[i];
  }
  return out;
}

inline TokenSequence truncate_tokens(TokenSequence seq, std::size_t n) {
  if (n < 1) throw std::invalid_argument("truncate_tokens: n must be >= 1");
  if (seq.tokens.size() > n) seq.tokens.resize(n);
  return seq;
}

// Token <-> id bijection with distinct pad/bos/eos/unk specials.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary() {
    tokens_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
    for (int i = 0; i < 4; ++i) id_of_[tokens_[i]] = i;
  }

  // Build from a corpus of token sequences; frequency threshold 1, tokens
  // added in first-seen order for determinism.
  static Vocabulary build(const std::vector<TokenSequence>& corpus) {
    Vocabulary v;
    for (const auto& seq : corpus)
      for (const auto& t : seq.tokens) v.add(t);
    return v;
  }

  int add(const std::string& tok) {
    auto it = id_of_.find(tok);
    if (it != id_of_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(tok);
    id_of_[tok] = id;
    return id;
  }

  int id(const std::string& tok) const {
    auto it = id_of_.find(tok);
    return it == id_of_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || id >= static_cast<int>(tokens_.size()))
      throw std::out_of_range("token id out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const { return tokens_.size(); }

  std::vector<int> encode(const TokenSequence& seq) const {
    std::vector<int> ids;
    ids.reserve(seq.tokens.size());
    for (const auto& t : seq.tokens) ids.push_back(id(t));
    return ids;
  }

  TokenSequence decode(const std::vector<int>& ids, TokenMode mode) const {
    TokenSequence seq;
    seq.mode = mode;
    for (int i : ids)
      if (i >= kUnk) seq.tokens.push_back(token(i));  // unk survives decoding
    return seq;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tokens_) {
      h = fnv1a(t, h);
      h = fnv1a("\x1f", h);
    }
    return h;
  }

  const std::vector<std::string>& all_tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> id_of_;
};

}  // namespace invertext
