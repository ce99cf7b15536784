#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "invertext/rng.hpp"
#include "invertext/text.hpp"
#include "invertext/wordlist.hpp"
#include "json.hpp"

namespace invertext {

struct CorpusEntry {
  std::string id;
  std::string text;
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  std::string provenance;
  TokenMode token_mode = TokenMode::Word;

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.text);
    return out;
  }
};

struct JsonlLoadStats {
  std::size_t skipped_malformed = 0;
  std::size_t skipped_missing_field = 0;
};

// Reads up to `limit` entries via seeded uniform sampling without
// replacement over the file's usable lines; file order is preserved.
inline Corpus load_jsonl_corpus(const std::string& path,
                                const std::string& text_field,
                                std::size_t limit, std::uint64_t seed,
                                JsonlLoadStats* stats = nullptr) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  JsonlLoadStats local;
  std::vector<CorpusEntry> usable;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++local.skipped_malformed;
      continue;
    }
    if (!j.contains(text_field) || !j[text_field].is_string()) {
      ++local.skipped_missing_field;
      continue;
    }
    std::string id = j.contains("_id") && j["_id"].is_string()
                         ? j["_id"].get<std::string>()
                         : "line-" + std::to_string(lineno);
    usable.push_back({id, j[text_field].get<std::string>()});
  }
  if (stats) *stats = local;
  if (usable.empty()) throw std::runtime_error("no usable lines in " + path);
  Corpus c;
  c.provenance = "jsonl:" + path;
  if (usable.size() <= limit) {
    c.entries = std::move(usable);
  } else {
    std::vector<std::size_t> idx(usable.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "jsonl-sample"));
    rng.shuffle(idx);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) c.entries.push_back(usable[i]);
  }
  return c;
}

namespace detail {

// Pronounceable pseudo-word from alternating consonant/vowel syllables.
inline std::string pseudo_word(Rng& rng) {
  static constexpr const char* cons = "bcdfghjklmnprstvwz";
  static constexpr const char* vows = "aeiou";
  std::size_t syllables = 2 + rng.below(2);
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w.push_back(cons[rng.below(18)]);
    w.push_back(vows[rng.below(5)]);
    if (rng.uniform() < 0.25) w.push_back(cons[rng.below(18)]);
  }
  return w;
}

}  // namespace detail

// Templated pseudo-sentences: subject / verb / object slots filled from a
// seeded vocabulary, padded with modifiers to the drawn length.
inline Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t size,
                                        std::size_t vocab_size,
                                        std::size_t len_min, std::size_t len_max) {
  if (size == 0) throw std::invalid_argument("corpus size must be >= 1");
  if (vocab_size < 20) throw std::invalid_argument("vocab_size must be >= 20");
  if (len_min < 1 || len_min > len_max)
    throw std::invalid_argument("invalid length range");

  Rng vocab_rng(derive_seed(seed, "synthetic-vocab"));
  std::vector<std::string> words;
  std::set<std::string> seen;
  while (words.size() < vocab_size) {
    std::string w = detail::pseudo_word(vocab_rng);
    if (seen.insert(w).second) words.push_back(w);
  }
  // role pools: 40% nouns, 30% verbs, 30% modifiers
  std::size_t n_nouns = std::max<std::size_t>(1, vocab_size * 4 / 10);
  std::size_t n_verbs = std::max<std::size_t>(1, vocab_size * 3 / 10);
  auto noun = [&](Rng& r) { return words[r.below(n_nouns)]; };
  auto verb = [&](Rng& r) { return words[n_nouns + r.below(n_verbs)]; };
  auto modifier = [&](Rng& r) {
    std::size_t n_mods = vocab_size - n_nouns - n_verbs;
    return words[n_nouns + n_verbs + r.below(n_mods)];
  };

  Corpus c;
  c.provenance = "synthetic(seed=" + std::to_string(seed) + ")";
  Rng rng(derive_seed(seed, "synthetic-sentences"));
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t len = len_min + rng.below(len_max - len_min + 1);
    std::vector<std::string> toks;
    while (toks.size() < len) {
      if (toks.size() + 3 <= len) {
        if (rng.uniform() < 0.5) toks.push_back(modifier(rng));
        toks.push_back(noun(rng));
        toks.push_back(verb(rng));
        toks.push_back(noun(rng));
      } else {
        toks.push_back(modifier(rng));
      }
    }
    toks.resize(len);
    std::string s;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (t > 0) s.push_back(' ');
      s += toks[t];
    }
    c.entries.push_back({"syn-" + std::to_string(i), s});
  }
  return c;
}

enum class PasswordStrength { Easy, Medium, Hard };

inline std::string strength_name(PasswordStrength s) {
  switch (s) {
    case PasswordStrength::Easy: return "easy";
    case PasswordStrength::Medium: return "medium";
    case PasswordStrength::Hard: return "hard";
  }
  return "?";
}

struct PasswordSpec {
  PasswordStrength strength = PasswordStrength::Easy;
  std::size_t count = 1;
  std::uint64_t seed = 0;
};

// Easy:   lowercase word (4-7 letters) + 1-2 digits
// Medium: word + 4-digit number, or 8-11 mixed lowercase+digits
// Hard:   16-20 chars uniform over upper/lower/digits
inline Corpus generate_passwords(const PasswordSpec& spec) {
  if (spec.count < 1) throw std::invalid_argument("password count must be >= 1");
  Corpus c;
  c.token_mode = TokenMode::Char;
  c.provenance = "passwords(" + strength_name(spec.strength) +
                 ",seed=" + std::to_string(spec.seed) + ")";
  Rng rng(derive_seed(spec.seed, "passwords-" + strength_name(spec.strength)));
  static constexpr const char* alnum =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  for (std::size_t i = 0; i < spec.count; ++i) {
    std::string p;
    switch (spec.strength) {
      case PasswordStrength::Easy: {
        p = std::string(kPasswordWords[rng.below(kPasswordWords.size())]);
        std::size_t digits = 1 + rng.below(2);
        for (std::size_t d = 0; d < digits; ++d)
          p.push_back(static_cast<char>('0' + rng.below(10)));
        break;
      }
      case PasswordStrength::Medium: {
        if (rng.uniform() < 0.5) {
          p = std::string(kPasswordWords[rng.below(kPasswordWords.size())]);
          for (int d = 0; d < 4; ++d)
            p.push_back(static_cast<char>('0' + rng.below(10)));
        } else {
          std::size_t len = 8 + rng.below(4);
          // at least one letter and one digit
          do {
            p.clear();
            for (std::size_t k = 0; k < len; ++k) {
              if (rng.uniform() < 0.7)
                p.push_back(static_cast<char>('a' + rng.below(26)));
              else
                p.push_back(static_cast<char>('0' + rng.below(10)));
            }
          } while (p.find_first_of("0123456789") == std::string::npos ||
                   p.find_first_not_of("0123456789") == std::string::npos);
        }
        break;
      }
      case PasswordStrength::Hard: {
        std::size_t len = 16 + rng.below(5);
        for (std::size_t k = 0; k < len; ++k)
          p.push_back(alnum[rng.below(62)]);
        break;
      }
    }
    c.entries.push_back({strength_name(spec.strength) + "-" + std::to_string(i), p});
  }
  return c;
}

// Seeded shuffle then contiguous cut; disjoint and covering.
inline std::tuple<Corpus, Corpus, Corpus> split(const Corpus& corpus,
                                                double train_frac,
                                                double val_frac,
                                                double test_frac,
                                                std::uint64_t seed) {
  double sum = train_frac + val_frac + test_frac;
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be positive and sum to 1");
  std::vector<std::size_t> idx(corpus.entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(idx);
  std::size_t n = idx.size();
  std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n) + 0.5);
  std::size_t n_val = static_cast<std::size_t>(val_frac * static_cast<double>(n) + 0.5);
  if (n_train + n_val > n) n_val = n - n_train;
  std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0)
    throw std::runtime_error("split produced an empty part");
  auto take = [&](std::size_t begin, std::size_t count, const char* tag) {
    Corpus part;
    part.token_mode = corpus.token_mode;
    part.provenance = corpus.provenance + "/" + tag;
    for (std::size_t i = begin; i < begin + count; ++i)
      part.entries.push_back(corpus.entries[idx[i]]);
    return part;
  };
  return {take(0, n_train, "train"), take(n_train, n_val, "val"),
          take(n_train + n_val, n_test, "test")};
}

inline void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  nlohmann::json j = {{"format", "invertext-vocab"},
                      {"tokens", vocab.all_tokens()},
                      {"hash", vocab.hash()}};
  f << j.dump() << "\n";
}

inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  if (j.value("format", "") != "invertext-vocab")
    throw std::runtime_error("not a vocabulary file: " + path);
  Vocabulary v;
  auto toks = j.at("tokens").get<std::vector<std::string>>();
  for (std::size_t i = 4; i < toks.size(); ++i) v.add(toks[i]);
  if (v.hash() != j.at("hash").get<std::uint64_t>())
    throw std::runtime_error("vocabulary hash mismatch in " + path);
  return v;
}

inline void write_jsonl_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& e : corpus.entries) {
    nlohmann::json j = {{"_id", e.id}, {"text", e.text}};
    f << j.dump() << "\n";
  }
}

inline void write_provenance(const Corpus& corpus, const std::string& path,
                             const nlohmann::json& params) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  nlohmann::json j = {{"generator", corpus.provenance},
                      {"token_mode", token_mode_name(corpus.token_mode)},
                      {"parameters", params},
                      {"artifact_version", "1.0"}};
  f << j.dump(2) << "\n";
}

}  // namespace invertext
