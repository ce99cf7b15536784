#pragma once

#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/embedding.hpp"
#include "invertext/rng.hpp"
#include "invertext/text.hpp"
#include "json.hpp"

namespace invertext {

struct EncoderSpec {
  int dim = 64;
  int max_tokens = 32;
  std::string kind = "toy";  // toy | remote

  void validate() const {
    if (dim < 8) throw std::invalid_argument("encoder dim must be >= 8");
    if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  }
};

// Abstract black-box encoder surface: the attack may only call encode.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual Embedding encode(const std::string& text) const = 0;
  virtual int dim() const = 0;

  std::vector<Embedding> encode_batch(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        out.push_back(encode(texts[i]));
      } catch (const std::exception& e) {
        throw std::runtime_error("encode_batch failed at index " +
                                 std::to_string(i) + ": " + e.what());
      }
    }
    return out;
  }
};

// Deterministic stand-in for production-scale encoders: mean over positions of
// position_mixer[i] * token_table[token_i], L2-normalized. Order-sensitive
// via per-position orthogonal mixers; fully regenerated from the seed.
class ToyEncoder : public Encoder {
 public:
  ToyEncoder(EncoderSpec spec, const Vocabulary& vocab, TokenMode mode,
             std::uint64_t seed)
      : spec_(spec), vocab_(vocab), mode_(mode), seed_(seed) {
    spec_.validate();
    build_params();
  }

  Embedding encode(const std::string& text) const override {
    TokenSequence seq = tokenize(text, mode_);  // throws "no tokens" when empty
    return encode_tokens(vocab_.encode(seq));
  }

  Embedding encode_tokens(std::vector<int> ids) const {
    if (ids.empty()) throw std::runtime_error("no tokens");
    if (ids.size() > static_cast<std::size_t>(spec_.max_tokens))
      ids.resize(static_cast<std::size_t>(spec_.max_tokens));
    Embedding acc = Embedding::Zero(spec_.dim);
    for (std::size_t i = 0; i < ids.size(); ++i)
      acc += mixers_[i] * token_table_.col(ids[i]);
    acc /= static_cast<float>(ids.size());
    float n = acc.norm();
    if (n == 0.0f) throw std::runtime_error("degenerate encoding");
    return acc / n;
  }

  int dim() const override { return spec_.dim; }
  const EncoderSpec& spec() const { return spec_; }
  TokenMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  const Vocabulary& vocab() const { return vocab_; }

  // Manifest carries regeneration inputs only, never the parameters.
  nlohmann::json manifest() const {
    return {{"format", "invertext-toy-encoder"},
            {"version", 1},
            {"seed", seed_},
            {"dim", spec_.dim},
            {"max_tokens", spec_.max_tokens},
            {"token_mode", token_mode_name(mode_)},
            {"vocab_hash", vocab_.hash()}};
  }

  void save_manifest(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << manifest().dump(2) << "\n";
  }

  static ToyEncoder load_manifest(const std::string& path, const Vocabulary& vocab) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    if (j.value("format", "") != "invertext-toy-encoder")
      throw std::runtime_error("not a toy encoder manifest: " + path);
    if (j.at("vocab_hash").get<std::uint64_t>() != vocab.hash())
      throw std::runtime_error("vocabulary hash mismatch in " + path);
    EncoderSpec spec;
    spec.dim = j.at("dim").get<int>();
    spec.max_tokens = j.at("max_tokens").get<int>();
    return ToyEncoder(spec, vocab, token_mode_from(j.at("token_mode").get<std::string>()),
                      j.at("seed").get<std::uint64_t>());
  }

 private:
  void build_params() {
    Rng table_rng(derive_seed(seed_, "toy-token-table"));
    token_table_.resize(spec_.dim, static_cast<Eigen::Index>(vocab_.size()));
    for (Eigen::Index c = 0; c < token_table_.cols(); ++c) {
      for (Eigen::Index r = 0; r < token_table_.rows(); ++r)
        token_table_(r, c) = static_cast<float>(table_rng.normal());
      token_table_.col(c).normalize();
    }
    mixers_.reserve(static_cast<std::size_t>(spec_.max_tokens));
    for (int i = 0; i < spec_.max_tokens; ++i) {
      Rng mix_rng(derive_seed(seed_, "toy-mixer-" + std::to_string(i)));
      Matrix g(spec_.dim, spec_.dim);
      for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c)
          g(r, c) = static_cast<float>(mix_rng.normal());
      mixers_.push_back(orthogonalize(g));
    }
  }

  // Gram-Schmidt on columns; deterministic across platforms.
  static Matrix orthogonalize(Matrix g) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      for (Eigen::Index p = 0; p < c; ++p)
        g.col(c) -= g.col(p).dot(g.col(c)) * g.col(p);
      float n = g.col(c).norm();
      if (n < 1e-6f) throw std::runtime_error("degenerate mixer basis");
      g.col(c) /= n;
    }
    return g;
  }

  EncoderSpec spec_;
  Vocabulary vocab_;
  TokenMode mode_;
  std::uint64_t seed_;
  Matrix token_table_;          // d x |V|
  std::vector<Matrix> mixers_;  // max_tokens orthogonal d x d
};

}  // namespace invertext
