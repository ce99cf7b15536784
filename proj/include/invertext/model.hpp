#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/embedding.hpp"
#include "invertext/rng.hpp"
#include "invertext/text.hpp"

namespace invertext {

using Vec = Eigen::VectorXf;

struct ModelConfig {
  int dim = 64;          // embedding dimension d
  int hidden = 128;      // model width m
  int pseudo_tokens = 8; // s pseudo-tokens per projected embedding
  int max_len = 16;      // max output tokens (excluding eos)
  int vocab_size = 0;
  bool corrective = false;  // base model consumes only the target projection
};

// EmbToSeq: reshape(W2 * tanh(W1 * e + b1) + b2) into s vectors of width m.
struct Projector {
  Matrix W1;  // m x d
  Vec b1;     // m
  Matrix W2;  // (s*m) x m
  Vec b2;     // s*m
  int s = 0, m = 0, d = 0;

  void init(int s_, int m_, int d_, Rng& rng) {
    s = s_;
    m = m_;
    d = d_;
    auto xavier = [&](Matrix& w, int rows, int cols) {
      w.resize(rows, cols);
      float r = std::sqrt(6.0f / static_cast<float>(rows + cols));
      for (Eigen::Index j = 0; j < w.size(); ++j)
        w.data()[j] = static_cast<float>(rng.uniform(-r, r));
    };
    xavier(W1, m, d);
    xavier(W2, s * m, m);
    b1 = Vec::Zero(m);
    b2 = Vec::Zero(s * m);
  }

  // forward; hidden (tanh activation) written to *hidden_out for backward
  Matrix apply(const Vec& e, Vec* hidden_out = nullptr) const {
    if (e.size() != d) throw std::invalid_argument("emb_to_seq: dimension mismatch");
    if (!e.allFinite()) throw std::invalid_argument("emb_to_seq: non-finite input");
    Vec u = (W1 * e + b1).array().tanh().matrix();
    if (hidden_out) *hidden_out = u;
    Vec flat = W2 * u + b2;
    return Eigen::Map<const Matrix>(flat.data(), m, s);
  }
};

// emb_to_seq as a free operation over a projector
inline Matrix emb_to_seq(const Projector& p, const Vec& e) { return p.apply(e); }

struct ProjectorGrads {
  Matrix dW1, dW2;
  Vec db1, db2;
  void zero(const Projector& p) {
    dW1 = Matrix::Zero(p.W1.rows(), p.W1.cols());
    dW2 = Matrix::Zero(p.W2.rows(), p.W2.cols());
    db1 = Vec::Zero(p.b1.size());
    db2 = Vec::Zero(p.b2.size());
  }
};

// GRU decoder with dot-product attention over the input memory, plus a
// tanh encoder layer on memory columns. Shared by base and corrector; they
// differ only in how the memory is built.
class Seq2Seq {
 public:
  ModelConfig cfg;

  Projector proj_target;
  Projector proj_hypothesis;  // corrector only
  Projector proj_difference;  // corrector only

  Matrix Etok;  // m x V, shared hypothesis-side and decoder-side embedding
  Matrix Ppos;  // m x max_len positional embedding for hypothesis tokens
  Matrix Wenc, Winit;
  Vec benc, binit;
  Matrix Wz, Wr, Wh, Uz, Ur, Uh;
  Vec bz, br, bh;
  Matrix Wc;   // m x 2m
  Vec bc;
  Matrix Wout; // V x m
  Vec bout;

  std::uint64_t creation_seed = 0;

  Seq2Seq() = default;

  Seq2Seq(const ModelConfig& c, std::uint64_t seed) : cfg(c), creation_seed(seed) {
    if (cfg.vocab_size <= 4) throw std::invalid_argument("vocab too small");
    Rng rng(derive_seed(seed, "model-init"));
    const int m = cfg.hidden, V = cfg.vocab_size;
    proj_target.init(cfg.pseudo_tokens, m, cfg.dim, rng);
    if (cfg.corrective) {
      proj_hypothesis.init(cfg.pseudo_tokens, m, cfg.dim, rng);
      proj_difference.init(cfg.pseudo_tokens, m, cfg.dim, rng);
    }
    auto xavier = [&](Matrix& w, int rows, int cols) {
      w.resize(rows, cols);
      float r = std::sqrt(6.0f / static_cast<float>(rows + cols));
      for (Eigen::Index j = 0; j < w.size(); ++j)
        w.data()[j] = static_cast<float>(rng.uniform(-r, r));
    };
    xavier(Etok, m, V);
    xavier(Ppos, m, cfg.max_len);
    xavier(Wenc, m, m);
    xavier(Winit, m, m);
    xavier(Wz, m, m); xavier(Wr, m, m); xavier(Wh, m, m);
    xavier(Uz, m, m); xavier(Ur, m, m); xavier(Uh, m, m);
    xavier(Wc, m, 2 * m);
    xavier(Wout, V, m);
    benc = Vec::Zero(m); binit = Vec::Zero(m);
    bz = Vec::Zero(m); br = Vec::Zero(m); bh = Vec::Zero(m);
    bc = Vec::Zero(m); bout = Vec::Zero(V);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* w : weight_matrices()) n += static_cast<std::size_t>(w->size());
    for (const auto* b : bias_vectors()) n += static_cast<std::size_t>(b->size());
    return n;
  }

  std::vector<const Matrix*> weight_matrices() const {
    std::vector<const Matrix*> v = {&proj_target.W1, &proj_target.W2};
    if (cfg.corrective) {
      v.push_back(&proj_hypothesis.W1);
      v.push_back(&proj_hypothesis.W2);
      v.push_back(&proj_difference.W1);
      v.push_back(&proj_difference.W2);
    }
    for (const Matrix* m : {&Etok, &Ppos, &Wenc, &Winit, &Wz, &Wr, &Wh,
                            &Uz, &Ur, &Uh, &Wc, &Wout})
      v.push_back(m);
    return v;
  }

  std::vector<const Vec*> bias_vectors() const {
    std::vector<const Vec*> v = {&proj_target.b1, &proj_target.b2};
    if (cfg.corrective) {
      v.push_back(&proj_hypothesis.b1);
      v.push_back(&proj_hypothesis.b2);
      v.push_back(&proj_difference.b1);
      v.push_back(&proj_difference.b2);
    }
    for (const Vec* b : {&benc, &binit, &bz, &br, &bh, &bc, &bout}) v.push_back(b);
    return v;
  }

  // flat list of all parameter blocks as (data, size) for optimizer/serialization
  struct Block { float* data; std::size_t size; };
  std::vector<Block> parameter_blocks() {
    std::vector<Block> out;
    auto self = const_cast<const Seq2Seq*>(this);
    for (const Matrix* m : self->weight_matrices())
      out.push_back({const_cast<float*>(m->data()), static_cast<std::size_t>(m->size())});
    for (const Vec* b : self->bias_vectors())
      out.push_back({const_cast<float*>(b->data()), static_cast<std::size_t>(b->size())});
    return out;
  }

  // Memory for the base model: the target-embedding projection only.
  Matrix build_base_memory(const Vec& target_e) const {
    return encode_memory(proj_target.apply(target_e));
  }

  // Corrector input: concat of the three projections and the embedded
  // hypothesis tokens, in that order; total 3s + n columns.
  Matrix build_corrector_input_raw(const Vec& target_e, const Vec& hyp_e,
                                   const std::vector<int>& hyp_ids) const {
    if (!cfg.corrective) throw std::logic_error("base model has no corrector input");
    if (static_cast<int>(hyp_ids.size()) > cfg.max_len)
      throw std::invalid_argument("hypothesis longer than max_len");
    const int s = cfg.pseudo_tokens, m = cfg.hidden;
    const int n = static_cast<int>(hyp_ids.size());
    Matrix raw(m, 3 * s + n);
    raw.block(0, 0, m, s) = proj_target.apply(target_e);
    raw.block(0, s, m, s) = proj_hypothesis.apply(hyp_e);
    raw.block(0, 2 * s, m, s) = proj_difference.apply((target_e - hyp_e).eval());
    for (int j = 0; j < n; ++j)
      raw.col(3 * s + j) = Etok.col(hyp_ids[static_cast<std::size_t>(j)]) + Ppos.col(j);
    return raw;
  }

  Matrix build_corrector_memory(const Vec& target_e, const Vec& hyp_e,
                                const std::vector<int>& hyp_ids) const {
    return encode_memory(build_corrector_input_raw(target_e, hyp_e, hyp_ids));
  }

  Matrix encode_memory(const Matrix& raw) const {
    return ((Wenc * raw).colwise() + benc).array().tanh().matrix();
  }

  Vec initial_state(const Matrix& memory) const {
    Vec mean = memory.rowwise().mean();
    return (Winit * mean + binit).array().tanh().matrix();
  }

  struct StepOut {
    Vec h;        // new decoder state
    Vec logits;   // V
    Vec attn;     // K attention weights (kept for backward)
    Vec context;  // m
    Vec o;        // m, pre-logit activation
    Vec z, r, hc; // GRU internals (kept for backward)
  };

  StepOut decode_step(const Matrix& memory, const Vec& h_prev, int token_in) const {
    StepOut out;
    const Vec x = Etok.col(token_in);
    out.z = sigmoid(Wz * x + Uz * h_prev + bz);
    out.r = sigmoid(Wr * x + Ur * h_prev + br);
    out.hc = (Wh * x + Uh * (out.r.array() * h_prev.array()).matrix() + bh)
                 .array().tanh().matrix();
    out.h = ((1.0f - out.z.array()) * h_prev.array() + out.z.array() * out.hc.array())
                .matrix();
    // scaled dot-product attention over memory columns
    Vec scores = memory.transpose() * out.h / std::sqrt(static_cast<float>(cfg.hidden));
    out.attn = softmax(scores);
    out.context = memory * out.attn;
    Vec cat(2 * cfg.hidden);
    cat << out.h, out.context;
    out.o = (Wc * cat + bc).array().tanh().matrix();
    out.logits = Wout * out.o + bout;
    return out;
  }

  static Vec sigmoid(const Vec& v) {
    return (1.0f / (1.0f + (-v.array()).exp())).matrix();
  }

  static Vec softmax(const Vec& v) {
    Eigen::ArrayXf a = (v.array() - v.maxCoeff()).exp();
    return (a / a.sum()).matrix();
  }

  static Vec log_softmax(const Vec& v) {
    float mx = v.maxCoeff();
    float lse = std::log((v.array() - mx).exp().sum()) + mx;
    return (v.array() - lse).matrix();
  }
};

enum class TokenDecode { Greedy, Nucleus, TokenBeam };

struct DecodeConfig {
  TokenDecode kind = TokenDecode::Greedy;
  double nucleus_p = 0.9;
  int beam_k = 1;
};

namespace detail {

struct TokenBeamEntry {
  std::vector<int> ids;
  Vec h;
  double logprob = 0.0;
  bool done = false;
  double score() const {
    std::size_t len = ids.size() + 1;  // count eos
    return logprob / static_cast<double>(len);
  }
};

}  // namespace detail

// Autoregressive decode from a prepared memory. Greedy is deterministic;
// nucleus samples from the renormalized top-p set; token beam returns up to
// k completed sequences, best first (length-normalized log-likelihood).
inline std::vector<std::vector<int>> decode_from_memory(
    const Seq2Seq& model, const Matrix& memory, const DecodeConfig& dc, Rng* rng) {
  const int L = model.cfg.max_len;

  if (dc.kind == TokenDecode::TokenBeam) {
    int k = std::max(1, dc.beam_k);
    std::vector<detail::TokenBeamEntry> beams = {
        {{}, model.initial_state(memory), 0.0, false}};
    std::vector<detail::TokenBeamEntry> finished;
    for (int t = 0; t < L && !beams.empty(); ++t) {
      std::vector<detail::TokenBeamEntry> next;
      for (const auto& b : beams) {
        int tok_in = b.ids.empty() ? Vocabulary::kBos : b.ids.back();
        auto step = model.decode_step(memory, b.h, tok_in);
        Vec lp = Seq2Seq::log_softmax(step.logits);
        // top-(k+1) token expansions; skip pad/bos
        std::vector<int> order(static_cast<std::size_t>(lp.size()));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::partial_sort(order.begin(),
                          order.begin() + std::min<std::size_t>(order.size(),
                                                                static_cast<std::size_t>(k) + 2),
                          order.end(),
                          [&](int a, int bb) { return lp[a] > lp[bb]; });
        int taken = 0;
        for (int tok : order) {
          if (tok == Vocabulary::kPad || tok == Vocabulary::kBos) continue;
          detail::TokenBeamEntry e = b;
          e.logprob += lp[tok];
          if (tok == Vocabulary::kEos) {
            e.done = true;
            finished.push_back(e);
          } else {
            e.ids.push_back(tok);
            e.h = step.h;
            next.push_back(e);
          }
          if (++taken >= k + 1) break;
        }
      }
      std::sort(next.begin(), next.end(),
                [](const auto& a, const auto& b) { return a.score() > b.score(); });
      if (static_cast<int>(next.size()) > k) next.resize(static_cast<std::size_t>(k));
      beams = std::move(next);
    }
    for (auto& b : beams) finished.push_back(b);  // ran out of length
    std::sort(finished.begin(), finished.end(),
              [](const auto& a, const auto& b) { return a.score() > b.score(); });
    std::vector<std::vector<int>> out;
    for (const auto& f : finished) {
      if (f.ids.empty()) continue;
      out.push_back(f.ids);
      if (static_cast<int>(out.size()) >= k) break;
    }
    if (out.empty()) out.push_back({Vocabulary::kUnk});
    return out;
  }

  std::vector<int> ids;
  Vec h = model.initial_state(memory);
  int tok_in = Vocabulary::kBos;
  for (int t = 0; t < L; ++t) {
    auto step = model.decode_step(memory, h, tok_in);
    int tok;
    if (dc.kind == TokenDecode::Greedy) {
      Eigen::Index arg;
      Vec masked = step.logits;
      masked[Vocabulary::kPad] = -1e30f;
      masked[Vocabulary::kBos] = -1e30f;
      masked.maxCoeff(&arg);
      tok = static_cast<int>(arg);
    } else {
      if (!rng) throw std::invalid_argument("nucleus decoding needs an rng");
      Vec p = Seq2Seq::softmax(step.logits);
      p[Vocabulary::kPad] = 0.0f;
      p[Vocabulary::kBos] = 0.0f;
      p /= p.sum();
      // smallest set with cumulative probability >= nucleus_p
      std::vector<int> order(static_cast<std::size_t>(p.size()));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;
      });
      double cum = 0.0;
      std::size_t cut = 0;
      while (cut < order.size() && cum < dc.nucleus_p) {
        cum += static_cast<double>(p[order[cut]]);
        ++cut;
      }
      double u = rng->uniform() * cum;
      double acc = 0.0;
      tok = order[cut - 1];
      for (std::size_t i = 0; i < cut; ++i) {
        acc += static_cast<double>(p[order[i]]);
        if (u < acc) {
          tok = order[i];
          break;
        }
      }
    }
    if (tok == Vocabulary::kEos) break;
    ids.push_back(tok);
    h = step.h;
    tok_in = tok;
  }
  if (ids.empty()) ids.push_back(Vocabulary::kUnk);
  return {ids};
}

}  // namespace invertext
