#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/encoder.hpp"
#include "invertext/model.hpp"

namespace invertext {

struct InversionConfig {
  int steps = 20;           // correction steps T
  int beam_width = 4;       // sequence-level beam b
  DecodeConfig token_decode;
  int max_len = 16;
  double early_exit_cosine = 1.0 - 1e-9;
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 0 || steps > 1024) throw std::invalid_argument("steps must be in [0, 1024]");
    if (beam_width < 1 || beam_width > 64)
      throw std::invalid_argument("beam_width must be in [1, 64]");
    if (token_decode.kind == TokenDecode::Nucleus &&
        (token_decode.nucleus_p <= 0.0 || token_decode.nucleus_p > 1.0))
      throw std::invalid_argument("nucleus p must be in (0, 1]");
    if (token_decode.kind == TokenDecode::TokenBeam && token_decode.beam_k < 1)
      throw std::invalid_argument("token beam k must be >= 1");
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    if (early_exit_cosine <= 0.0 || early_exit_cosine > 1.0)
      throw std::invalid_argument("early_exit_cosine must be in (0, 1]");
  }
};

struct BeamHypothesis {
  std::string text;
  Embedding embedding;
  double score = -1.0;  // cosine to target_e
};

struct CorrectionState {
  Embedding target_e;
  std::string current_text;
  Embedding current_e;
  int step = 0;
};

struct StepTrace {
  std::string best_text;
  double best_cosine = -1.0;
  int dropped_candidates = 0;  // encoder failures in this step
};

struct InversionResult {
  std::string best_text;
  double best_cosine = -1.0;
  int steps_run = 0;
  std::vector<StepTrace> trace;
  double wall_time_s = 0.0;
  long encoder_calls = 0;
};

// Candidate texts proposed for one incumbent at one correction step.
using Proposer =
    std::function<std::vector<std::string>(const BeamHypothesis&, int step)>;

inline std::string generate_base(const Seq2Seq& base, const Vocabulary& vocab,
                                 TokenMode mode, const Embedding& e,
                                 const DecodeConfig& dc, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "base-decode"));
  Matrix mem = base.build_base_memory(e);
  std::vector<int> ids = decode_from_memory(base, mem, dc, &rng)[0];
  return detokenize(vocab.decode(ids, mode));
}

// Proposer backed by the trained corrector. Corrections decode greedily at
// the token level, or with a token-level beam when configured; nucleus is
// reserved for base generation.
inline Proposer corrector_proposer(const Seq2Seq& corrector, const Vocabulary& vocab,
                                   TokenMode mode, const Embedding& target_e,
                                   const InversionConfig& cfg) {
  DecodeConfig dc;
  if (cfg.token_decode.kind == TokenDecode::TokenBeam) {
    dc.kind = TokenDecode::TokenBeam;
    dc.beam_k = cfg.token_decode.beam_k;
  } else {
    dc.kind = TokenDecode::Greedy;
  }
  return [&corrector, &vocab, mode, target_e, dc](const BeamHypothesis& hyp,
                                                  int /*step*/) {
    std::vector<int> hyp_ids = vocab.encode(truncate_tokens(
        tokenize(hyp.text, mode), static_cast<std::size_t>(corrector.cfg.max_len)));
    Matrix mem = corrector.build_corrector_memory(target_e, hyp.embedding, hyp_ids);
    std::vector<std::string> out;
    for (const auto& ids : decode_from_memory(corrector, mem, dc, nullptr))
      out.push_back(detokenize(vocab.decode(ids, mode)));
    return out;
  };
}

inline int candidates_per_hypothesis(const InversionConfig& cfg) {
  return cfg.token_decode.kind == TokenDecode::TokenBeam
             ? std::max(1, cfg.token_decode.beam_k)
             : 1;
}

// One correction step: propose candidates for every incumbent, re-encode
// them through the black-box encoder, pool with the incumbents, dedupe by
// exact text, keep the top beam_width by cosine (ties to the smaller text).
inline std::vector<BeamHypothesis> correction_step(
    const Encoder& encoder, const Embedding& target_e,
    const std::vector<BeamHypothesis>& beam, const InversionConfig& cfg,
    const Proposer& propose, int step, long* encoder_calls, int* dropped) {
  if (beam.empty()) throw std::invalid_argument("correction_step: empty beam");
  std::vector<BeamHypothesis> pool = beam;
  std::set<std::string> seen;
  for (const auto& h : beam) seen.insert(h.text);
  for (const auto& incumbent : beam) {
    for (const auto& text : propose(incumbent, step)) {
      if (!seen.insert(text).second) continue;
      try {
        if (encoder_calls) ++*encoder_calls;
        Embedding e = encoder.encode(text);
        pool.push_back({text, e, cosine_sim(e, target_e)});
      } catch (const std::exception&) {
        if (dropped) ++*dropped;
      }
    }
  }
  std::sort(pool.begin(), pool.end(), [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (static_cast<int>(pool.size()) > cfg.beam_width)
    pool.resize(static_cast<std::size_t>(cfg.beam_width));
  return pool;
}

// Full attack: base hypothesis, then T correction steps of sequence-level
// beam search scored by cosine against the target embedding.
inline InversionResult invert(const Seq2Seq& corrector, const Seq2Seq& base,
                              const Encoder& encoder, const Vocabulary& vocab,
                              TokenMode mode, const Embedding& target_e,
                              const InversionConfig& cfg,
                              const std::vector<std::string>* initial_texts = nullptr,
                              const Proposer* custom_proposer = nullptr) {
  cfg.validate();
  if (static_cast<int>(target_e.size()) != encoder.dim())
    throw std::invalid_argument("invert: dimension mismatch");
  auto t0 = std::chrono::steady_clock::now();

  InversionResult res;
  std::vector<BeamHypothesis> beam;
  auto add_seed_text = [&](const std::string& text) {
    ++res.encoder_calls;
    Embedding e = encoder.encode(text);
    beam.push_back({text, e, cosine_sim(e, target_e)});
  };
  if (initial_texts && !initial_texts->empty()) {
    for (const auto& t : *initial_texts) add_seed_text(t);  // test hook
  } else {
    add_seed_text(generate_base(base, vocab, mode, target_e, cfg.token_decode, cfg.seed));
  }
  std::sort(beam.begin(), beam.end(), [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (static_cast<int>(beam.size()) > cfg.beam_width)
    beam.resize(static_cast<std::size_t>(cfg.beam_width));

  Proposer propose = custom_proposer
                         ? *custom_proposer
                         : corrector_proposer(corrector, vocab, mode, target_e, cfg);

  res.trace.push_back({beam.front().text, beam.front().score, 0});
  for (int t = 0; t < cfg.steps; ++t) {
    if (beam.front().score >= cfg.early_exit_cosine) break;
    int dropped = 0;
    beam = correction_step(encoder, target_e, beam, cfg, propose, t,
                           &res.encoder_calls, &dropped);
    ++res.steps_run;
    res.trace.push_back({beam.front().text, beam.front().score, dropped});
  }
  res.best_text = beam.front().text;
  res.best_cosine = beam.front().score;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace invertext
