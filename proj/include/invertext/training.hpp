#pragma once

#include <chrono>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/encoder.hpp"
#include "invertext/model.hpp"
#include "json.hpp"

namespace invertext {

struct TrainingConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 2e-3;
  double gradient_clip_norm = 1.0;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;

  void validate() const {
    if (epochs < 0 || batch_size < 1 || learning_rate <= 0 ||
        gradient_clip_norm <= 0)
      throw std::invalid_argument("invalid training config");
    if (validation_fraction <= 0.0 || validation_fraction > 0.5)
      throw std::invalid_argument("validation_fraction must be in (0, 0.5]");
  }
};

struct CorrectionExample {
  Embedding target_e;
  std::string hypothesis_text;
  Embedding hypothesis_e;
  std::string target_text;
  std::vector<int> hypothesis_ids;  // truncated to max_len
  std::vector<int> target_ids;
};

struct TrainLogEntry {
  int epoch;
  std::string split;  // train | val
  double loss;
  double wall_time_s;
};

namespace detail {

inline Seq2Seq zero_like(const Seq2Seq& model) {
  Seq2Seq g(model.cfg, model.creation_seed);
  for (auto& blk : g.parameter_blocks()) std::memset(blk.data, 0, blk.size * 4);
  return g;
}

inline void projector_backward(const Projector& p, Projector& g, const Vec& input,
                               const Vec& u, const Matrix& d_out) {
  Eigen::Map<const Vec> dvec(d_out.data(), d_out.size());
  g.W2 += dvec * u.transpose();
  g.b2 += dvec;
  Vec du = p.W2.transpose() * dvec;
  Vec da1 = (du.array() * (1.0f - u.array().square())).matrix();
  g.W1 += da1 * input.transpose();
  g.b1 += da1;
}

// One training sample: the prepared raw memory plus its provenance so the
// gradient can be routed back into projectors / token embeddings.
struct TrainSample {
  Vec target_e;
  Vec hyp_e;                 // corrector only
  std::vector<int> hyp_ids;  // corrector only
  std::vector<int> target_ids;
};

// Teacher-forced cross-entropy forward+backward; returns mean loss per token.
inline double forward_backward(const Seq2Seq& model, const TrainSample& sample,
                               Seq2Seq* grads) {
  const int m = model.cfg.hidden;
  const int s = model.cfg.pseudo_tokens;
  const float inv_sqrt_m = 1.0f / std::sqrt(static_cast<float>(m));

  // memory forward with caches
  Vec u_t, u_h, u_d;
  Matrix raw;
  if (model.cfg.corrective) {
    const int n = static_cast<int>(sample.hyp_ids.size());
    raw.resize(m, 3 * s + n);
    raw.block(0, 0, m, s) = model.proj_target.apply(sample.target_e, &u_t);
    raw.block(0, s, m, s) = model.proj_hypothesis.apply(sample.hyp_e, &u_h);
    raw.block(0, 2 * s, m, s) =
        model.proj_difference.apply((sample.target_e - sample.hyp_e).eval(), &u_d);
    for (int j = 0; j < n; ++j)
      raw.col(3 * s + j) = model.Etok.col(sample.hyp_ids[static_cast<std::size_t>(j)]) +
                           model.Ppos.col(j);
  } else {
    raw = model.proj_target.apply(sample.target_e, &u_t);
  }
  Matrix mem = model.encode_memory(raw);
  const Eigen::Index K = mem.cols();
  Vec mem_mean = mem.rowwise().mean();
  Vec h0 = (model.Winit * mem_mean + model.binit).array().tanh().matrix();

  // teacher-forced decode
  const auto& y = sample.target_ids;
  const int steps = static_cast<int>(y.size()) + 1;  // + eos
  std::vector<int> dec_in(static_cast<std::size_t>(steps));
  std::vector<int> target(static_cast<std::size_t>(steps));
  dec_in[0] = Vocabulary::kBos;
  for (int t = 1; t < steps; ++t) dec_in[static_cast<std::size_t>(t)] = y[static_cast<std::size_t>(t - 1)];
  for (int t = 0; t + 1 < steps; ++t) target[static_cast<std::size_t>(t)] = y[static_cast<std::size_t>(t)];
  target[static_cast<std::size_t>(steps - 1)] = Vocabulary::kEos;

  std::vector<Seq2Seq::StepOut> outs(static_cast<std::size_t>(steps));
  std::vector<Vec> h_prevs(static_cast<std::size_t>(steps));
  Vec h = h0;
  double loss = 0.0;
  for (int t = 0; t < steps; ++t) {
    h_prevs[static_cast<std::size_t>(t)] = h;
    outs[static_cast<std::size_t>(t)] =
        model.decode_step(mem, h, dec_in[static_cast<std::size_t>(t)]);
    const Vec lp = Seq2Seq::log_softmax(outs[static_cast<std::size_t>(t)].logits);
    loss -= static_cast<double>(lp[target[static_cast<std::size_t>(t)]]);
    h = outs[static_cast<std::size_t>(t)].h;
  }
  loss /= steps;
  if (!grads) return loss;

  const float scale = 1.0f / static_cast<float>(steps);
  Seq2Seq& g = *grads;
  Matrix d_mem = Matrix::Zero(m, K);
  Vec dh_next = Vec::Zero(m);
  for (int t = steps - 1; t >= 0; --t) {
    const auto& so = outs[static_cast<std::size_t>(t)];
    const Vec& h_prev = h_prevs[static_cast<std::size_t>(t)];
    const Vec x = model.Etok.col(dec_in[static_cast<std::size_t>(t)]);

    Vec dlogits = Seq2Seq::softmax(so.logits) * scale;
    dlogits[target[static_cast<std::size_t>(t)]] -= scale;
    g.Wout += dlogits * so.o.transpose();
    g.bout += dlogits;
    Vec do_ = model.Wout.transpose() * dlogits;
    Vec da = (do_.array() * (1.0f - so.o.array().square())).matrix();
    Vec cat(2 * m);
    cat << so.h, so.context;
    g.Wc += da * cat.transpose();
    g.bc += da;
    Vec dcat = model.Wc.transpose() * da;
    Vec dh = dcat.head(m) + dh_next;
    Vec dc = dcat.tail(m);

    // attention backward
    Vec dalpha = mem.transpose() * dc;
    float sdot = so.attn.dot(dalpha);
    Vec ds = (so.attn.array() * (dalpha.array() - sdot)).matrix();
    dh += mem * ds * inv_sqrt_m;
    d_mem += (so.h * ds.transpose()) * inv_sqrt_m + dc * so.attn.transpose();

    // GRU backward
    Vec dz = (dh.array() * (so.hc.array() - h_prev.array())).matrix();
    Vec dhc = (dh.array() * so.z.array()).matrix();
    Vec dh_prev = (dh.array() * (1.0f - so.z.array())).matrix();
    Vec dah = (dhc.array() * (1.0f - so.hc.array().square())).matrix();
    Vec rh = (so.r.array() * h_prev.array()).matrix();
    g.Wh += dah * x.transpose();
    g.Uh += dah * rh.transpose();
    g.bh += dah;
    Vec dx = model.Wh.transpose() * dah;
    Vec drh = model.Uh.transpose() * dah;
    Vec dr = (drh.array() * h_prev.array()).matrix();
    dh_prev += (drh.array() * so.r.array()).matrix();
    Vec daz = (dz.array() * so.z.array() * (1.0f - so.z.array())).matrix();
    g.Wz += daz * x.transpose();
    g.Uz += daz * h_prev.transpose();
    g.bz += daz;
    dx += model.Wz.transpose() * daz;
    dh_prev += model.Uz.transpose() * daz;
    Vec dar = (dr.array() * so.r.array() * (1.0f - so.r.array())).matrix();
    g.Wr += dar * x.transpose();
    g.Ur += dar * h_prev.transpose();
    g.br += dar;
    dx += model.Wr.transpose() * dar;
    dh_prev += model.Ur.transpose() * dar;

    g.Etok.col(dec_in[static_cast<std::size_t>(t)]) += dx;
    dh_next = dh_prev;
  }

  // initial-state layer
  Vec dai = (dh_next.array() * (1.0f - h0.array().square())).matrix();
  g.Winit += dai * mem_mean.transpose();
  g.binit += dai;
  Vec dmean = model.Winit.transpose() * dai / static_cast<float>(K);
  d_mem.colwise() += dmean;

  // memory encoder layer
  Matrix dam = (d_mem.array() * (1.0f - mem.array().square())).matrix();
  g.Wenc += dam * raw.transpose();
  g.benc += dam.rowwise().sum();
  Matrix d_raw = model.Wenc.transpose() * dam;

  // route into projectors and embeddings
  if (model.cfg.corrective) {
    projector_backward(model.proj_target, g.proj_target, sample.target_e, u_t,
                       d_raw.block(0, 0, m, s));
    projector_backward(model.proj_hypothesis, g.proj_hypothesis, sample.hyp_e, u_h,
                       d_raw.block(0, s, m, s));
    projector_backward(model.proj_difference, g.proj_difference,
                       (sample.target_e - sample.hyp_e).eval(), u_d,
                       d_raw.block(0, 2 * s, m, s));
    for (int j = 0; j < static_cast<int>(sample.hyp_ids.size()); ++j) {
      g.Etok.col(sample.hyp_ids[static_cast<std::size_t>(j)]) += d_raw.col(3 * s + j);
      g.Ppos.col(j) += d_raw.col(3 * s + j);
    }
  } else {
    projector_backward(model.proj_target, g.proj_target, sample.target_e, u_t, d_raw);
  }
  return loss;
}

class Adam {
 public:
  Adam(Seq2Seq& model, double lr, double clip)
      : lr_(lr), clip_(clip), m_state_(zero_like(model)), v_state_(zero_like(model)) {}

  void step(Seq2Seq& model, Seq2Seq& grads) {
    auto gb = grads.parameter_blocks();
    auto wb = model.parameter_blocks();
    auto mb = m_state_.parameter_blocks();
    auto vb = v_state_.parameter_blocks();

    double sq = 0.0;
    for (const auto& blk : gb)
      for (std::size_t i = 0; i < blk.size; ++i)
        sq += static_cast<double>(blk.data[i]) * blk.data[i];
    double norm = std::sqrt(sq);
    float gscale = norm > clip_ ? static_cast<float>(clip_ / norm) : 1.0f;

    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    float alpha = static_cast<float>(lr_ * std::sqrt(bc2) / bc1);
    for (std::size_t b = 0; b < gb.size(); ++b) {
      for (std::size_t i = 0; i < gb[b].size; ++i) {
        float gr = gb[b].data[i] * gscale;
        float& mm = mb[b].data[i];
        float& vv = vb[b].data[i];
        mm = static_cast<float>(beta1_) * mm + (1.0f - static_cast<float>(beta1_)) * gr;
        vv = static_cast<float>(beta2_) * vv + (1.0f - static_cast<float>(beta2_)) * gr * gr;
        wb[b].data[i] -= alpha * mm / (std::sqrt(vv) + eps_);
      }
    }
  }

 private:
  double lr_, clip_;
  double beta1_ = 0.9, beta2_ = 0.999;
  float eps_ = 1e-8f;
  long t_ = 0;
  Seq2Seq m_state_, v_state_;
};

inline double evaluate_loss(const Seq2Seq& model, const std::vector<TrainSample>& set) {
  double total = 0.0;
  for (const auto& s : set) total += forward_backward(model, s, nullptr);
  return set.empty() ? 0.0 : total / static_cast<double>(set.size());
}

inline void run_training(Seq2Seq& model, std::vector<TrainSample> samples,
                         const TrainingConfig& cfg,
                         std::vector<TrainLogEntry>* log) {
  cfg.validate();
  if (samples.size() < 2) throw std::invalid_argument("training needs >= 2 samples");

  Rng split_rng(derive_seed(cfg.seed, "train-split"));
  split_rng.shuffle(samples);
  std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg.validation_fraction *
                                  static_cast<double>(samples.size())));
  std::vector<TrainSample> val(samples.end() - static_cast<std::ptrdiff_t>(n_val),
                               samples.end());
  samples.resize(samples.size() - n_val);

  Adam opt(model, cfg.learning_rate, cfg.gradient_clip_norm);
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng order_rng(derive_seed(cfg.seed, "epoch-" + std::to_string(epoch)));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    double train_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      Seq2Seq grads = zero_like(model);
      std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      double batch_loss = 0.0;
      for (std::size_t i = b; i < end; ++i)
        batch_loss += forward_backward(model, samples[order[i]], &grads);
      batch_loss /= static_cast<double>(end - b);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("divergence at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batches));
      float inv = 1.0f / static_cast<float>(end - b);
      for (auto& blk : grads.parameter_blocks())
        for (std::size_t i = 0; i < blk.size; ++i) blk.data[i] *= inv;
      opt.step(model, grads);
      train_loss += batch_loss;
      ++batches;
    }
    if (batches > 0) train_loss /= static_cast<double>(batches);
    double val_loss = evaluate_loss(model, val);
    if (!std::isfinite(val_loss))
      throw std::runtime_error("divergence at epoch " + std::to_string(epoch) +
                               " (validation)");
    if (log) {
      log->push_back({epoch, "train", train_loss, elapsed()});
      log->push_back({epoch, "val", val_loss, elapsed()});
    }
  }
}

}  // namespace detail

inline std::vector<detail::TrainSample> base_samples_from_corpus(
    const std::vector<std::string>& texts, const ToyEncoder& encoder,
    const Vocabulary& vocab, int max_len) {
  std::vector<detail::TrainSample> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    detail::TrainSample s;
    TokenSequence seq = truncate_tokens(tokenize(text, encoder.mode()),
                                        static_cast<std::size_t>(max_len));
    s.target_ids = vocab.encode(seq);
    s.target_e = encoder.encode(text);
    out.push_back(std::move(s));
  }
  return out;
}

// Base hypothesis model: token-level cross-entropy of x given
// proj_target(encode(x)), teacher forcing.
inline Seq2Seq train_base(const std::vector<std::string>& corpus,
                          const ToyEncoder& encoder, const Vocabulary& vocab,
                          const ModelConfig& mc, const TrainingConfig& cfg,
                          std::vector<TrainLogEntry>* log = nullptr) {
  ModelConfig c = mc;
  c.corrective = false;
  c.dim = encoder.dim();
  c.vocab_size = static_cast<int>(vocab.size());
  Seq2Seq model(c, cfg.seed);
  auto samples = base_samples_from_corpus(corpus, encoder, vocab, c.max_len);
  detail::run_training(model, std::move(samples), cfg, log);
  return model;
}

// Hypotheses come from the base model under nucleus sampling (p = 0.9) for
// diversity; every emitted example satisfies the re-encoding coherence
// invariant by construction.
inline std::vector<CorrectionExample> make_correction_dataset(
    const Seq2Seq& base, const ToyEncoder& encoder, const Vocabulary& vocab,
    const std::vector<std::string>& corpus, std::uint64_t seed,
    std::size_t* skipped = nullptr) {
  std::vector<CorrectionExample> out;
  std::size_t skips = 0;
  Rng rng(derive_seed(seed, "correction-hypotheses"));
  DecodeConfig dc;
  dc.kind = TokenDecode::Nucleus;
  dc.nucleus_p = 0.9;
  for (const auto& text : corpus) {
    try {
      CorrectionExample ex;
      ex.target_text = text;
      TokenSequence seq = truncate_tokens(tokenize(text, encoder.mode()),
                                          static_cast<std::size_t>(base.cfg.max_len));
      ex.target_ids = vocab.encode(seq);
      ex.target_e = encoder.encode(text);
      Matrix mem = base.build_base_memory(ex.target_e);
      std::vector<int> hyp_ids = decode_from_memory(base, mem, dc, &rng)[0];
      ex.hypothesis_text = detokenize(vocab.decode(hyp_ids, encoder.mode()));
      ex.hypothesis_e = encoder.encode(ex.hypothesis_text);
      ex.hypothesis_ids = vocab.encode(truncate_tokens(
          tokenize(ex.hypothesis_text, encoder.mode()),
          static_cast<std::size_t>(base.cfg.max_len)));
      out.push_back(std::move(ex));
    } catch (const std::exception&) {
      ++skips;
    }
  }
  if (skipped) *skipped = skips;
  return out;
}

inline Seq2Seq train_corrector(const std::vector<CorrectionExample>& dataset,
                               const ModelConfig& mc, const TrainingConfig& cfg,
                               std::vector<TrainLogEntry>* log = nullptr) {
  ModelConfig c = mc;
  c.corrective = true;
  if (dataset.empty()) throw std::invalid_argument("empty correction dataset");
  c.dim = static_cast<int>(dataset.front().target_e.size());
  Seq2Seq model(c, cfg.seed);
  std::vector<detail::TrainSample> samples;
  samples.reserve(dataset.size());
  for (const auto& ex : dataset) {
    detail::TrainSample s;
    s.target_e = ex.target_e;
    s.hyp_e = ex.hypothesis_e;
    s.hyp_ids = ex.hypothesis_ids;
    s.target_ids = ex.target_ids;
    samples.push_back(std::move(s));
  }
  detail::run_training(model, std::move(samples), cfg, log);
  return model;
}

// ---- checkpoints: JSON manifest + float32 little-endian blob ----

inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const Seq2Seq& model, const std::string& stem,
                            std::uint64_t vocab_hash) {
  Seq2Seq& mut = const_cast<Seq2Seq&>(model);
  auto blocks = mut.parameter_blocks();
  std::string blob;
  for (const auto& blk : blocks)
    blob.append(reinterpret_cast<const char*>(blk.data), blk.size * 4);
  std::uint64_t blob_hash = fnv1a(blob.data(), blob.size());

  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& blk : blocks) shapes.push_back(blk.size);
  nlohmann::json manifest = {
      {"format", "invertext-checkpoint"},
      {"version", kCheckpointVersion},
      {"corrective", model.cfg.corrective},
      {"dim", model.cfg.dim},
      {"hidden", model.cfg.hidden},
      {"pseudo_tokens", model.cfg.pseudo_tokens},
      {"max_len", model.cfg.max_len},
      {"vocab_size", model.cfg.vocab_size},
      {"vocab_hash", vocab_hash},
      {"creation_seed", model.creation_seed},
      {"block_sizes", shapes},
      {"blob_hash", blob_hash}};
  std::ofstream jf(stem + ".json");
  if (!jf) throw std::runtime_error("cannot write " + stem + ".json");
  jf << manifest.dump(2) << "\n";
  std::ofstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot write " + stem + ".bin");
  bf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

inline Seq2Seq load_checkpoint(const std::string& stem, std::uint64_t vocab_hash) {
  std::ifstream jf(stem + ".json");
  if (!jf) throw std::runtime_error("missing checkpoint manifest " + stem + ".json");
  nlohmann::json manifest = nlohmann::json::parse(jf);
  if (manifest.value("format", "") != "invertext-checkpoint")
    throw std::runtime_error("not a checkpoint manifest: " + stem);
  if (manifest.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint version mismatch");
  if (manifest.at("vocab_hash").get<std::uint64_t>() != vocab_hash)
    throw std::runtime_error("vocabulary hash mismatch");

  ModelConfig c;
  c.corrective = manifest.at("corrective").get<bool>();
  c.dim = manifest.at("dim").get<int>();
  c.hidden = manifest.at("hidden").get<int>();
  c.pseudo_tokens = manifest.at("pseudo_tokens").get<int>();
  c.max_len = manifest.at("max_len").get<int>();
  c.vocab_size = manifest.at("vocab_size").get<int>();
  Seq2Seq model(c, manifest.at("creation_seed").get<std::uint64_t>());

  auto blocks = model.parameter_blocks();
  auto sizes = manifest.at("block_sizes");
  if (sizes.size() != blocks.size()) throw std::runtime_error("checkpoint shape mismatch");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (sizes[i].get<std::size_t>() != blocks[i].size)
      throw std::runtime_error("checkpoint shape mismatch");

  std::ifstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("missing checkpoint blob " + stem + ".bin");
  std::string blob((std::istreambuf_iterator<char>(bf)),
                   std::istreambuf_iterator<char>());
  std::size_t expect = 0;
  for (const auto& blk : blocks) expect += blk.size * 4;
  if (blob.size() != expect ||
      fnv1a(blob.data(), blob.size()) != manifest.at("blob_hash").get<std::uint64_t>())
    throw std::runtime_error("corrupt checkpoint");
  std::size_t off = 0;
  for (auto& blk : blocks) {
    std::memcpy(blk.data, blob.data() + off, blk.size * 4);
    off += blk.size * 4;
  }
  return model;
}

inline void write_training_log(const std::vector<TrainLogEntry>& log,
                               const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& e : log) {
    nlohmann::json j = {{"epoch", e.epoch}, {"split", e.split},
                        {"loss", e.loss}, {"wall_time", e.wall_time_s}};
    f << j.dump() << "\n";
  }
}

}  // namespace invertext
