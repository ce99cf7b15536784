// invertext: black-box embedding inversion toolkit CLI.
//
// Typical flow:
//   invertext datagen       --config cfg.json --out data/
//   invertext train-base    --config cfg.json --out run/
//   invertext train-corrector --config cfg.json --out run/
//   invertext eval          --config cfg.json --out run/
//   invertext verify        --out run/

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "invertext/harness.hpp"
#include "invertext/remote_encoder.hpp"

namespace fs = std::filesystem;
using namespace invertext;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

ExperimentConfig load_config(const GlobalArgs& g) {
  if (g.config_path.empty()) throw std::runtime_error("--config is required");
  std::ifstream f(g.config_path);
  if (!f) throw std::runtime_error("cannot read " + g.config_path);
  nlohmann::json j = nlohmann::json::parse(f);
  if (g.seed_set) j["seed"] = g.seed;
  if (!g.out_dir.empty()) j["output_dir"] = g.out_dir;
  return ExperimentConfig::from_json(j);
}

Corpus load_or_generate_corpus(const ExperimentConfig& cfg) {
  if (!cfg.corpus_path.empty())
    return load_jsonl_corpus(cfg.corpus_path, "text",
                             static_cast<std::size_t>(cfg.sample_size) * 10,
                             cfg.seed);
  Corpus c = generate_synthetic_corpus(cfg.seed, cfg.synthetic_size,
                                       cfg.synthetic_vocab, cfg.synthetic_len_min,
                                       cfg.synthetic_len_max);
  c.token_mode = cfg.token_mode;
  return c;
}

struct Artifacts {
  Vocabulary vocab;
  std::unique_ptr<ToyEncoder> encoder;
  std::unique_ptr<Seq2Seq> base;
  std::unique_ptr<Seq2Seq> corrector;
};

// Loads everything an eval needs; fails before any inversion work starts.
Artifacts load_artifacts(const ExperimentConfig& cfg, bool need_corrector) {
  Artifacts a;
  if (cfg.vocab_path.empty()) throw std::runtime_error("config missing vocab path");
  if (cfg.encoder_manifest.empty())
    throw std::runtime_error("config missing encoder_manifest");
  if (cfg.base_checkpoint.empty())
    throw std::runtime_error("config missing base_checkpoint");
  if (need_corrector && cfg.corrector_checkpoint.empty())
    throw std::runtime_error("config missing corrector_checkpoint");
  a.vocab = load_vocabulary(cfg.vocab_path);
  a.encoder = std::make_unique<ToyEncoder>(
      ToyEncoder::load_manifest(cfg.encoder_manifest, a.vocab));
  a.base = std::make_unique<Seq2Seq>(
      load_checkpoint(cfg.base_checkpoint, a.vocab.hash()));
  if (need_corrector)
    a.corrector = std::make_unique<Seq2Seq>(
        load_checkpoint(cfg.corrector_checkpoint, a.vocab.hash()));
  return a;
}

Pipeline make_pipeline(const Artifacts& a, TokenMode mode) {
  return {a.encoder.get(), &a.vocab, a.base.get(), a.corrector.get(), mode};
}

std::vector<CorpusEntry> sample_entries(const Corpus& c, int n, std::uint64_t seed) {
  if (static_cast<int>(c.entries.size()) <= n) return c.entries;
  std::vector<std::size_t> idx(c.entries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "eval-sample"));
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  std::vector<CorpusEntry> out;
  for (std::size_t i : idx) out.push_back(c.entries[i]);
  return out;
}

int cmd_datagen(const GlobalArgs& g) {
  ExperimentConfig cfg = load_config(g);
  fs::create_directories(cfg.output_dir);
  if (cfg.kind == "password") {
    for (auto strength : {PasswordStrength::Easy, PasswordStrength::Medium,
                          PasswordStrength::Hard}) {
      PasswordSpec spec{strength, static_cast<std::size_t>(cfg.sample_size),
                        cfg.seed};
      Corpus c = generate_passwords(spec);
      std::string stem = (fs::path(cfg.output_dir) /
                          ("passwords-" + strength_name(strength))).string();
      write_jsonl_corpus(c, stem + ".jsonl");
      write_provenance(c, stem + ".provenance.json",
                       {{"count", spec.count}, {"seed", spec.seed}});
    }
  } else {
    Corpus c = load_or_generate_corpus(cfg);
    std::string stem = (fs::path(cfg.output_dir) / "corpus").string();
    write_jsonl_corpus(c, stem + ".jsonl");
    write_provenance(c, stem + ".provenance.json",
                     {{"size", cfg.synthetic_size},
                      {"vocab_size", cfg.synthetic_vocab},
                      {"len_min", cfg.synthetic_len_min},
                      {"len_max", cfg.synthetic_len_max},
                      {"seed", cfg.seed}});
  }
  std::cout << "wrote corpus files to " << cfg.output_dir << "\n";
  return 0;
}

// Shared by train-base and train-corrector: corpus -> vocab + encoder.
struct TrainContext {
  Corpus corpus;
  Vocabulary vocab;
  std::unique_ptr<ToyEncoder> encoder;
};

TrainContext make_train_context(const ExperimentConfig& cfg) {
  TrainContext tc;
  tc.corpus = load_or_generate_corpus(cfg);
  tc.corpus.token_mode = cfg.token_mode;
  std::vector<TokenSequence> seqs;
  for (const auto& e : tc.corpus.entries)
    seqs.push_back(tokenize(e.text, cfg.token_mode));
  tc.vocab = Vocabulary::build(seqs);
  EncoderSpec spec;
  spec.dim = 64;
  spec.max_tokens = std::max(32, cfg.max_len);
  tc.encoder = std::make_unique<ToyEncoder>(spec, tc.vocab, cfg.token_mode,
                                            derive_seed(cfg.seed, "encoder"));
  return tc;
}

int cmd_train_base(const GlobalArgs& g) {
  ExperimentConfig cfg = load_config(g);
  fs::create_directories(cfg.output_dir);
  TrainContext tc = make_train_context(cfg);
  ModelConfig mc;
  mc.max_len = cfg.max_len;
  TrainingConfig trc;
  trc.seed = derive_seed(cfg.seed, "train-base");
  std::vector<TrainLogEntry> log;
  Seq2Seq base = train_base(tc.corpus.texts(), *tc.encoder, tc.vocab, mc, trc, &log);
  fs::path out(cfg.output_dir);
  save_vocabulary(tc.vocab, (out / "vocab.json").string());
  tc.encoder->save_manifest((out / "encoder.json").string());
  save_checkpoint(base, (out / "base").string(), tc.vocab.hash());
  write_training_log(log, (out / "base-train-log.jsonl").string());
  std::cout << "base checkpoint written to " << (out / "base").string()
            << " (params: " << base.parameter_count() << ")\n";
  return 0;
}

int cmd_train_corrector(const GlobalArgs& g) {
  ExperimentConfig cfg = load_config(g);
  fs::path out(cfg.output_dir);
  Vocabulary vocab = load_vocabulary((out / "vocab.json").string());
  ToyEncoder encoder =
      ToyEncoder::load_manifest((out / "encoder.json").string(), vocab);
  Seq2Seq base = load_checkpoint((out / "base").string(), vocab.hash());
  Corpus corpus = load_or_generate_corpus(cfg);
  std::size_t skipped = 0;
  auto dataset = make_correction_dataset(base, encoder, vocab, corpus.texts(),
                                         derive_seed(cfg.seed, "hypotheses"),
                                         &skipped);
  ModelConfig mc;
  mc.max_len = cfg.max_len;
  mc.vocab_size = static_cast<int>(vocab.size());
  TrainingConfig trc;
  trc.seed = derive_seed(cfg.seed, "train-corrector");
  std::vector<TrainLogEntry> log;
  Seq2Seq corrector = train_corrector(dataset, mc, trc, &log);
  save_checkpoint(corrector, (out / "corrector").string(), vocab.hash());
  write_training_log(log, (out / "corrector-train-log.jsonl").string());
  std::cout << "corrector checkpoint written to " << (out / "corrector").string()
            << " (params: " << corrector.parameter_count()
            << ", skipped hypotheses: " << skipped << ")\n";
  return 0;
}

int cmd_invert(const GlobalArgs& g, const std::string& text) {
  ExperimentConfig cfg = load_config(g);
  Artifacts a = load_artifacts(cfg, true);
  InversionConfig inv = cfg.inversion();
  Embedding target = a.encoder->encode(text);
  InversionResult res = invert(*a.corrector, *a.base, *a.encoder, a.vocab,
                               cfg.token_mode, target, inv);
  nlohmann::json j = {{"best_text", res.best_text},
                      {"best_cosine", res.best_cosine},
                      {"steps_run", res.steps_run},
                      {"encoder_calls", res.encoder_calls},
                      {"wall_time_s", res.wall_time_s}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_defend(const GlobalArgs& g, const std::string& scheme, double lambda) {
  ExperimentConfig cfg = load_config(g);
  Artifacts a = load_artifacts(cfg, false);
  Corpus corpus = load_or_generate_corpus(cfg);
  fs::create_directories(cfg.output_dir);
  std::string path = (fs::path(cfg.output_dir) / "defended.jsonl").string();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  Rng rng(derive_seed(cfg.seed, "defend"));
  for (const auto& e : corpus.entries) {
    Embedding emb = a.encoder->encode(e.text);
    nlohmann::json j = {{"_id", e.id}};
    if (scheme == "absmax") {
      j.update(quantized_record(absmax_quantize(emb)));
    } else if (scheme == "zeropoint") {
      j.update(quantized_record(zeropoint_quantize(emb)));
    } else if (scheme == "noise") {
      Embedding d = noise_embed(emb, lambda, rng);
      std::vector<double> vals(d.data(), d.data() + d.size());
      j["embedding"] = vals;
      j["scheme"] = "noise";
      j["lambda"] = lambda;
    } else {
      throw std::runtime_error("unknown scheme: " + scheme);
    }
    f << j.dump() << "\n";
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_eval(const GlobalArgs& g) {
  ExperimentConfig cfg = load_config(g);
  Artifacts a = load_artifacts(cfg, true);
  Pipeline p = make_pipeline(a, cfg.token_mode);
  InversionConfig inv = cfg.inversion();
  std::vector<ResultRecord> records;
  nlohmann::json report = {{"kind", cfg.kind}};
  std::vector<CsvTable> tables;

  if (cfg.kind == "in_domain") {
    Corpus corpus = load_or_generate_corpus(cfg);
    auto entries = sample_entries(corpus, cfg.sample_size, cfg.seed);
    std::vector<std::pair<int, int>> cells = {{0, cfg.inv_beam},
                                              {cfg.inv_steps, cfg.inv_beam}};
    auto r = run_in_domain(p, entries, cells, inv, cfg.seed);
    records = std::move(r.records);
    nlohmann::json cj;
    for (const auto& [cell, rep] : r.cells) cj[cell] = detail::report_json(rep);
    report["cells"] = cj;
  } else if (cfg.kind == "ood") {
    std::map<std::string, std::vector<CorpusEntry>> corpora;
    for (const auto& [name, path] : cfg.ood_corpora) {
      Corpus c = load_jsonl_corpus(path, "text",
                                   static_cast<std::size_t>(cfg.sample_size),
                                   cfg.seed);
      corpora[name] = c.entries;
    }
    auto reps = run_ood(p, corpora, inv, cfg.seed, &records);
    nlohmann::json cj;
    for (const auto& [name, rep] : reps) cj["ood:" + name] = detail::report_json(rep);
    report["cells"] = cj;
  } else if (cfg.kind == "length_sensitivity") {
    Corpus corpus = load_or_generate_corpus(cfg);
    auto entries = sample_entries(corpus, cfg.sample_size, cfg.seed);
    auto buckets = run_length_sensitivity(p, entries, inv, cfg.seed, &records);
    CsvTable t{"length_buckets", {"bucket", "mean_bleu", "count", "reliable"}, {}, false};
    nlohmann::json bj = nlohmann::json::array();
    for (const auto& b : buckets) {
      t.rows.push_back({std::to_string(b.bucket), std::to_string(b.mean_bleu),
                        std::to_string(b.count), b.reliable ? "1" : "0"});
      bj.push_back({{"bucket", b.bucket}, {"mean_bleu", b.mean_bleu},
                    {"count", b.count}, {"reliable", b.reliable}});
    }
    report["length_buckets"] = bj;
    tables.push_back(t);
  } else if (cfg.kind == "noise_defense" || cfg.kind == "quant_defense") {
    Corpus corpus = load_or_generate_corpus(cfg);
    auto entries = sample_entries(corpus, cfg.sample_size, cfg.seed);
    std::vector<DefenseRow> rows =
        cfg.kind == "noise_defense"
            ? run_noise_defense(p, corpus, entries, inv, cfg.lambda_grid,
                                cfg.seed, &records)
            : run_quant_defense(p, corpus, entries, inv, cfg.seed, &records);
    CsvTable t{"defense", {"label", "bleu", "ndcg_at_10"}, {}, false};
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& r : rows) {
      t.rows.push_back({r.label, std::to_string(r.bleu), std::to_string(r.ndcg)});
      rj.push_back({{"label", r.label}, {"bleu", r.bleu}, {"ndcg_at_10", r.ndcg}});
    }
    report["defense_rows"] = rj;
    tables.push_back(t);
  } else if (cfg.kind == "password") {
    std::map<std::string, std::vector<CorpusEntry>> per_strength;
    for (auto strength : {PasswordStrength::Easy, PasswordStrength::Medium,
                          PasswordStrength::Hard}) {
      PasswordSpec spec{strength, static_cast<std::size_t>(cfg.sample_size),
                        cfg.seed};
      per_strength[strength_name(strength)] = generate_passwords(spec).entries;
    }
    auto rows = run_password(p, per_strength, inv, cfg.seed, &records);
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& r : rows)
      rj.push_back({{"strength", r.strength}, {"exact_match", r.exact_match},
                    {"token_f1", r.token_f1_score}, {"n", r.n}});
    report["password_rows"] = rj;
  } else if (cfg.kind == "param_sweep") {
    Corpus corpus = load_or_generate_corpus(cfg);
    auto entries = sample_entries(corpus, cfg.sample_size, cfg.seed);
    auto cells = run_param_sweep(p, entries, inv, cfg.steps_grid, cfg.beam_grid,
                                 cfg.seed, &records);
    CsvTable grid{"sweep_grid",
                  {"steps", "beam_width", "mean_bleu", "mean_runtime_s", "failed"},
                  {}, true};
    nlohmann::json cj = nlohmann::json::array();
    for (const auto& c : cells) {
      grid.rows.push_back({std::to_string(c.steps), std::to_string(c.beam_width),
                           std::to_string(c.mean_bleu),
                           std::to_string(c.mean_runtime_s),
                           c.failed ? "1" : "0"});
      cj.push_back({{"steps", c.steps}, {"beam_width", c.beam_width},
                    {"mean_bleu", c.mean_bleu}, {"failed", c.failed}});
    }
    report["sweep_cells"] = cj;
    tables.push_back(grid);
    CsvTable front{"pareto_front",
                   {"mean_runtime_s", "mean_bleu", "steps", "beam_width"},
                   {}, true};
    for (const auto& pt : sweep_to_pareto(cells))
      front.rows.push_back({std::to_string(pt.mean_runtime_s),
                            std::to_string(pt.mean_bleu),
                            std::to_string(pt.steps),
                            std::to_string(pt.beam_width)});
    tables.push_back(front);
  }

  std::string manifest = write_results(records, report, tables, cfg.echo(),
                                       cfg.seed, cfg.output_dir);
  std::cout << "results written; manifest: " << manifest << "\n";
  return 0;
}

int cmd_verify(const GlobalArgs& g) {
  std::string dir = g.out_dir;
  TokenMode mode = TokenMode::Word;
  int max_len = 16;
  if (!g.config_path.empty()) {
    ExperimentConfig cfg = load_config(g);
    dir = cfg.output_dir;
    mode = cfg.token_mode;
    max_len = cfg.max_len;
  }
  if (dir.empty()) throw std::runtime_error("--out or --config required");
  VerifyOutcome out = verify_results(dir, mode, max_len);
  for (const auto& p : out.problems) std::cerr << "FAIL: " << p << "\n";
  std::cout << (out.ok ? "verify: OK" : "verify: FAILED") << "\n";
  return out.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invertext: embedding inversion attack, defenses, and evaluation"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed override");
  app.add_option("--out", g.out_dir, "output directory override");

  auto* datagen = app.add_subcommand("datagen", "generate corpora / passwords");
  auto* train_base_cmd = app.add_subcommand("train-base", "train the base model");
  auto* train_corr = app.add_subcommand("train-corrector", "train the corrector");
  auto* invert_cmd = app.add_subcommand("invert", "invert a single text's embedding");
  std::string invert_text;
  invert_cmd->add_option("--text", invert_text, "text to encode and invert")->required();
  auto* defend = app.add_subcommand("defend", "emit defended embeddings");
  std::string scheme = "absmax";
  double lambda = 0.01;
  defend->add_option("--scheme", scheme, "noise | absmax | zeropoint");
  defend->add_option("--lambda", lambda, "noise scale");
  auto* eval = app.add_subcommand("eval", "run the configured experiment");
  auto* sweep = app.add_subcommand("sweep", "run a steps x beam sweep");
  auto* verify = app.add_subcommand("verify", "audit persisted results");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (datagen->parsed()) return cmd_datagen(g);
    if (train_base_cmd->parsed()) return cmd_train_base(g);
    if (train_corr->parsed()) return cmd_train_corrector(g);
    if (invert_cmd->parsed()) return cmd_invert(g, invert_text);
    if (defend->parsed()) return cmd_defend(g, scheme, lambda);
    if (eval->parsed() || sweep->parsed()) return cmd_eval(g);
    if (verify->parsed()) return cmd_verify(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
