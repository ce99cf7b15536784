#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/data.hpp"
#include "invertext/defense.hpp"
#include "invertext/inversion.hpp"
#include "invertext/metrics.hpp"
#include "invertext/retrieval.hpp"
#include "invertext/training.hpp"
#include "json.hpp"

namespace invertext {

inline constexpr const char* kArtifactVersion = "1.0";

// Config-driven experiment description. Parsed from JSON with unknown keys
// rejected at every nesting level; kind-specific requirements are checked
// before any work starts.
struct ExperimentConfig {
  std::string kind;  // in_domain | ood | length_sensitivity | noise_defense |
                     // quant_defense | password | param_sweep
  std::string corpus_path;                       // JSONL; empty => synthetic
  std::map<std::string, std::string> ood_corpora;
  std::size_t synthetic_size = 2000;
  std::size_t synthetic_vocab = 150;
  std::size_t synthetic_len_min = 4;
  std::size_t synthetic_len_max = 16;
  TokenMode token_mode = TokenMode::Word;
  std::string encoder_manifest;
  std::string vocab_path;
  std::string base_checkpoint;       // stem
  std::string corrector_checkpoint;  // stem
  int inv_steps = 20;
  int inv_beam = 4;
  std::string token_decode = "greedy";  // greedy | nucleus | token_beam
  double nucleus_p = 0.9;
  int token_beam_k = 2;
  int max_len = 16;
  double early_exit_cosine = 1.0 - 1e-9;
  std::vector<double> lambda_grid;
  std::vector<int> steps_grid;
  std::vector<int> beam_grid;
  int sample_size = 200;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  InversionConfig inversion() const {
    InversionConfig c;
    c.steps = inv_steps;
    c.beam_width = inv_beam;
    if (token_decode == "greedy") c.token_decode.kind = TokenDecode::Greedy;
    else if (token_decode == "nucleus") c.token_decode.kind = TokenDecode::Nucleus;
    else if (token_decode == "token_beam") c.token_decode.kind = TokenDecode::TokenBeam;
    else throw std::invalid_argument("unknown token_decode: " + token_decode);
    c.token_decode.nucleus_p = nucleus_p;
    c.token_decode.beam_k = token_beam_k;
    c.max_len = max_len;
    c.early_exit_cosine = early_exit_cosine;
    c.seed = seed;
    return c;
  }

  void validate() const {
    static const std::vector<std::string> kinds = {
        "in_domain", "ood", "length_sensitivity", "noise_defense",
        "quant_defense", "password", "param_sweep"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
      throw std::invalid_argument("unknown experiment kind: " + kind);
    if (sample_size < 1) throw std::invalid_argument("sample_size must be >= 1");
    if (output_dir.empty()) throw std::invalid_argument("output_dir required");
    if (kind == "ood" && ood_corpora.empty())
      throw std::invalid_argument("ood requires ood_corpora");
    if (kind == "noise_defense" && lambda_grid.empty())
      throw std::invalid_argument("noise_defense requires lambda_grid");
    if (kind == "param_sweep" && (steps_grid.empty() || beam_grid.empty()))
      throw std::invalid_argument("param_sweep requires steps_grid and beam_grid");
    if (kind == "password" && token_mode != TokenMode::Char)
      throw std::invalid_argument("password experiments require char token_mode");
    inversion().validate();
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    ExperimentConfig c;
    std::set<std::string> known = {
        "kind", "corpus", "ood_corpora", "synthetic_size", "synthetic_vocab",
        "synthetic_len_min", "synthetic_len_max", "token_mode",
        "encoder_manifest", "vocab", "base_checkpoint", "corrector_checkpoint",
        "steps", "beam_width", "token_decode", "nucleus_p", "token_beam_k",
        "max_len", "early_exit_cosine", "lambda_grid", "steps_grid",
        "beam_grid", "sample_size", "seed", "output_dir"};
    for (const auto& [key, val] : j.items())
      if (!known.count(key))
        throw std::invalid_argument("unknown config key: " + key);
    c.kind = j.at("kind").get<std::string>();
    if (j.contains("corpus")) c.corpus_path = j["corpus"].get<std::string>();
    if (j.contains("ood_corpora"))
      c.ood_corpora = j["ood_corpora"].get<std::map<std::string, std::string>>();
    if (j.contains("synthetic_size")) c.synthetic_size = j["synthetic_size"].get<std::size_t>();
    if (j.contains("synthetic_vocab")) c.synthetic_vocab = j["synthetic_vocab"].get<std::size_t>();
    if (j.contains("synthetic_len_min")) c.synthetic_len_min = j["synthetic_len_min"].get<std::size_t>();
    if (j.contains("synthetic_len_max")) c.synthetic_len_max = j["synthetic_len_max"].get<std::size_t>();
    if (j.contains("token_mode")) c.token_mode = token_mode_from(j["token_mode"].get<std::string>());
    if (j.contains("encoder_manifest")) c.encoder_manifest = j["encoder_manifest"].get<std::string>();
    if (j.contains("vocab")) c.vocab_path = j["vocab"].get<std::string>();
    if (j.contains("base_checkpoint")) c.base_checkpoint = j["base_checkpoint"].get<std::string>();
    if (j.contains("corrector_checkpoint")) c.corrector_checkpoint = j["corrector_checkpoint"].get<std::string>();
    if (j.contains("steps")) c.inv_steps = j["steps"].get<int>();
    if (j.contains("beam_width")) c.inv_beam = j["beam_width"].get<int>();
    if (j.contains("token_decode")) c.token_decode = j["token_decode"].get<std::string>();
    if (j.contains("nucleus_p")) c.nucleus_p = j["nucleus_p"].get<double>();
    if (j.contains("token_beam_k")) c.token_beam_k = j["token_beam_k"].get<int>();
    if (j.contains("max_len")) c.max_len = j["max_len"].get<int>();
    if (j.contains("early_exit_cosine")) c.early_exit_cosine = j["early_exit_cosine"].get<double>();
    if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    if (j.contains("steps_grid")) c.steps_grid = j["steps_grid"].get<std::vector<int>>();
    if (j.contains("beam_grid")) c.beam_grid = j["beam_grid"].get<std::vector<int>>();
    if (j.contains("sample_size")) c.sample_size = j["sample_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.validate();
    return c;
  }

  nlohmann::json echo() const {
    nlohmann::json j = {{"kind", kind},
                        {"token_mode", token_mode_name(token_mode)},
                        {"steps", inv_steps},
                        {"beam_width", inv_beam},
                        {"token_decode", token_decode},
                        {"max_len", max_len},
                        {"sample_size", sample_size},
                        {"seed", seed}};
    if (!corpus_path.empty()) j["corpus"] = corpus_path;
    if (!lambda_grid.empty()) j["lambda_grid"] = lambda_grid;
    if (!steps_grid.empty()) j["steps_grid"] = steps_grid;
    if (!beam_grid.empty()) j["beam_grid"] = beam_grid;
    return j;
  }
};

struct ResultRecord {
  std::string sample_id;
  std::string cell;  // configuration cell this record belongs to
  std::string target_text;
  std::string reconstructed_text;
  double cosine = 0.0;
  double bleu_score = 0.0;
  double f1_score = 0.0;
  bool exact = false;
  int steps = 0;
  int beam_width = 0;
  std::string defense = "none";
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"sample_id", sample_id}, {"cell", cell},
            {"target_text", target_text}, {"reconstructed_text", reconstructed_text},
            {"cosine", cosine}, {"bleu", bleu_score}, {"token_f1", f1_score},
            {"exact", exact}, {"steps", steps}, {"beam_width", beam_width},
            {"defense", defense}, {"wall_time_s", wall_time_s}, {"seed", seed}};
  }

  static ResultRecord from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.sample_id = j.at("sample_id");
    r.cell = j.at("cell");
    r.target_text = j.at("target_text");
    r.reconstructed_text = j.at("reconstructed_text");
    r.cosine = j.at("cosine");
    r.bleu_score = j.at("bleu");
    r.f1_score = j.at("token_f1");
    r.exact = j.at("exact");
    r.steps = j.at("steps");
    r.beam_width = j.at("beam_width");
    r.defense = j.at("defense");
    r.wall_time_s = j.at("wall_time_s");
    r.seed = j.at("seed");
    return r;
  }
};

struct ParetoPoint {
  double mean_runtime_s = 0.0;
  double mean_bleu = 0.0;
  int steps = 0;
  int beam_width = 0;
};

// Points not strictly dominated (other point with runtime <= and bleu >=,
// at least one strict); weakly dominated duplicates are kept. Output sorted
// by runtime ascending.
inline std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  if (points.empty()) throw std::invalid_argument("pareto_front: no points");
  for (const auto& p : points)
    if (!std::isfinite(p.mean_runtime_s) || !std::isfinite(p.mean_bleu))
      throw std::invalid_argument("pareto_front: non-finite point");
  std::vector<ParetoPoint> out;
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      if (q.mean_runtime_s <= p.mean_runtime_s && q.mean_bleu >= p.mean_bleu &&
          (q.mean_runtime_s < p.mean_runtime_s || q.mean_bleu > p.mean_bleu)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.mean_runtime_s != b.mean_runtime_s) return a.mean_runtime_s < b.mean_runtime_s;
    return a.mean_bleu < b.mean_bleu;
  });
  return out;
}

// Trained artifacts one experiment operates on.
struct Pipeline {
  const ToyEncoder* encoder = nullptr;
  const Vocabulary* vocab = nullptr;
  const Seq2Seq* base = nullptr;
  const Seq2Seq* corrector = nullptr;
  TokenMode mode = TokenMode::Word;
};

namespace detail {

inline MetricsReport aggregate(const std::vector<const ResultRecord*>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  MetricsReport r;
  r.n_samples = static_cast<int>(records.size());
  double exact = 0.0;
  for (const auto* rec : records) {
    r.bleu += rec->bleu_score;
    r.token_f1 += rec->f1_score;
    r.cosine += rec->cosine;
    if (rec->exact) exact += 1.0;
  }
  r.bleu /= r.n_samples;
  r.token_f1 /= r.n_samples;
  r.cosine /= r.n_samples;
  r.exact_match = 100.0 * exact / r.n_samples;
  return r;
}

inline nlohmann::json report_json(const MetricsReport& r) {
  return {{"bleu", r.bleu}, {"token_f1", r.token_f1},
          {"exact_match", r.exact_match}, {"cosine", r.cosine},
          {"n_samples", r.n_samples}};
}

}  // namespace detail

inline MetricsReport aggregate_cell(const std::vector<ResultRecord>& records,
                                    const std::string& cell) {
  std::vector<const ResultRecord*> sel;
  for (const auto& r : records)
    if (r.cell == cell) sel.push_back(&r);
  return detail::aggregate(sel);
}

// Invert every entry against its (possibly defended) target embedding and
// score the reconstruction. Per-sample seeds derive from the master seed.
inline std::vector<ResultRecord> run_inversion_batch(
    const Pipeline& p, const std::vector<CorpusEntry>& entries,
    InversionConfig inv_cfg, const DefenseConfig& defense,
    std::uint64_t master_seed, const std::string& cell,
    std::vector<InversionResult>* raw_results = nullptr) {
  std::vector<ResultRecord> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& entry = entries[i];
    inv_cfg.seed = derive_seed(master_seed, cell + "/" + entry.id);
    Rng defense_rng(derive_seed(inv_cfg.seed, "defense"));
    Embedding target = apply_defense(defense, p.encoder->encode(entry.text),
                                     defense_rng);
    InversionResult res = invert(*p.corrector, *p.base, *p.encoder, *p.vocab,
                                 p.mode, target, inv_cfg);
    ResultRecord rec;
    rec.sample_id = entry.id;
    rec.cell = cell;
    rec.target_text = entry.text;
    rec.reconstructed_text = res.best_text;
    rec.cosine = res.best_cosine;
    TokenSequence ref = truncate_tokens(tokenize(entry.text, p.mode),
                                        static_cast<std::size_t>(inv_cfg.max_len));
    TokenSequence hyp = tokenize(res.best_text, p.mode);
    rec.bleu_score = bleu(ref, hyp);
    rec.f1_score = token_f1(ref, hyp);
    rec.exact = detokenize(ref) == res.best_text;
    rec.steps = inv_cfg.steps;
    rec.beam_width = inv_cfg.beam_width;
    rec.defense = defense.describe();
    rec.wall_time_s = res.wall_time_s;
    rec.seed = inv_cfg.seed;
    out.push_back(std::move(rec));
    if (raw_results) raw_results->push_back(std::move(res));
  }
  return out;
}

// In-domain protocol: one cell per (steps, beam) configuration including
// the steps=0 base row.
struct InDomainResult {
  std::vector<ResultRecord> records;
  std::map<std::string, MetricsReport> cells;
};

inline InDomainResult run_in_domain(const Pipeline& p,
                                    const std::vector<CorpusEntry>& test_entries,
                                    const std::vector<std::pair<int, int>>& cells,
                                    const InversionConfig& base_cfg,
                                    std::uint64_t master_seed) {
  InDomainResult out;
  for (const auto& [steps, beam] : cells) {
    InversionConfig cfg = base_cfg;
    cfg.steps = steps;
    cfg.beam_width = beam;
    std::string cell = "steps=" + std::to_string(steps) + ",beam=" + std::to_string(beam);
    auto recs = run_inversion_batch(p, test_entries, cfg, DefenseConfig::none(),
                                    master_seed, cell);
    out.cells[cell] = aggregate_cell(recs, cell);
    out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  return out;
}

// Out-of-domain: same pipeline per corpus; includes the train-domain
// baseline corpus under its own name for contrast.
inline std::map<std::string, MetricsReport> run_ood(
    const Pipeline& p,
    const std::map<std::string, std::vector<CorpusEntry>>& corpora,
    const InversionConfig& cfg, std::uint64_t master_seed,
    std::vector<ResultRecord>* all_records = nullptr) {
  std::map<std::string, MetricsReport> out;
  for (const auto& [name, entries] : corpora) {
    std::string cell = "ood:" + name;
    auto recs = run_inversion_batch(p, entries, cfg, DefenseConfig::none(),
                                    master_seed, cell);
    out[name] = aggregate_cell(recs, cell);
    if (all_records)
      all_records->insert(all_records->end(), recs.begin(), recs.end());
  }
  return out;
}

struct LengthBucket {
  int bucket = 0;  // nearest power-of-two token length
  double mean_bleu = 0.0;
  int count = 0;
  bool reliable = true;  // >= 5 samples
};

// Nearest power of two; ties go down (len=3 -> 2, len=6 -> 4).
inline int length_bucket_of(std::size_t len) {
  if (len == 0) throw std::invalid_argument("length_bucket_of: empty sequence");
  int lower = 1;
  while (lower * 2 <= static_cast<int>(len)) lower *= 2;
  int upper = lower * 2;
  return (static_cast<int>(len) - lower <= upper - static_cast<int>(len)) ? lower : upper;
}

inline std::vector<LengthBucket> run_length_sensitivity(
    const Pipeline& p, const std::vector<CorpusEntry>& entries,
    const InversionConfig& cfg, std::uint64_t master_seed,
    std::vector<ResultRecord>* all_records = nullptr) {
  std::map<int, std::vector<CorpusEntry>> buckets;
  for (const auto& e : entries)
    buckets[length_bucket_of(tokenize(e.text, p.mode).tokens.size())].push_back(e);
  if (buckets.empty()) throw std::invalid_argument("no entries");
  std::vector<LengthBucket> out;
  for (const auto& [b, list] : buckets) {
    std::string cell = "len=" + std::to_string(b);
    auto recs = run_inversion_batch(p, list, cfg, DefenseConfig::none(),
                                    master_seed, cell);
    LengthBucket lb;
    lb.bucket = b;
    lb.count = static_cast<int>(list.size());
    lb.reliable = lb.count >= 5;
    lb.mean_bleu = aggregate_cell(recs, cell).bleu;
    out.push_back(lb);
    if (all_records)
      all_records->insert(all_records->end(), recs.begin(), recs.end());
  }
  return out;
}

struct DefenseRow {
  std::string label;
  double bleu = 0.0;
  double ndcg = 0.0;
};

inline DefenseRow run_defense_cell(const Pipeline& p, const DefenseConfig& defense,
                                   const std::string& label,
                                   const Corpus& retrieval_corpus,
                                   const std::vector<CorpusEntry>& inversion_entries,
                                   const InversionConfig& cfg,
                                   std::uint64_t master_seed,
                                   std::vector<ResultRecord>* all_records) {
  DefenseRow row;
  row.label = label;
  Rng index_rng(derive_seed(master_seed, "index/" + label));
  RetrievalIndex idx = build_index(retrieval_corpus, *p.encoder, defense, index_rng);
  auto [queries, qrels] = make_dropout_queries(retrieval_corpus,
                                               derive_seed(master_seed, "queries"));
  row.ndcg = evaluate_ndcg(idx, *p.encoder, queries, qrels, 10);
  std::string cell = "defense:" + label;
  auto recs = run_inversion_batch(p, inversion_entries, cfg, defense, master_seed, cell);
  row.bleu = aggregate_cell(recs, cell).bleu;
  if (all_records)
    all_records->insert(all_records->end(), recs.begin(), recs.end());
  return row;
}

inline std::vector<DefenseRow> run_noise_defense(
    const Pipeline& p, const Corpus& retrieval_corpus,
    const std::vector<CorpusEntry>& inversion_entries, const InversionConfig& cfg,
    const std::vector<double>& lambda_grid, std::uint64_t master_seed,
    std::vector<ResultRecord>* all_records = nullptr) {
  std::vector<DefenseRow> rows;
  for (double lambda : lambda_grid) {
    DefenseConfig d = lambda == 0.0
                          ? DefenseConfig::none()
                          : DefenseConfig::gaussian(lambda, derive_seed(master_seed,
                                                                        "noise"));
    std::ostringstream label;
    label << "lambda=" << lambda;
    rows.push_back(run_defense_cell(p, d, label.str(), retrieval_corpus,
                                    inversion_entries, cfg, master_seed, all_records));
  }
  return rows;
}

inline std::vector<DefenseRow> run_quant_defense(
    const Pipeline& p, const Corpus& retrieval_corpus,
    const std::vector<CorpusEntry>& inversion_entries, const InversionConfig& cfg,
    std::uint64_t master_seed, std::vector<ResultRecord>* all_records = nullptr) {
  std::vector<DefenseRow> rows;
  rows.push_back(run_defense_cell(p, DefenseConfig::none(), "none", retrieval_corpus,
                                  inversion_entries, cfg, master_seed, all_records));
  rows.push_back(run_defense_cell(p, DefenseConfig::absmax(), "absmax",
                                  retrieval_corpus, inversion_entries, cfg,
                                  master_seed, all_records));
  rows.push_back(run_defense_cell(p, DefenseConfig::zeropoint(), "zeropoint",
                                  retrieval_corpus, inversion_entries, cfg,
                                  master_seed, all_records));
  return rows;
}

struct PasswordRow {
  std::string strength;
  double exact_match = 0.0;
  double token_f1_score = 0.0;
  int n = 0;
};

// BLEU is deliberately not reported for passwords; n-gram overlap is
// unreliable at char-token lengths this short.
inline std::vector<PasswordRow> run_password(
    const Pipeline& p,
    const std::map<std::string, std::vector<CorpusEntry>>& per_strength,
    const InversionConfig& cfg, std::uint64_t master_seed,
    std::vector<ResultRecord>* all_records = nullptr) {
  std::vector<PasswordRow> rows;
  for (const auto& [strength, entries] : per_strength) {
    std::string cell = "password:" + strength;
    auto recs = run_inversion_batch(p, entries, cfg, DefenseConfig::none(),
                                    master_seed, cell);
    MetricsReport rep = aggregate_cell(recs, cell);
    rows.push_back({strength, rep.exact_match, rep.token_f1, rep.n_samples});
    if (all_records)
      all_records->insert(all_records->end(), recs.begin(), recs.end());
  }
  return rows;
}

struct SweepCell {
  int steps = 0;
  int beam_width = 0;
  double mean_bleu = 0.0;
  double mean_runtime_s = 0.0;
  bool failed = false;
  std::string error;
};

inline std::vector<SweepCell> run_param_sweep(
    const Pipeline& p, const std::vector<CorpusEntry>& entries,
    const InversionConfig& base_cfg, const std::vector<int>& steps_grid,
    const std::vector<int>& beam_grid, std::uint64_t master_seed,
    std::vector<ResultRecord>* all_records = nullptr) {
  std::vector<SweepCell> cells;
  for (int steps : steps_grid) {
    for (int beam : beam_grid) {
      SweepCell cell;
      cell.steps = steps;
      cell.beam_width = beam;
      InversionConfig cfg = base_cfg;
      cfg.steps = steps;
      cfg.beam_width = beam;
      std::string tag = "sweep:steps=" + std::to_string(steps) +
                        ",beam=" + std::to_string(beam);
      try {
        auto recs = run_inversion_batch(p, entries, cfg, DefenseConfig::none(),
                                        derive_seed(master_seed, tag), tag);
        double rt = 0.0;
        for (const auto& r : recs) rt += r.wall_time_s;
        cell.mean_runtime_s = rt / static_cast<double>(recs.size());
        cell.mean_bleu = aggregate_cell(recs, tag).bleu;
        if (all_records)
          all_records->insert(all_records->end(), recs.begin(), recs.end());
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

inline std::vector<ParetoPoint> sweep_to_pareto(const std::vector<SweepCell>& cells) {
  std::vector<ParetoPoint> pts;
  for (const auto& c : cells)
    if (!c.failed) pts.push_back({c.mean_runtime_s, c.mean_bleu, c.steps, c.beam_width});
  return pareto_front(pts);
}

// ---- persistence ----

struct CsvTable {
  std::string name;  // file name without extension
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool timing_dependent = false;  // excluded from determinism hashing
};

namespace detail {

inline const std::vector<std::string>& timing_fields() {
  static const std::vector<std::string> f = {"wall_time_s", "wall_time"};
  return f;
}

// Hash of a JSONL file with timing fields stripped from every record.
inline std::uint64_t hash_jsonl_without_timing(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    for (const auto& field : timing_fields()) j.erase(field);
    h = fnv1a(j.dump(), h);
    h = fnv1a("\n", h);
  }
  return h;
}

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string content((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  return fnv1a(content.data(), content.size());
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

// Persists records (JSONL), aggregate reports (JSON), plot tables (CSV) and
// a manifest with per-file content hashes. Timing values never enter hashes.
inline std::string write_results(const std::vector<ResultRecord>& records,
                                 const nlohmann::json& reports,
                                 const std::vector<CsvTable>& tables,
                                 const nlohmann::json& config_echo,
                                 std::uint64_t master_seed,
                                 const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  nlohmann::json files = nlohmann::json::array();

  std::string records_path = (fs::path(output_dir) / "records.jsonl").string();
  {
    std::ofstream f(records_path);
    if (!f) throw std::runtime_error("cannot write " + records_path);
    for (const auto& r : records) f << r.to_json().dump() << "\n";
  }
  files.push_back({{"name", "records.jsonl"},
                   {"content_hash", detail::hex64(detail::hash_jsonl_without_timing(records_path))},
                   {"timing_stripped", true}});

  std::string report_path = (fs::path(output_dir) / "report.json").string();
  {
    std::ofstream f(report_path);
    if (!f) throw std::runtime_error("cannot write " + report_path);
    f << reports.dump(2) << "\n";
  }
  files.push_back({{"name", "report.json"},
                   {"content_hash", detail::hex64(detail::hash_file(report_path))},
                   {"timing_stripped", false}});

  for (const auto& t : tables) {
    std::string path = (fs::path(output_dir) / (t.name + ".csv")).string();
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < t.header.size(); ++i)
      f << (i ? "," : "") << t.header[i];
    f << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
      f << "\n";
    }
    f.close();
    nlohmann::json entry = {{"name", t.name + ".csv"},
                            {"timing_dependent", t.timing_dependent}};
    if (t.timing_dependent)
      entry["content_hash"] = nullptr;
    else
      entry["content_hash"] = detail::hex64(detail::hash_file(path));
    files.push_back(entry);
  }

  nlohmann::json manifest = {{"artifact_version", kArtifactVersion},
                             {"master_seed", master_seed},
                             {"config", config_echo},
                             {"files", files}};
  std::string manifest_path = (fs::path(output_dir) / "manifest.json").string();
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot write " + manifest_path);
  mf << manifest.dump(2) << "\n";
  return manifest_path;
}

struct VerifyOutcome {
  bool ok = true;
  std::vector<std::string> problems;
  void fail(const std::string& msg) {
    ok = false;
    problems.push_back(msg);
  }
};

// Recomputes per-cell aggregates from raw records and checks every manifest
// hash. Reconstruction metrics are recomputed from the stored texts.
inline VerifyOutcome verify_results(const std::string& output_dir,
                                    TokenMode mode, int max_len) {
  namespace fs = std::filesystem;
  VerifyOutcome out;
  std::ifstream mf(fs::path(output_dir) / "manifest.json");
  if (!mf) {
    out.fail("missing manifest.json");
    return out;
  }
  nlohmann::json manifest = nlohmann::json::parse(mf);
  for (const auto& file : manifest.at("files")) {
    std::string name = file.at("name");
    std::string path = (fs::path(output_dir) / name).string();
    if (!fs::exists(path)) {
      out.fail("missing file " + name);
      continue;
    }
    if (file.at("content_hash").is_null()) continue;
    std::uint64_t actual = file.value("timing_stripped", false)
                               ? detail::hash_jsonl_without_timing(path)
                               : detail::hash_file(path);
    if (detail::hex64(actual) != file.at("content_hash").get<std::string>())
      out.fail("hash mismatch for " + name);
  }

  // reload records, recompute metrics per record and per cell
  std::vector<ResultRecord> records;
  {
    std::ifstream rf(fs::path(output_dir) / "records.jsonl");
    if (!rf) {
      out.fail("missing records.jsonl");
      return out;
    }
    std::string line;
    while (std::getline(rf, line))
      if (!line.empty()) records.push_back(ResultRecord::from_json(nlohmann::json::parse(line)));
  }
  for (const auto& r : records) {
    TokenSequence ref = truncate_tokens(tokenize(r.target_text, mode),
                                        static_cast<std::size_t>(max_len));
    TokenSequence hyp = tokenize(r.reconstructed_text, mode);
    if (std::abs(bleu(ref, hyp) - r.bleu_score) > 1e-9)
      out.fail("bleu mismatch for sample " + r.sample_id);
    if (std::abs(token_f1(ref, hyp) - r.f1_score) > 1e-9)
      out.fail("token_f1 mismatch for sample " + r.sample_id);
    if ((detokenize(ref) == r.reconstructed_text) != r.exact)
      out.fail("exact flag mismatch for sample " + r.sample_id);
  }

  std::ifstream repf(fs::path(output_dir) / "report.json");
  if (repf) {
    nlohmann::json report = nlohmann::json::parse(repf);
    if (report.contains("cells")) {
      for (const auto& [cell, agg] : report.at("cells").items()) {
        MetricsReport rec;
        try {
          rec = aggregate_cell(records, cell);
        } catch (const std::exception&) {
          out.fail("report cell with no records: " + cell);
          continue;
        }
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
        if (!close(rec.bleu, agg.at("bleu")) ||
            !close(rec.token_f1, agg.at("token_f1")) ||
            !close(rec.exact_match, agg.at("exact_match")) ||
            !close(rec.cosine, agg.at("cosine")) ||
            rec.n_samples != agg.at("n_samples").get<int>())
          out.fail("aggregate mismatch for cell " + cell);
      }
    }
  }
  return out;
}

}  // namespace invertext
