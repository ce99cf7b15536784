#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "invertext/harness.hpp"

using namespace invertext;
namespace fs = std::filesystem;

namespace {

// Brute-force strict-domination oracle, written independently of pareto_front.
std::vector<ParetoPoint> pareto_oracle(const std::vector<ParetoPoint>& pts) {
  std::vector<ParetoPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      bool weakly = pts[j].mean_runtime_s <= pts[i].mean_runtime_s &&
                    pts[j].mean_bleu >= pts[i].mean_bleu;
      bool strictly = pts[j].mean_runtime_s < pts[i].mean_runtime_s ||
                      pts[j].mean_bleu > pts[i].mean_bleu;
      if (weakly && strictly) dominated = true;
    }
    if (!dominated) out.push_back(pts[i]);
  }
  std::sort(out.begin(), out.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.mean_runtime_s != b.mean_runtime_s) return a.mean_runtime_s < b.mean_runtime_s;
    return a.mean_bleu < b.mean_bleu;
  });
  return out;
}

bool same_points(const std::vector<ParetoPoint>& a, const std::vector<ParetoPoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].mean_runtime_s != b[i].mean_runtime_s || a[i].mean_bleu != b[i].mean_bleu)
      return false;
  return true;
}

std::vector<ResultRecord> fixture_records() {
  std::vector<ResultRecord> recs;
  struct Row { const char* id; const char* tgt; const char* hyp; };
  std::vector<Row> rows = {{"s0", "alpha beta gamma", "alpha beta gamma"},
                           {"s1", "delta epsilon", "delta zeta"},
                           {"s2", "eta theta iota", "eta iota"}};
  for (const auto& r : rows) {
    ResultRecord rec;
    rec.sample_id = r.id;
    rec.cell = "steps=4,beam=2";
    rec.target_text = r.tgt;
    rec.reconstructed_text = r.hyp;
    TokenSequence ref = tokenize(r.tgt, TokenMode::Word);
    TokenSequence hyp = tokenize(r.hyp, TokenMode::Word);
    rec.bleu_score = bleu(ref, hyp);
    rec.f1_score = token_f1(ref, hyp);
    rec.exact = std::string(r.tgt) == r.hyp;
    rec.cosine = rec.exact ? 1.0 : 0.8;
    rec.steps = 4;
    rec.beam_width = 2;
    rec.wall_time_s = 0.5;
    rec.seed = 9;
    recs.push_back(rec);
  }
  return recs;
}

nlohmann::json fixture_report(const std::vector<ResultRecord>& recs) {
  MetricsReport agg = aggregate_cell(recs, "steps=4,beam=2");
  return {{"cells", {{"steps=4,beam=2", detail::report_json(agg)}}}};
}

}  // namespace

TEST_CASE("pareto hand oracle: {(1,10),(2,30),(3,25)}") {
  std::vector<ParetoPoint> pts = {{1.0, 10.0, 1, 1}, {2.0, 30.0, 4, 2}, {3.0, 25.0, 8, 4}};
  auto front = pareto_front(pts);
  REQUIRE(front.size() == 2);
  CHECK(front[0].mean_runtime_s == 1.0);
  CHECK(front[1].mean_runtime_s == 2.0);
}

TEST_CASE("single point and duplicates") {
  std::vector<ParetoPoint> one = {{1.0, 5.0, 1, 1}};
  CHECK(pareto_front(one).size() == 1);
  std::vector<ParetoPoint> dup = {{1.0, 5.0, 1, 1}, {1.0, 5.0, 2, 2}};
  CHECK(pareto_front(dup).size() == 2);  // neither strictly dominates the other
}

TEST_CASE("pareto front matches the brute-force oracle on 1000 random point sets") {
  Rng rng(404);
  for (int set = 0; set < 1000; ++set) {
    std::size_t n = 1 + rng.below(12);
    std::vector<ParetoPoint> pts;
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back({rng.uniform(0.0, 4.0), std::floor(rng.uniform(0.0, 50.0)),
                     static_cast<int>(i), 1});
    auto got = pareto_front(pts);
    auto want = pareto_oracle(pts);
    CHECK(same_points(got, want));
    // output is domination-free; every excluded point has a dominator in it
    for (const auto& p : got)
      for (const auto& q : got) {
        bool strict = (q.mean_runtime_s <= p.mean_runtime_s &&
                       q.mean_bleu >= p.mean_bleu) &&
                      (q.mean_runtime_s < p.mean_runtime_s || q.mean_bleu > p.mean_bleu);
        CHECK(!strict);
      }
    for (const auto& p : pts) {
      bool in_front = false;
      for (const auto& q : got)
        if (q.mean_runtime_s == p.mean_runtime_s && q.mean_bleu == p.mean_bleu)
          in_front = true;
      if (in_front) continue;
      bool has_dominator = false;
      for (const auto& q : got)
        if (q.mean_runtime_s <= p.mean_runtime_s && q.mean_bleu >= p.mean_bleu &&
            (q.mean_runtime_s < p.mean_runtime_s || q.mean_bleu > p.mean_bleu))
          has_dominator = true;
      CHECK(has_dominator);
    }
  }
}

TEST_CASE("pareto front rejects empty and non-finite inputs") {
  CHECK_THROWS_AS(pareto_front({}), std::invalid_argument);
  std::vector<ParetoPoint> bad = {{std::nan(""), 1.0, 1, 1}};
  CHECK_THROWS_AS(pareto_front(bad), std::invalid_argument);
}

TEST_CASE("experiment config rejects unknown keys") {
  nlohmann::json j = {{"kind", "in_domain"}, {"surprise", 1}};
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(j),
                       "unknown config key: surprise", std::invalid_argument);
}

TEST_CASE("experiment config kind-specific validation") {
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", "telepathy"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", "noise_defense"}}),
                  std::invalid_argument);  // missing lambda_grid
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", "param_sweep"}}),
                  std::invalid_argument);  // missing grids
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", "ood"}}),
                  std::invalid_argument);  // missing corpora
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", "password"}}),
                  std::invalid_argument);  // word mode not allowed
  CHECK_NOTHROW(ExperimentConfig::from_json(
      {{"kind", "password"}, {"token_mode", "char"}}));
  CHECK_NOTHROW(ExperimentConfig::from_json(
      {{"kind", "noise_defense"}, {"lambda_grid", {0.0, 0.1}}}));
  CHECK_THROWS_AS(ExperimentConfig::from_json(
                      {{"kind", "in_domain"}, {"token_decode", "telepathic"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(
                      {{"kind", "in_domain"}, {"beam_width", 0}}),
                  std::invalid_argument);
}

TEST_CASE("write_results then verify passes cleanly") {
  auto recs = fixture_records();
  std::string dir = (fs::temp_directory_path() / "invertext-results-ok").string();
  fs::remove_all(dir);
  write_results(recs, fixture_report(recs), {}, {{"kind", "in_domain"}}, 9, dir);
  auto out = verify_results(dir, TokenMode::Word, 16);
  for (const auto& p : out.problems) CAPTURE(p);
  CHECK(out.ok);
  fs::remove_all(dir);
}

TEST_CASE("verify detects record tampering via the manifest hash") {
  auto recs = fixture_records();
  std::string dir = (fs::temp_directory_path() / "invertext-results-tamper").string();
  fs::remove_all(dir);
  write_results(recs, fixture_report(recs), {}, {}, 9, dir);
  {
    std::ofstream f(fs::path(dir) / "records.jsonl", std::ios::app);
    ResultRecord fake = recs[0];
    fake.sample_id = "forged";
    f << fake.to_json().dump() << "\n";
  }
  auto out = verify_results(dir, TokenMode::Word, 16);
  CHECK(!out.ok);
  fs::remove_all(dir);
}

TEST_CASE("verify detects aggregate mismatches against raw records") {
  auto recs = fixture_records();
  auto report = fixture_report(recs);
  report["cells"]["steps=4,beam=2"]["bleu"] =
      report["cells"]["steps=4,beam=2"]["bleu"].get<double>() + 1.0;
  std::string dir = (fs::temp_directory_path() / "invertext-results-agg").string();
  fs::remove_all(dir);
  write_results(recs, report, {}, {}, 9, dir);
  auto out = verify_results(dir, TokenMode::Word, 16);
  CHECK(!out.ok);
  bool flagged = false;
  for (const auto& p : out.problems)
    if (p.find("aggregate mismatch") != std::string::npos) flagged = true;
  CHECK(flagged);
  fs::remove_all(dir);
}

TEST_CASE("timing fields are excluded from determinism hashing") {
  auto a = fixture_records();
  auto b = fixture_records();
  for (auto& r : b) r.wall_time_s *= 3.0;  // only timing differs
  std::string da = (fs::temp_directory_path() / "invertext-results-t1").string();
  std::string db = (fs::temp_directory_path() / "invertext-results-t2").string();
  fs::remove_all(da);
  fs::remove_all(db);
  write_results(a, fixture_report(a), {}, {}, 9, da);
  write_results(b, fixture_report(b), {}, {}, 9, db);
  std::ifstream ma(fs::path(da) / "manifest.json"), mb(fs::path(db) / "manifest.json");
  auto ja = nlohmann::json::parse(ma), jb = nlohmann::json::parse(mb);
  CHECK(ja.at("files") == jb.at("files"));  // identical content hashes
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST_CASE("timing-dependent CSV tables carry no content hash") {
  auto recs = fixture_records();
  CsvTable timed{"sweep_grid", {"steps", "runtime"}, {{"1", "0.5"}}, true};
  CsvTable stable{"length_buckets", {"bucket", "bleu"}, {{"8", "50"}}, false};
  std::string dir = (fs::temp_directory_path() / "invertext-results-csv").string();
  fs::remove_all(dir);
  write_results(recs, fixture_report(recs), {timed, stable}, {}, 9, dir);
  std::ifstream mf(fs::path(dir) / "manifest.json");
  auto j = nlohmann::json::parse(mf);
  bool saw_timed = false, saw_stable = false;
  for (const auto& f : j.at("files")) {
    if (f.at("name") == "sweep_grid.csv") {
      CHECK(f.at("content_hash").is_null());
      saw_timed = true;
    }
    if (f.at("name") == "length_buckets.csv") {
      CHECK(f.at("content_hash").is_string());
      saw_stable = true;
    }
  }
  CHECK(saw_timed);
  CHECK(saw_stable);
  auto out = verify_results(dir, TokenMode::Word, 16);
  CHECK(out.ok);
  fs::remove_all(dir);
}

TEST_CASE("aggregate_cell recomputes the four metrics") {
  auto recs = fixture_records();
  MetricsReport rep = aggregate_cell(recs, "steps=4,beam=2");
  CHECK(rep.n_samples == 3);
  CHECK(rep.exact_match == doctest::Approx(100.0 / 3.0));
  double mean_bleu = (recs[0].bleu_score + recs[1].bleu_score + recs[2].bleu_score) / 3.0;
  CHECK(rep.bleu == doctest::Approx(mean_bleu));
  CHECK_THROWS_AS(aggregate_cell(recs, "no-such-cell"), std::invalid_argument);
}

TEST_CASE("length buckets map to the nearest power of two, ties down") {
  CHECK(length_bucket_of(1) == 1);
  CHECK(length_bucket_of(3) == 2);
  CHECK(length_bucket_of(6) == 4);
  CHECK(length_bucket_of(7) == 8);
  CHECK(length_bucket_of(8) == 8);
  CHECK(length_bucket_of(12) == 8);
  CHECK(length_bucket_of(13) == 16);
  CHECK(length_bucket_of(16) == 16);
  CHECK(length_bucket_of(24) == 16);
  CHECK(length_bucket_of(25) == 32);
  CHECK(length_bucket_of(32) == 32);
  CHECK_THROWS_AS(length_bucket_of(0), std::invalid_argument);
}

TEST_CASE("result record JSON round trip") {
  auto recs = fixture_records();
  auto j = recs[1].to_json();
  ResultRecord back = ResultRecord::from_json(j);
  CHECK(back.sample_id == recs[1].sample_id);
  CHECK(back.bleu_score == recs[1].bleu_score);
  CHECK(back.exact == recs[1].exact);
  CHECK(back.wall_time_s == recs[1].wall_time_s);
}
