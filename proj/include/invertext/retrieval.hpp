#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/data.hpp"
#include "invertext/defense.hpp"
#include "invertext/encoder.hpp"
#include "invertext/metrics.hpp"

namespace invertext {

struct RetrievalIndex {
  std::vector<std::string> doc_ids;
  Matrix doc_embeddings;  // d x n, possibly defense-transformed
  DefenseConfig defense;
};

using Qrels = std::map<std::string, std::set<std::string>>;

// qrels TSV: query_id <TAB> doc_id <TAB> relevance (BEIR-compatible)
inline Qrels load_qrels(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  Qrels q;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, did, rel;
    if (!std::getline(ss, qid, '\t') || !std::getline(ss, did, '\t') ||
        !std::getline(ss, rel, '\t'))
      throw std::runtime_error("malformed qrels line: " + line);
    if (std::stoi(rel) > 0) q[qid].insert(did);
  }
  return q;
}

inline void write_qrels(const Qrels& q, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& [qid, docs] : q)
    for (const auto& did : docs) f << qid << "\t" << did << "\t1\n";
}

// Each document is encoded, then the defense is applied to the stored
// embedding; queries stay clean.
inline RetrievalIndex build_index(const Corpus& corpus, const Encoder& encoder,
                                  const DefenseConfig& defense, Rng& rng) {
  if (corpus.entries.empty()) throw std::invalid_argument("empty corpus");
  RetrievalIndex idx;
  idx.defense = defense;
  idx.doc_embeddings.resize(encoder.dim(), static_cast<Eigen::Index>(corpus.entries.size()));
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    try {
      Embedding e = apply_defense(defense, encoder.encode(corpus.entries[i].text), rng);
      idx.doc_embeddings.col(static_cast<Eigen::Index>(i)) = e;
      idx.doc_ids.push_back(corpus.entries[i].id);
    } catch (const std::exception& e) {
      throw std::runtime_error("build_index failed for doc " + corpus.entries[i].id +
                               ": " + e.what());
    }
  }
  return idx;
}

// Exact top-k by cosine, descending; ties broken by ascending doc id.
inline std::vector<std::pair<std::string, double>> search_top_k(
    const RetrievalIndex& index, const Embedding& query_e, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(index.doc_ids.size());
  for (std::size_t i = 0; i < index.doc_ids.size(); ++i)
    scored.emplace_back(index.doc_ids[i],
                        cosine_sim(index.doc_embeddings.col(static_cast<Eigen::Index>(i)),
                                   query_e));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
  return scored;
}

struct RetrievalQuery {
  std::string id;
  std::string text;
};

inline double evaluate_ndcg(const RetrievalIndex& index, const Encoder& encoder,
                            const std::vector<RetrievalQuery>& queries,
                            const Qrels& qrels, int k = 10) {
  if (queries.empty()) throw std::invalid_argument("no queries");
  double total = 0.0;
  for (const auto& q : queries) {
    auto it = qrels.find(q.id);
    if (it == qrels.end() || it->second.empty())
      throw std::runtime_error("query " + q.id + " not covered by qrels");
    std::map<std::string, double> gains;
    for (const auto& did : it->second) gains[did] = 1.0;
    auto ranked = search_top_k(index, encoder.encode(q.text), k);
    std::vector<std::string> ids;
    for (const auto& [did, score] : ranked) ids.push_back(did);
    try {
      total += ndcg_at_k(ids, gains, k);
    } catch (const std::exception& e) {
      throw std::runtime_error("nDCG failed for query " + q.id + ": " + e.what());
    }
  }
  return total / static_cast<double>(queries.size());
}

// Toy query construction: drop the final token of each document (a mild,
// position-preserving perturbation); the source document is the sole
// relevant item. The seed is kept in the signature for future variants.
inline std::pair<std::vector<RetrievalQuery>, Qrels> make_dropout_queries(
    const Corpus& corpus, std::uint64_t seed) {
  (void)seed;
  std::vector<RetrievalQuery> queries;
  Qrels qrels;
  for (const auto& entry : corpus.entries) {
    TokenSequence seq = tokenize(entry.text, corpus.token_mode);
    if (seq.tokens.size() > 1) seq.tokens.pop_back();
    std::string qid = "q-" + entry.id;
    queries.push_back({qid, detokenize(seq)});
    qrels[qid].insert(entry.id);
  }
  return {queries, qrels};
}

}  // namespace invertext
