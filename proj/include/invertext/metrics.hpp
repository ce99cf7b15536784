#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/embedding.hpp"
#include "invertext/text.hpp"

namespace invertext {

struct MetricsReport {
  double bleu = 0.0;        // [0, 100]
  double token_f1 = 0.0;    // [0, 100]
  double exact_match = 0.0; // [0, 100]
  double cosine = 0.0;      // [-1, 1]
  int n_samples = 0;
};

// Sentence-level BLEU-4: geometric mean of modified n-gram precisions with
// uniform weights over orders 1..min(4, ref length), brevity penalty,
// add-one smoothing on orders >= 2 with zero matches. Scale 0..100.
inline double bleu(const TokenSequence& reference, const TokenSequence& hypothesis) {
  if (reference.tokens.empty() || hypothesis.tokens.empty())
    throw std::invalid_argument("bleu: empty sequence");
  const auto& ref = reference.tokens;
  const auto& hyp = hypothesis.tokens;
  int max_order = static_cast<int>(std::min<std::size_t>(4, ref.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= max_order; ++n) {
    std::map<std::vector<std::string>, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
      ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
    double matched = 0.0;
    double total = 0.0;
    std::map<std::vector<std::string>, int> used;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      std::vector<std::string> g(hyp.begin() + i, hyp.begin() + i + n);
      total += 1.0;
      auto it = ref_counts.find(g);
      if (it != ref_counts.end() && used[g] < it->second) {
        ++used[g];
        matched += 1.0;
      }
    }
    double p;
    if (total == 0.0) {
      p = 0.0;
    } else {
      p = matched / total;
    }
    if (n >= 2 && matched == 0.0) p = 1.0 / (total + 1.0);  // add-one smoothing
    if (p <= 0.0) return 0.0;  // no unigram match: score is 0
    log_sum += std::log(p) / max_order;
  }
  double bp = 1.0;
  if (hyp.size() < ref.size())
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  return 100.0 * bp * std::exp(log_sum);
}

// Set-based token F1 (macro per pair), scale 0..100.
inline double token_f1(const TokenSequence& reference, const TokenSequence& hypothesis) {
  if (reference.tokens.empty() || hypothesis.tokens.empty())
    throw std::invalid_argument("token_f1: empty sequence");
  std::set<std::string> r(reference.tokens.begin(), reference.tokens.end());
  std::set<std::string> h(hypothesis.tokens.begin(), hypothesis.tokens.end());
  std::size_t inter = 0;
  for (const auto& t : h)
    if (r.count(t)) ++inter;
  double p = static_cast<double>(inter) / static_cast<double>(h.size());
  double rec = static_cast<double>(inter) / static_cast<double>(r.size());
  if (p + rec == 0.0) return 0.0;
  return 100.0 * 2.0 * p * rec / (p + rec);
}

inline double exact_match_rate(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("exact_match_rate: no pairs");
  std::size_t hits = 0;
  for (const auto& [a, b] : pairs)
    if (a == b) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pairs.size());
}

// nDCG@k with gain / log2(rank + 1), binary or graded gains.
inline double ndcg_at_k(const std::vector<std::string>& ranked_ids,
                        const std::map<std::string, double>& relevant, int k) {
  if (k < 1) throw std::invalid_argument("ndcg: k must be >= 1");
  std::vector<double> gains;
  for (const auto& [id, g] : relevant) {
    (void)id;
    if (g < 0.0) throw std::invalid_argument("ndcg: negative gain");
    if (g > 0.0) gains.push_back(g);
  }
  if (gains.empty()) throw std::runtime_error("undefined nDCG: no relevant items");
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked_ids.size() && i < static_cast<std::size_t>(k); ++i) {
    auto it = relevant.find(ranked_ids[i]);
    if (it != relevant.end())
      dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
  }
  std::sort(gains.begin(), gains.end(), std::greater<double>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < gains.size() && i < static_cast<std::size_t>(k); ++i)
    idcg += gains[i] / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

}  // namespace invertext
