#include "claimcheck/bm25.hpp"

#include <algorithm>
#include <cmath>

namespace claimcheck {

double bm25_idf(size_t doc_count, size_t doc_freq) {
  const double n = static_cast<double>(doc_count);
  const double df = static_cast<double>(doc_freq);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_term_weight(double idf, size_t tf, size_t doc_length, double avg_doc_length,
                        const Bm25Params& params) {
  if (tf == 0) return 0.0;
  const double f = static_cast<double>(tf);
  const double length_ratio = avg_doc_length > 0.0 ? static_cast<double>(doc_length) / avg_doc_length : 0.0;
  const double norm = params.k1 * (1.0 - params.b + params.b * length_ratio);
  return idf * (f * (params.k1 + 1.0)) / (f + norm);
}

std::vector<std::string> distinct_terms(std::span<const std::string> terms) {
  std::vector<std::string> out(terms.begin(), terms.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double bm25_score(std::span<const std::string> query_terms, std::span<const std::string> doc_terms,
                  const CorpusStats& stats, const Bm25Params& params) {
  double score = 0.0;
  for (const auto& term : distinct_terms(query_terms)) {
    const auto tf = static_cast<size_t>(std::count(doc_terms.begin(), doc_terms.end(), term));
    if (tf == 0) continue;
    score += bm25_term_weight(bm25_idf(stats.doc_count, stats.df(term)), tf, doc_terms.size(),
                              stats.avg_doc_length, params);
  }
  return score;
}

}  // namespace claimcheck
