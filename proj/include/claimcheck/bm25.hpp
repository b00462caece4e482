#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace claimcheck {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Corpus-level statistics BM25 needs.
struct CorpusStats {
  size_t doc_count = 0;                   // N
  size_t total_length = 0;                // sum of document lengths in tokens
  double avg_doc_length = 0.0;            // avgdl
  std::map<std::string, size_t> doc_freq;  // df(t)

  size_t df(const std::string& term) const {
    auto it = doc_freq.find(term);
    return it == doc_freq.end() ? 0 : it->second;
  }
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); always positive.
double bm25_idf(size_t doc_count, size_t doc_freq);

/// One term's contribution given its frequency in a document of `doc_length`.
double bm25_term_weight(double idf, size_t tf, size_t doc_length, double avg_doc_length,
                        const Bm25Params& params = {});

/// Okapi BM25 of a tokenized document against a tokenized query. Repeated
/// query terms count once. Terms are summed in lexicographic order so any
/// other implementation that does the same is bit-identical.
double bm25_score(std::span<const std::string> query_terms, std::span<const std::string> doc_terms,
                  const CorpusStats& stats, const Bm25Params& params = {});

/// Distinct query terms in lexicographic order.
std::vector<std::string> distinct_terms(std::span<const std::string> terms);

}  // namespace claimcheck
