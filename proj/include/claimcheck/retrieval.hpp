#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "claimcheck/embedding.hpp"
#include "claimcheck/http.hpp"
#include "claimcheck/local_index.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

struct RetrievedDocument {
  std::string doc_id;
  SourceKind source;
  std::string title;
  std::string body;
  int rank = 1;        // 1-based, contiguous within one result list
  double score = 0.0;  // adapter-native relevance, non-increasing with rank

  friend bool operator==(const RetrievedDocument&, const RetrievedDocument&) = default;
};

/// A knowledge source returning at most `k` documents in rank order.
/// retrieve() must tolerate concurrent callers.
class KnowledgeSource {
 public:
  virtual ~KnowledgeSource() = default;
  virtual std::vector<RetrievedDocument> retrieve(const std::string& query, int k) = 0;
  virtual const SourceKind& kind() const = 0;
  virtual std::string identity() const = 0;
};

/// BM25 over a local inverted index (the encyclopedia stand-in).
class LocalIndexSource final : public KnowledgeSource {
 public:
  LocalIndexSource(SourceKind kind, std::shared_ptr<const LocalIndex> index);

  std::vector<RetrievedDocument> retrieve(const std::string& query, int k) override;
  const SourceKind& kind() const override { return kind_; }
  std::string identity() const override;

 private:
  SourceKind kind_;
  std::shared_ptr<const LocalIndex> index_;
};

/// Lexical BM25 over an abstract corpus, optionally fused with dense cosine
/// ranking by reciprocal-rank fusion: score = 1/(60 + r_bm25) + 1/(60 + r_dense).
/// A document absent from one ranking contributes nothing for it. Both
/// rankings cover the whole corpus, so results do not depend on k beyond
/// truncation.
class BiomedicalSource final : public KnowledgeSource {
 public:
  static constexpr double kRrfConstant = 60.0;

  BiomedicalSource(SourceKind kind, std::shared_ptr<const LocalIndex> index,
                   std::shared_ptr<EmbeddingProvider> dense = nullptr);

  std::vector<RetrievedDocument> retrieve(const std::string& query, int k) override;
  const SourceKind& kind() const override { return kind_; }
  std::string identity() const override;

 private:
  const std::vector<Embedding>& document_embeddings();

  SourceKind kind_;
  std::shared_ptr<const LocalIndex> index_;
  std::shared_ptr<EmbeddingProvider> dense_;
  std::once_flag embed_once_;
  std::vector<Embedding> doc_embeddings_;
};

struct WebSearchEndpoint {
  std::string url = "https://www.googleapis.com/customsearch/v1";
  std::string api_key;
  std::string engine_id;
};

/// Custom-search style web adapter. GET <url>?key=..&cx=..&q=..&num=k and
/// reads items[].title, items[].snippet, items[].link. Body = title + snippet.
class WebSearchSource final : public KnowledgeSource {
 public:
  WebSearchSource(SourceKind kind, WebSearchEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                  int max_in_flight = 4, RetryPolicy retry = {});

  /// Reads SEARCH_API_KEY, SEARCH_ENGINE_ID and optional SEARCH_API_URL.
  static std::unique_ptr<WebSearchSource> from_env(SourceKind kind, std::shared_ptr<HttpTransport> transport,
                                                   int max_in_flight = 4);

  std::vector<RetrievedDocument> retrieve(const std::string& query, int k) override;
  const SourceKind& kind() const override { return kind_; }
  std::string identity() const override { return "web:" + endpoint_.url; }

  std::string request_url(const std::string& query, int k) const;

 private:
  SourceKind kind_;
  WebSearchEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  InFlightLimiter limiter_;
  RetryPolicy retry_;
};

/// Parses a custom-search JSON body into at most k ranked documents.
std::vector<RetrievedDocument> parse_web_search_response(const std::string& body, const SourceKind& kind, int k);

/// Fixed query -> documents table. The "*" entry, when present, answers any
/// query without its own entry; otherwise unknown queries return nothing.
class FixtureSource final : public KnowledgeSource {
 public:
  FixtureSource(SourceKind kind, std::map<std::string, std::vector<RetrievedDocument>> table);
  /// JSON object {"query": [{"doc_id", "title", "body", "score"?}, ...], ...}.
  static std::unique_ptr<FixtureSource> from_file(SourceKind kind, const std::string& path);

  std::vector<RetrievedDocument> retrieve(const std::string& query, int k) override;
  const SourceKind& kind() const override { return kind_; }
  std::string identity() const override { return "fixture"; }

 private:
  SourceKind kind_;
  std::map<std::string, std::vector<RetrievedDocument>> table_;
};

struct DualRetrieval {
  std::vector<RetrievedDocument> positive;  // R(c, k)
  std::vector<RetrievedDocument> negative;  // R(c-bar, k)
};

/// Retrieves for the claim and for its negation. Requires negated_text.
/// Any adapter failure is rethrown as SourceUnavailable.
DualRetrieval retrieve_dual(const ClaimPair& claim, KnowledgeSource& source, const PipelineConfig& cfg);

/// Claim-only retrieval for the original-only condition.
std::vector<RetrievedDocument> retrieve_single(const std::string& query, KnowledgeSource& source,
                                               const PipelineConfig& cfg);

std::string url_encode(std::string_view text);

}  // namespace claimcheck
