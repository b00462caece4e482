#include "claimcheck/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

using nlohmann::json;

namespace {

RetrievedDocument to_retrieved(const LocalIndex& index, const SourceKind& kind, uint32_t doc, int rank,
                               double score) {
  const auto& stored = index.documents()[doc];
  return {stored.doc_id, kind, stored.title, stored.body, rank, score};
}

std::string web_body(const std::string& title, const std::string& snippet) {
  std::string t(trim(title));
  std::string s = collapse_spaces(snippet);
  if (t.empty()) return s;
  if (std::string_view(".!?").find(t.back()) == std::string_view::npos) t += '.';
  return s.empty() ? t : t + " " + s;
}

}  // namespace

// ---------------------------------------------------------------------------

LocalIndexSource::LocalIndexSource(SourceKind kind, std::shared_ptr<const LocalIndex> index)
    : kind_(std::move(kind)), index_(std::move(index)) {
  if (!index_) throw ConfigError("local source '" + kind_.name + "' has no index");
}

std::vector<RetrievedDocument> LocalIndexSource::retrieve(const std::string& query, int k) {
  std::vector<RetrievedDocument> out;
  if (k <= 0) return out;
  const auto hits = index_->search(query, static_cast<size_t>(k));
  out.reserve(hits.size());
  int rank = 1;
  for (const auto& hit : hits) out.push_back(to_retrieved(*index_, kind_, hit.doc_index, rank++, hit.score));
  return out;
}

std::string LocalIndexSource::identity() const {
  return "bm25-local(" + std::to_string(index_->stats().doc_count) + " docs)";
}

// ---------------------------------------------------------------------------

BiomedicalSource::BiomedicalSource(SourceKind kind, std::shared_ptr<const LocalIndex> index,
                                   std::shared_ptr<EmbeddingProvider> dense)
    : kind_(std::move(kind)), index_(std::move(index)), dense_(std::move(dense)) {
  if (!index_) throw ConfigError("biomedical source '" + kind_.name + "' has no index");
}

std::string BiomedicalSource::identity() const {
  std::string id = "bm25-biomedical(" + std::to_string(index_->stats().doc_count) + " docs)";
  if (dense_) id += "+rrf:" + dense_->identity();
  return id;
}

const std::vector<Embedding>& BiomedicalSource::document_embeddings() {
  std::call_once(embed_once_, [this] {
    std::vector<std::string> texts;
    texts.reserve(index_->documents().size());
    for (const auto& doc : index_->documents()) texts.push_back(indexed_text(doc));
    doc_embeddings_ = dense_->embed(texts);
  });
  return doc_embeddings_;
}

std::vector<RetrievedDocument> BiomedicalSource::retrieve(const std::string& query, int k) {
  std::vector<RetrievedDocument> out;
  if (k <= 0) return out;
  const auto& docs = index_->documents();

  if (!dense_) {
    const auto hits = index_->search(query, static_cast<size_t>(k));
    int rank = 1;
    for (const auto& hit : hits) out.push_back(to_retrieved(*index_, kind_, hit.doc_index, rank++, hit.score));
    return out;
  }

  std::unordered_map<uint32_t, double> fused;
  const auto lexical = index_->search(query, docs.size());
  for (size_t r = 0; r < lexical.size(); ++r) {
    fused[lexical[r].doc_index] += 1.0 / (kRrfConstant + static_cast<double>(r + 1));
  }

  const auto& doc_vectors = document_embeddings();
  const std::vector<std::string> query_batch = {query};
  const auto query_vector = dense_->embed(query_batch).at(0);
  std::vector<ScoredDocument> dense_ranked;
  for (uint32_t d = 0; d < doc_vectors.size(); ++d) {
    try {
      const double cosine = cosine_similarity(query_vector, doc_vectors[d]);
      if (cosine > 0.0) dense_ranked.push_back({d, cosine});
    } catch (const ZeroVector&) {
    }
  }
  std::sort(dense_ranked.begin(), dense_ranked.end(), [&](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return docs[a.doc_index].doc_id < docs[b.doc_index].doc_id;
  });
  for (size_t r = 0; r < dense_ranked.size(); ++r) {
    fused[dense_ranked[r].doc_index] += 1.0 / (kRrfConstant + static_cast<double>(r + 1));
  }

  std::vector<ScoredDocument> ranked;
  ranked.reserve(fused.size());
  for (const auto& [doc, score] : fused) ranked.push_back({doc, score});
  std::sort(ranked.begin(), ranked.end(), [&](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return docs[a.doc_index].doc_id < docs[b.doc_index].doc_id;
  });
  if (ranked.size() > static_cast<size_t>(k)) ranked.resize(static_cast<size_t>(k));
  int rank = 1;
  for (const auto& hit : ranked) out.push_back(to_retrieved(*index_, kind_, hit.doc_index, rank++, hit.score));
  return out;
}

// ---------------------------------------------------------------------------

WebSearchSource::WebSearchSource(SourceKind kind, WebSearchEndpoint endpoint,
                                 std::shared_ptr<HttpTransport> transport, int max_in_flight, RetryPolicy retry)
    : kind_(std::move(kind)),
      endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      limiter_(max_in_flight),
      retry_(retry) {
  if (!transport_) throw ConfigError("web source needs a transport");
}

std::unique_ptr<WebSearchSource> WebSearchSource::from_env(SourceKind kind, std::shared_ptr<HttpTransport> transport,
                                                           int max_in_flight) {
  require_network("web search source");
  WebSearchEndpoint endpoint;
  auto key = env_var("SEARCH_API_KEY");
  auto engine = env_var("SEARCH_ENGINE_ID");
  if (!key || !engine) throw ConfigError("SEARCH_API_KEY and SEARCH_ENGINE_ID must be set");
  endpoint.api_key = *key;
  endpoint.engine_id = *engine;
  if (auto url = env_var("SEARCH_API_URL")) endpoint.url = *url;
  return std::make_unique<WebSearchSource>(std::move(kind), std::move(endpoint), std::move(transport),
                                           max_in_flight);
}

std::string WebSearchSource::request_url(const std::string& query, int k) const {
  // The custom-search API serves at most 10 results per request.
  const int num = std::clamp(k, 1, 10);
  std::string url = endpoint_.url;
  url += url.find('?') == std::string::npos ? '?' : '&';
  url += "key=" + url_encode(endpoint_.api_key);
  url += "&cx=" + url_encode(endpoint_.engine_id);
  url += "&q=" + url_encode(query);
  url += "&num=" + std::to_string(num);
  return url;
}

std::vector<RetrievedDocument> WebSearchSource::retrieve(const std::string& query, int k) {
  if (k <= 0) return {};
  HttpRequest request;
  request.method = "GET";
  request.url = request_url(query, k);
  HttpResponse response;
  {
    auto slot = limiter_.acquire();
    response = send_with_retry(*transport_, request, retry_);
  }
  if (response.status < 200 || response.status >= 300) {
    throw SourceUnavailable("web search returned HTTP " + std::to_string(response.status));
  }
  return parse_web_search_response(response.body, kind_, k);
}

std::vector<RetrievedDocument> parse_web_search_response(const std::string& body, const SourceKind& kind, int k) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) throw SourceUnavailable("web search response is not a JSON object");
  if (parsed.contains("error")) throw SourceUnavailable("web search error: " + parsed["error"].dump());
  std::vector<RetrievedDocument> out;
  if (!parsed.contains("items")) return out;  // no results
  if (!parsed["items"].is_array()) throw SourceUnavailable("web search 'items' is not an array");

  for (const auto& item : parsed["items"]) {
    if (static_cast<int>(out.size()) >= k) break;
    if (!item.is_object() || !item.contains("link") || !item["link"].is_string()) continue;
    const std::string title = item.contains("title") && item["title"].is_string() ? item["title"].get<std::string>() : "";
    const std::string snippet =
        item.contains("snippet") && item["snippet"].is_string() ? item["snippet"].get<std::string>() : "";
    const int rank = static_cast<int>(out.size()) + 1;
    // No native relevance score is exposed; reciprocal rank keeps scores monotone.
    out.push_back({item["link"].get<std::string>(), kind, title, web_body(title, snippet), rank, 1.0 / rank});
  }
  return out;
}

// ---------------------------------------------------------------------------

FixtureSource::FixtureSource(SourceKind kind, std::map<std::string, std::vector<RetrievedDocument>> table)
    : kind_(std::move(kind)), table_(std::move(table)) {
  for (auto& [query, docs] : table_) {
    for (size_t i = 0; i < docs.size(); ++i) {
      docs[i].source = kind_;
      docs[i].rank = static_cast<int>(i) + 1;
      if (i > 0 && docs[i].score > docs[i - 1].score) {
        throw ConfigError("fixture scores for query '" + query + "' must be non-increasing");
      }
    }
  }
}

std::unique_ptr<FixtureSource> FixtureSource::from_file(SourceKind kind, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing("retrieval fixture not found: " + path);
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) throw ConfigError("retrieval fixture must be a JSON object: " + path);
  std::map<std::string, std::vector<RetrievedDocument>> table;
  for (const auto& [query, docs] : parsed.items()) {
    auto& list = table[query];
    const size_t n = docs.size();
    for (size_t i = 0; i < n; ++i) {
      const auto& d = docs[i];
      RetrievedDocument doc;
      doc.doc_id = d.at("doc_id").get<std::string>();
      doc.title = d.value("title", "");
      doc.body = d.value("body", "");
      doc.score = d.value("score", static_cast<double>(n - i));
      list.push_back(std::move(doc));
    }
  }
  return std::make_unique<FixtureSource>(std::move(kind), std::move(table));
}

std::vector<RetrievedDocument> FixtureSource::retrieve(const std::string& query, int k) {
  auto it = table_.find(query);
  if (it == table_.end()) it = table_.find("*");
  if (it == table_.end() || k <= 0) return {};
  const auto& docs = it->second;
  return {docs.begin(), docs.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(docs.size()))};
}

// ---------------------------------------------------------------------------

std::vector<RetrievedDocument> retrieve_single(const std::string& query, KnowledgeSource& source,
                                               const PipelineConfig& cfg) {
  try {
    return source.retrieve(query, cfg.retrieval_depth);
  } catch (const SourceUnavailable&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw SourceUnavailable(source.kind().name + ": " + e.what());
  }
}

DualRetrieval retrieve_dual(const ClaimPair& claim, KnowledgeSource& source, const PipelineConfig& cfg) {
  if (!claim.negated_text) throw InvalidClaim("retrieve_dual needs a negated claim for '" + claim.id + "'");
  DualRetrieval result;
  result.positive = retrieve_single(claim.text, source, cfg);
  result.negative = retrieve_single(*claim.negated_text, source, cfg);
  return result;
}

std::string url_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size() * 3);
  for (unsigned char ch : text) {
    if (std::isalnum(ch) || ch == '-' || ch == '_' || ch == '.' || ch == '~') {
      out.push_back(static_cast<char>(ch));
    } else {
      out.push_back('%');
      out.push_back(kHex[ch >> 4]);
      out.push_back(kHex[ch & 0x0F]);
    }
  }
  return out;
}

}  // namespace claimcheck
