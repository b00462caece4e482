#include "claimcheck/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

using nlohmann::json;

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()) + ")");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroVector("cosine_similarity: zero vector");
  const double cosine = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(cosine, -1.0, 1.0);
}

HashedBowEmbedder::HashedBowEmbedder(size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ConfigError("embedding dimension must be >= 1");
}

Embedding HashedBowEmbedder::embed_one(std::string_view text) const {
  Embedding vec(dimension_, 0.0);
  for (const auto& token : tokenize(text)) vec[fnv1a64(token) % dimension_] += 1.0;
  return vec;
}

std::vector<Embedding> HashedBowEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(embed_one(text));
  return out;
}

FixtureEmbedder::FixtureEmbedder(std::map<std::string, Embedding> table) : table_(std::move(table)) {
  size_t dim = 0;
  for (const auto& [text, vec] : table_) {
    if (dim == 0) dim = vec.size();
    if (vec.empty() || vec.size() != dim) throw ConfigError("fixture embeddings must share one dimension >= 1");
  }
}

std::vector<Embedding> FixtureEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto it = table_.find(text);
    if (it == table_.end()) throw ProviderUnavailable("no fixture embedding for: " + text);
    out.push_back(it->second);
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string url, std::string api_key, std::string model,
                               std::shared_ptr<HttpTransport> transport, int max_in_flight,
                               RetryPolicy retry)
    : url_(std::move(url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      transport_(std::move(transport)),
      limiter_(max_in_flight),
      retry_(retry) {
  if (url_.empty()) throw ConfigError("embedding endpoint URL is empty");
  if (!transport_) throw ConfigError("remote embedder needs a transport");
}

std::unique_ptr<RemoteEmbedder> RemoteEmbedder::from_env(std::shared_ptr<HttpTransport> transport,
                                                         int max_in_flight) {
  require_network("remote embedding provider");
  auto url = env_var("EMBED_API_URL");
  if (!url) throw ConfigError("EMBED_API_URL is not set");
  return std::make_unique<RemoteEmbedder>(*url, env_var("EMBED_API_KEY").value_or(""),
                                          env_var("EMBED_MODEL").value_or(""), std::move(transport),
                                          max_in_flight);
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  HttpRequest request;
  request.method = "POST";
  request.url = url_;
  request.headers.emplace_back("Content-Type", "application/json");
  if (!api_key_.empty()) request.headers.emplace_back("Authorization", "Bearer " + api_key_);
  json body = {{"input", std::vector<std::string>(texts.begin(), texts.end())}};
  if (!model_.empty()) body["model"] = model_;
  request.body = body.dump();

  HttpResponse response;
  {
    auto slot = limiter_.acquire();
    response = send_with_retry(*transport_, request, retry_);
  }
  if (response.status < 200 || response.status >= 300) {
    throw ProviderUnavailable("embedding endpoint returned HTTP " + std::to_string(response.status));
  }
  return parse_embedding_response(response.body, texts.size());
}

std::vector<Embedding> parse_embedding_response(const std::string& body, size_t expected_count) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw ProviderUnavailable("embedding response is not JSON");

  json rows;
  if (parsed.is_array()) {
    rows = parsed;
  } else if (parsed.is_object() && parsed.contains("embeddings")) {
    rows = parsed["embeddings"];
  } else if (parsed.is_object() && parsed.contains("data") && parsed["data"].is_array()) {
    rows = json::array();
    for (const auto& item : parsed["data"]) {
      if (!item.contains("embedding")) throw ProviderUnavailable("embedding item without 'embedding'");
      rows.push_back(item["embedding"]);
    }
  } else {
    throw ProviderUnavailable("unrecognised embedding response shape");
  }

  if (!rows.is_array() || rows.size() != expected_count) {
    throw ProviderUnavailable("embedding response count mismatch");
  }
  std::vector<Embedding> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || row.empty()) throw ProviderUnavailable("embedding row is not a non-empty array");
    Embedding vec;
    vec.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) throw ProviderUnavailable("embedding component is not a number");
      vec.push_back(x.get<double>());
    }
    if (!out.empty() && vec.size() != out.front().size()) {
      throw ProviderUnavailable("embedding rows have different dimensions");
    }
    out.push_back(std::move(vec));
  }
  return out;
}

}  // namespace claimcheck
