#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "claimcheck/http.hpp"

namespace claimcheck {

using Embedding = std::vector<double>;

/// Maps texts to fixed-dimension vectors. Deterministic for a given
/// implementation and input; safe for concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  virtual std::string identity() const = 0;
};

/// u.v / (|u| |v|). Throws ZeroVector when either norm is zero and
/// std::invalid_argument on a dimension mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Offline embedder: tokens from the shared tokenizer, each hashed with
/// FNV-1a 64 into one of `dimension` buckets; the vector holds raw counts.
class HashedBowEmbedder final : public EmbeddingProvider {
 public:
  explicit HashedBowEmbedder(size_t dimension = 256);

  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  Embedding embed_one(std::string_view text) const;
  std::string identity() const override { return "hashed-bow-" + std::to_string(dimension_); }
  size_t dimension() const { return dimension_; }

 private:
  size_t dimension_;
};

/// Exact-text lookup table; unknown texts raise ProviderUnavailable.
class FixtureEmbedder final : public EmbeddingProvider {
 public:
  explicit FixtureEmbedder(std::map<std::string, Embedding> table);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string identity() const override { return "fixture"; }

 private:
  std::map<std::string, Embedding> table_;
};

/// HTTP embedder. Request body: {"input": [texts...], "model": ...}.
/// Accepted responses: a bare array of float arrays, {"embeddings": [...]},
/// or the OpenAI shape {"data": [{"embedding": [...]}, ...]}.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string url, std::string api_key, std::string model,
                 std::shared_ptr<HttpTransport> transport, int max_in_flight = 4,
                 RetryPolicy retry = {});

  /// Reads EMBED_API_URL, EMBED_API_KEY and (optionally) EMBED_MODEL.
  static std::unique_ptr<RemoteEmbedder> from_env(std::shared_ptr<HttpTransport> transport,
                                                  int max_in_flight = 4);

  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string identity() const override { return "remote:" + (model_.empty() ? url_ : model_); }

 private:
  std::string url_;
  std::string api_key_;
  std::string model_;
  std::shared_ptr<HttpTransport> transport_;
  InFlightLimiter limiter_;
  RetryPolicy retry_;
};

/// Parses any accepted embedding response shape; throws ProviderUnavailable
/// on malformed bodies, count mismatches or ragged dimensions.
std::vector<Embedding> parse_embedding_response(const std::string& body, size_t expected_count);

}  // namespace claimcheck
