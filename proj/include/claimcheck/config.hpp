#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimcheck/evaluation.hpp"
#include "claimcheck/http.hpp"
#include "claimcheck/pipeline.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

/// One knowledge source. kind: "local" (BM25 over a corpus or saved index),
/// "biomedical" (BM25 + dense fused by RRF), "web" (search API) or
/// "fixture" (canned results keyed by query).
struct SourceSpec {
  std::string name;
  SourceFamily family = SourceFamily::Custom;
  std::string kind;
  std::filesystem::path path;
  bool dense = true;  // biomedical only
  std::string url;    // web only; SEARCH_API_URL overrides
};

/// kind "" means: pick the offline implementation in mock mode, otherwise
/// the remote one when its endpoint is configured.
struct ProviderSpec {
  std::string kind;
  std::filesystem::path path;    // fixture table
  std::string url;               // remote endpoint; env overrides
  std::string model;             // remote model; env overrides
  size_t dimension = 256;        // hashed embedder
  std::filesystem::path prompt;  // template file
};

struct RunConfig {
  std::filesystem::path base_dir;  // where relative paths were resolved
  std::optional<DatasetDescriptor> dataset;
  std::vector<SourceSpec> sources;
  ProviderSpec negation;
  ProviderSpec embedding;
  ProviderSpec verdict;
  PipelineConfig pipeline;
  bool mock = false;
};

/// Reads a JSON config; relative paths resolve against its directory.
/// Unknown keys are rejected. Throws ConfigError or FileMissing.
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Environment layer: CLAIMCHECK_MOCK (1/true/yes) and the provider
/// endpoint variables (LLM_*, NEGATION_*, EMBED_*, SEARCH_API_URL).
void apply_env(RunConfig& cfg);

std::string verdict_template(const RunConfig& cfg);
std::string negation_template(const RunConfig& cfg);

/// Instantiates only the negation provider, for commands that need nothing else.
std::shared_ptr<NegationProvider> build_negation_provider(const RunConfig& cfg,
                                                          std::shared_ptr<HttpTransport> transport = nullptr);

/// Instantiates providers and sources. `only_sources` (names) restricts the
/// configured sources; an unknown name throws UsageError. In mock mode any
/// remote provider throws ConfigError before a socket is opened.
Providers build_providers(const RunConfig& cfg, const std::vector<std::string>& only_sources = {},
                          std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace claimcheck
