#include "claimcheck/config.hpp"

#include <set>

#include "claimcheck/embedding.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/local_index.hpp"
#include "claimcheck/negation.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/text.hpp"
#include "claimcheck/verdict.hpp"

namespace claimcheck {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p = value;
  return (p.is_relative() && !base.empty() ? base / p : p).lexically_normal();
}

ProviderSpec provider_from_json(const json& j, const fs::path& base, const std::string& where) {
  check_keys(j, {"kind", "path", "url", "model", "dimension", "prompt"}, where);
  ProviderSpec spec;
  spec.kind = j.value("kind", "");
  spec.path = resolve(base, j.value("path", ""));
  spec.url = j.value("url", "");
  spec.model = j.value("model", "");
  spec.dimension = j.value("dimension", spec.dimension);
  spec.prompt = resolve(base, j.value("prompt", ""));
  return spec;
}

SourceSpec source_from_json(const json& j, const fs::path& base) {
  check_keys(j, {"name", "family", "kind", "path", "dense", "url"}, "source");
  SourceSpec spec;
  const std::string family_text = j.value("family", "");
  spec.name = j.value("name", "");
  if (!family_text.empty()) {
    auto family = parse_source_family(family_text);
    if (!family) throw ConfigError("unknown source family '" + family_text + "'");
    spec.family = *family;
  } else if (auto family = parse_source_family(spec.name)) {
    spec.family = *family;
  }
  if (spec.name.empty()) {
    switch (spec.family) {
      case SourceFamily::WikipediaLike: spec.name = SourceKind::wikipedia().name; break;
      case SourceFamily::PubMedLike: spec.name = SourceKind::pubmed().name; break;
      case SourceFamily::WebSearch: spec.name = SourceKind::web().name; break;
      case SourceFamily::Custom: throw ConfigError("custom sources need a name");
    }
  }
  spec.kind = j.value("kind", spec.family == SourceFamily::WebSearch ? "web" : "local");
  static const std::set<std::string> kKinds = {"local", "biomedical", "web", "fixture"};
  if (!kKinds.contains(spec.kind)) throw ConfigError("unknown source kind '" + spec.kind + "'");
  spec.path = resolve(base, j.value("path", ""));
  if (spec.kind != "web" && spec.path.empty()) throw ConfigError("source '" + spec.name + "' needs a path");
  spec.dense = j.value("dense", true);
  spec.url = j.value("url", "");
  return spec;
}

PipelineConfig pipeline_from_json(const json& j) {
  check_keys(j,
             {"retrieval_depth", "selection_docs", "sentences_per_doc", "final_top_p", "seed", "merge_heuristic",
              "logprob_floor", "max_in_flight", "workers"},
             "pipeline");
  PipelineConfig cfg;
  cfg.retrieval_depth = j.value("retrieval_depth", cfg.retrieval_depth);
  cfg.selection_docs = j.value("selection_docs", cfg.selection_docs);
  cfg.sentences_per_doc = j.value("sentences_per_doc", cfg.sentences_per_doc);
  cfg.final_top_p = j.value("final_top_p", cfg.final_top_p);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.merge_heuristic = j.value("merge_heuristic", cfg.merge_heuristic);
  cfg.logprob_floor = j.value("logprob_floor", cfg.logprob_floor);
  cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
  cfg.workers = j.value("workers", cfg.workers);
  return cfg;
}

bool truthy(const std::string& value) {
  const std::string v = ascii_lower(value);
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

std::string read_template(const fs::path& path, std::string_view fallback, std::initializer_list<const char*> needs) {
  std::string text = std::string(fallback);
  if (!path.empty()) {
    if (!fs::is_regular_file(path)) throw ConfigError("prompt template not found: " + path.string());
    text = read_file(path);
  }
  for (const char* placeholder : needs) {
    if (text.find(placeholder) == std::string::npos) {
      throw ConfigError("prompt template " + (path.empty() ? std::string("(default)") : path.string()) + " lacks " +
                        placeholder);
    }
  }
  return text;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, {"dataset", "sources", "negation", "embedding", "verdict", "pipeline", "mock"}, "config");
  try {
    RunConfig cfg;
    cfg.base_dir = base_dir;
    if (j.contains("dataset")) cfg.dataset = descriptor_from_json(j.at("dataset"), base_dir);
    if (j.contains("sources")) {
      for (const auto& s : j.at("sources")) cfg.sources.push_back(source_from_json(s, base_dir));
    }
    if (j.contains("negation")) cfg.negation = provider_from_json(j.at("negation"), base_dir, "negation");
    if (j.contains("embedding")) cfg.embedding = provider_from_json(j.at("embedding"), base_dir, "embedding");
    if (j.contains("verdict")) cfg.verdict = provider_from_json(j.at("verdict"), base_dir, "verdict");
    if (j.contains("pipeline")) cfg.pipeline = pipeline_from_json(j.at("pipeline"));
    cfg.mock = j.value("mock", false);
    validate(cfg.pipeline);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& file) {
  if (!fs::is_regular_file(file)) throw FileMissing("config file not found: " + file.string());
  auto parsed = json::parse(read_file(file), nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("config is not valid JSON: " + file.string());
  return run_config_from_json(parsed, fs::absolute(file).parent_path());
}

void apply_env(RunConfig& cfg) {
  if (auto v = env_var("CLAIMCHECK_MOCK")) cfg.mock = truthy(*v);
  if (auto v = env_var("LLM_API_URL")) cfg.verdict.url = *v;
  if (auto v = env_var("LLM_MODEL")) cfg.verdict.model = *v;
  if (auto v = env_var("NEGATION_API_URL")) cfg.negation.url = *v;
  if (auto v = env_var("NEGATION_MODEL")) cfg.negation.model = *v;
  if (auto v = env_var("EMBED_API_URL")) cfg.embedding.url = *v;
  if (auto v = env_var("EMBED_MODEL")) cfg.embedding.model = *v;
  if (auto v = env_var("SEARCH_API_URL")) {
    for (auto& s : cfg.sources) {
      if (s.kind == "web") s.url = *v;
    }
  }
}

std::string verdict_template(const RunConfig& cfg) {
  return read_template(cfg.verdict.prompt, kDefaultVerdictTemplate, {"{claim}", "{evidence}", "{options}"});
}

std::string negation_template(const RunConfig& cfg) {
  return read_template(cfg.negation.prompt, kDefaultNegationPrompt, {"{claim}"});
}

std::shared_ptr<NegationProvider> build_negation_provider(const RunConfig& cfg,
                                                          std::shared_ptr<HttpTransport> transport) {
  set_network_allowed(!cfg.mock);
  std::string kind = cfg.negation.kind;
  if (kind.empty()) kind = cfg.mock || cfg.negation.url.empty() ? "rule" : "remote";
  if (kind == "rule") return std::make_shared<RuleBasedNegator>();
  if (kind == "fixture") {
    return std::make_shared<FixtureNegator>(FixtureNegator::from_file(cfg.negation.path.string()));
  }
  if (kind == "remote") {
    require_network("remote negation provider");
    if (!transport) transport = make_http_transport();
    if (cfg.negation.url.empty()) throw ConfigError("NEGATION_API_URL is not set");
    ChatEndpoint endpoint{cfg.negation.url, env_var("NEGATION_API_KEY").value_or(""),
                          cfg.negation.model.empty() ? "mistral-large-latest" : cfg.negation.model};
    return std::make_shared<RemoteNegator>(std::move(endpoint), negation_template(cfg), transport,
                                           cfg.pipeline.max_in_flight);
  }
  throw ConfigError("unknown negation provider '" + kind + "'");
}

Providers build_providers(const RunConfig& cfg, const std::vector<std::string>& only_sources,
                          std::shared_ptr<HttpTransport> transport) {
  set_network_allowed(!cfg.mock);
  auto network = [&](std::string_view what) {
    require_network(what);
    if (!transport) transport = make_http_transport();
    return transport;
  };
  const int in_flight = cfg.pipeline.max_in_flight;
  Providers providers;

  providers.negation = build_negation_provider(cfg, transport);

  // Embedding.
  std::string kind = cfg.embedding.kind;
  if (kind.empty()) kind = cfg.mock || cfg.embedding.url.empty() ? "hashed" : "remote";
  if (kind == "hashed") {
    providers.embedder = std::make_shared<HashedBowEmbedder>(cfg.embedding.dimension);
  } else if (kind == "remote") {
    auto t = network("remote embedding provider");
    if (cfg.embedding.url.empty()) throw ConfigError("EMBED_API_URL is not set");
    providers.embedder = std::make_shared<RemoteEmbedder>(cfg.embedding.url, env_var("EMBED_API_KEY").value_or(""),
                                                          cfg.embedding.model, t, in_flight);
  } else {
    throw ConfigError("unknown embedding provider '" + kind + "'");
  }

  // Verdict.
  kind = cfg.verdict.kind;
  if (kind.empty()) kind = cfg.mock ? "mock" : "remote";
  if (kind == "mock") {
    providers.verdict = cfg.verdict.path.empty()
                            ? std::make_shared<MockVerdictProvider>()
                            : std::shared_ptr<VerdictProvider>(MockVerdictProvider::from_file(cfg.verdict.path.string()));
  } else if (kind == "remote") {
    auto t = network("remote verdict provider");
    if (cfg.verdict.url.empty()) throw ConfigError("LLM_API_URL is not set");
    if (cfg.verdict.model.empty()) throw ConfigError("LLM_MODEL is not set");
    ChatEndpoint endpoint{cfg.verdict.url, env_var("LLM_API_KEY").value_or(""), cfg.verdict.model};
    providers.verdict = std::make_shared<RemoteVerdictProvider>(std::move(endpoint), t, in_flight);
  } else {
    throw ConfigError("unknown verdict provider '" + kind + "'");
  }

  // Sources.
  std::vector<SourceSpec> specs = cfg.sources;
  if (specs.empty() && !cfg.mock && env_var("SEARCH_API_KEY")) {
    specs.push_back({SourceKind::web().name, SourceFamily::WebSearch, "web", {}, true, ""});
  }
  std::set<std::string> wanted;
  for (const auto& name : only_sources) {
    if (name == kMergedSource) continue;
    const bool known = std::any_of(specs.begin(), specs.end(), [&](const SourceSpec& s) { return s.name == name; });
    if (!known) throw UsageError("unknown source '" + name + "'");
    wanted.insert(name);
  }
  for (const auto& spec : specs) {
    if (!wanted.empty() && !wanted.contains(spec.name)) continue;
    SourceKind source_kind{spec.family, spec.name};
    if (spec.kind == "local") {
      auto index = std::make_shared<const LocalIndex>(open_index(spec.path));
      providers.sources.push_back(std::make_shared<LocalIndexSource>(source_kind, index));
    } else if (spec.kind == "biomedical") {
      auto index = std::make_shared<const LocalIndex>(open_index(spec.path));
      providers.sources.push_back(
          std::make_shared<BiomedicalSource>(source_kind, index, spec.dense ? providers.embedder : nullptr));
    } else if (spec.kind == "fixture") {
      providers.sources.push_back(FixtureSource::from_file(source_kind, spec.path.string()));
    } else {
      auto t = network("web search source");
      WebSearchEndpoint endpoint;
      if (!spec.url.empty()) endpoint.url = spec.url;
      auto key = env_var("SEARCH_API_KEY");
      auto engine = env_var("SEARCH_ENGINE_ID");
      if (!key || !engine) throw ConfigError("SEARCH_API_KEY and SEARCH_ENGINE_ID must be set for web search");
      endpoint.api_key = *key;
      endpoint.engine_id = *engine;
      providers.sources.push_back(std::make_shared<WebSearchSource>(source_kind, endpoint, t, in_flight));
    }
  }
  if (providers.sources.empty()) throw ConfigError("no knowledge sources configured");
  normalize_sources(providers.sources);
  return providers;
}

}  // namespace claimcheck
