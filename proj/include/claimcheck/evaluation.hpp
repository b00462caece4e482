#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimcheck/analysis.hpp"
#include "claimcheck/pipeline.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

// ---------------------------------------------------------------------------
// Label schemes and datasets
// ---------------------------------------------------------------------------

/// {"name": ..., "labels": [...], "letters": "ABC"} (letters optional).
LabelScheme scheme_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LabelScheme& scheme);

/// A built-in scheme name, or a path to a scheme file (relative to `base`).
LabelScheme resolve_scheme(const std::string& name_or_path, const std::filesystem::path& base = {});

struct DatasetDescriptor {
  std::string name;
  LabelScheme scheme;
  std::filesystem::path path;
  std::string claim_field = "claim";
  std::string label_field = "label";
  std::string id_field = "id";  // falls back to the 1-based line number when absent
  std::string negation_field;   // optional field holding a ready-made negation
  std::map<std::string, std::string> label_aliases;  // native label -> scheme label
};

/// Relative paths resolve against `base_dir`. Throws ConfigError.
DatasetDescriptor descriptor_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const DatasetDescriptor& desc);

struct DatasetRejection {
  size_t line = 0;
  std::string reason;
};

struct DatasetLoad {
  std::vector<ClaimPair> claims;  // file order
  std::vector<DatasetRejection> rejected;
};

/// JSONL, one claim per line. Records with a missing claim, a label outside
/// the scheme, or a repeated id are rejected and reported. Throws FileMissing
/// and EmptyDataset (no valid record).
DatasetLoad load_dataset(const DatasetDescriptor& desc);

/// Fisher-Yates over mt19937_64(seed) with an unbiased bounded draw, so the
/// permutation is identical across standard libraries.
std::vector<size_t> seeded_permutation(size_t n, std::uint64_t seed);

/// Without a limit, all claims in file order. With one, the first `limit`
/// claims of a seeded shuffle, reported in file order.
std::vector<ClaimPair> select_claims(const std::vector<ClaimPair>& claims, std::optional<size_t> limit,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentPlan {
  DatasetDescriptor dataset;
  ClaimCondition condition = ClaimCondition::OriginalPlusNegated;
  std::optional<size_t> limit;
  PipelineConfig cfg;
  std::string prompt_template = std::string(kDefaultVerdictTemplate);
};

struct RunOptions {
  std::function<void(const std::string&)> log;  // progress and warnings; may be empty
  size_t kde_grid_points = 512;
  /// Stop after computing this many new traces (the run stays resumable).
  std::optional<size_t> max_new_traces;
};

struct SourceMetrics {
  std::string source;
  MetricsReport report;
  size_t abstentions = 0;
};

struct RunSummary {
  std::filesystem::path dir;
  size_t claims = 0;
  size_t reused = 0;
  size_t computed = 0;
  size_t rejected_records = 0;
  bool complete = false;  // false when stopped early; aggregate files are then not written
  size_t abstentions = 0;
  size_t failure_notes = 0;
  std::vector<SourceMetrics> metrics;  // provenance order, merged last
};

/// Runs every selected claim through the pipeline with claim-level
/// parallelism, writing traces/<claim_id>.json atomically. Existing traces
/// that match the plan are reused. When all traces exist, writes
/// confidences.csv, kde.csv, metrics.json; run-manifest.json is written up
/// front. Only configuration errors abort.
RunSummary run_experiment(const ExperimentPlan& plan, Providers& providers, const std::filesystem::path& out_dir,
                          const RunOptions& options = {});

/// Configuration echo plus provider identities; no timestamps.
nlohmann::json run_manifest(const ExperimentPlan& plan, const Providers& providers,
                            const std::vector<ClaimPair>& claims, size_t rejected_records);

nlohmann::json metrics_json(const ExperimentPlan& plan, const RunSummary& summary);

/// File-system-safe trace name: [A-Za-z0-9._-] kept, other bytes %XX.
std::string trace_file_name(const std::string& claim_id);

/// Write to a sibling temporary file, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace claimcheck
