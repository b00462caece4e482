#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimcheck/aggregation.hpp"
#include "claimcheck/analysis.hpp"
#include "claimcheck/embedding.hpp"
#include "claimcheck/negation.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/types.hpp"
#include "claimcheck/verdict.hpp"

namespace claimcheck {

enum class ClaimCondition { OriginalOnly, OriginalPlusNegated };

std::string to_string(ClaimCondition condition);  // "original", "original+negated"
std::optional<ClaimCondition> parse_condition(std::string_view text);

/// Everything one claim needs, shared across worker threads. Providers must
/// be safe to call concurrently.
struct Providers {
  std::shared_ptr<NegationProvider> negation;
  std::shared_ptr<EmbeddingProvider> embedder;
  std::shared_ptr<VerdictProvider> verdict;
  std::vector<std::shared_ptr<KnowledgeSource>> sources;  // sorted by kind, names unique
};

/// Sorts sources into provenance order; throws ConfigError on duplicate names.
void normalize_sources(std::vector<std::shared_ptr<KnowledgeSource>>& sources);

struct RetrievedRef {
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
  friend bool operator==(const RetrievedRef&, const RetrievedRef&) = default;
};

struct SourceTrace {
  SourceKind source;
  std::vector<RetrievedRef> retrieved_positive;
  std::vector<RetrievedRef> retrieved_negative;
  VeracityVerdict verdict;
  std::vector<std::string> failures;
  friend bool operator==(const SourceTrace&, const SourceTrace&) = default;
};

/// Full record of one claim through the pipeline under one condition.
struct ClaimTrace {
  ClaimPair claim;  // negated_text set to the negation actually used, if any
  ClaimCondition condition = ClaimCondition::OriginalOnly;
  std::string negation_origin;  // "dataset", provider identity, or "rule-based fallback"; empty when unused
  AggregatedEvidence evidence;  // per-source bundles and E_i
  std::vector<SourceTrace> sources;  // provenance order
  VeracityVerdict merged;
  std::optional<AgreementRegime> regime;
  std::optional<double> dispersion;
  std::vector<std::string> failures;  // claim-level notes (negation fallback)

  /// Count of abstentions across per-source and merged verdicts.
  size_t abstentions() const;
  std::vector<std::string> source_names() const;
};

struct ClaimOptions {
  ClaimCondition condition = ClaimCondition::OriginalPlusNegated;
  PipelineConfig cfg;
  std::string prompt_template = std::string(kDefaultVerdictTemplate);
};

/// Negate (if the condition calls for it and the claim carries no negation),
/// retrieve, select, aggregate per source, then verdict per source and for
/// the merged evidence. Provider failures become abstentions with a note;
/// ConfigError and InvalidClaim propagate.
ClaimTrace verify_claim(const ClaimPair& claim, Providers& providers, const LabelScheme& scheme,
                        const ClaimOptions& options);

VeracityVerdict abstention(const std::string& claim_id, const std::string& source, const LabelScheme& scheme,
                           double floor, std::string note);

// JSON round trip. Parsing throws std::runtime_error on malformed input.
nlohmann::json to_json(const EvidenceSentence& sentence);
EvidenceSentence evidence_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VeracityVerdict& verdict);
VeracityVerdict verdict_from_json(const nlohmann::json& j, const std::string& claim_id);
nlohmann::json to_json(const ClaimTrace& trace);
ClaimTrace trace_from_json(const nlohmann::json& j);

/// Human-readable block for the CLI.
std::string render_trace(const ClaimTrace& trace);

}  // namespace claimcheck
