#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "claimcheck/embedding.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

/// Staged evidence for one claim from one source.
struct EvidenceBundle {
  std::string claim_id;
  SourceKind source;
  std::vector<EvidenceSentence> positive;    // selected for the claim
  std::vector<EvidenceSentence> negative;    // selected for the negation
  std::vector<EvidenceSentence> candidates;  // deduplicated + merged
  std::vector<EvidenceSentence> final;       // ranked against the claim, top-p

  friend bool operator==(const EvidenceBundle&, const EvidenceBundle&) = default;
};

/// Cross-source union of final evidence for one claim.
struct AggregatedEvidence {
  std::string claim_id;
  std::vector<EvidenceSentence> sentences;
  std::map<SourceKind, EvidenceBundle> per_source;

  friend bool operator==(const AggregatedEvidence&, const AggregatedEvidence&) = default;
};

/// Keeps first occurrences by normalized text, preserving order.
std::vector<EvidenceSentence> dedup_by_normalized(std::span<const EvidenceSentence> items);

/// Symmetric difference keyed by normalized text: anything whose normalized
/// form occurs in both lists is dropped. Survivors are deduplicated within
/// their own list and returned as positives, then negatives, in input order.
std::vector<EvidenceSentence> symmetric_difference_dedup(std::span<const EvidenceSentence> positive,
                                                         std::span<const EvidenceSentence> negative);

/// Literal marker separating split segments.
inline constexpr std::string_view kSegmentMarker = "[SEP]";

/// Fuses adjacent candidates from the same document when they are joined by
/// a "[SEP]" marker (trailing on the first or leading on the second) or,
/// with `dangling_heuristic`, when the first lacks terminal punctuation and
/// the second starts lowercase. Fused text is space-joined without markers
/// and carries the maximum similarity of its parts; chains fuse repeatedly.
/// Fusion can create normalized duplicates, which are collapsed afterwards.
std::vector<EvidenceSentence> merge_segments(std::span<const EvidenceSentence> candidates,
                                             bool dangling_heuristic = true);

/// Re-scores every candidate against `claim` (the original claim), sorts by
/// similarity descending and keeps at most p. Ties: claim-side before
/// negation-side, then earlier position. Zero-vector candidates are dropped.
/// Embedding failures, or a claim that embeds to zero, raise RankingFailed.
std::vector<EvidenceSentence> rank_and_truncate(std::span<const EvidenceSentence> candidates,
                                                const std::string& claim, EmbeddingProvider& embedder, int p);

/// Runs dedup -> merge -> rank for one source. With `dual` false (original
/// claim only) the symmetric difference is skipped and positives are only
/// deduplicated.
EvidenceBundle build_bundle(std::string claim_id, SourceKind source, std::vector<EvidenceSentence> positive,
                            std::vector<EvidenceSentence> negative, bool dual, const std::string& claim,
                            EmbeddingProvider& embedder, const PipelineConfig& cfg);

/// Union of per-source finals by normalized text. Sources are visited in
/// their fixed order, so the earliest source keeps provenance.
AggregatedEvidence aggregate_sources(std::string claim_id, std::map<SourceKind, EvidenceBundle> bundles);

}  // namespace claimcheck
