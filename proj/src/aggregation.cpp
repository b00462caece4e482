#include "claimcheck/aggregation.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <unordered_set>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

namespace {

bool starts_with_marker(std::string_view text) { return trim(text).starts_with(kSegmentMarker); }
bool ends_with_marker(std::string_view text) { return trim(text).ends_with(kSegmentMarker); }

bool ends_without_terminal(std::string_view text) {
  text = trim(text);
  return !text.empty() && std::string_view(".!?").find(text.back()) == std::string_view::npos;
}

bool starts_lowercase(std::string_view text) {
  text = trim(text);
  return !text.empty() && std::islower(static_cast<unsigned char>(text.front()));
}

std::string strip_markers(std::string_view text) {
  std::string out(text);
  for (size_t pos = out.find(kSegmentMarker); pos != std::string::npos; pos = out.find(kSegmentMarker, pos)) {
    out.replace(pos, kSegmentMarker.size(), " ");
  }
  return collapse_spaces(out);
}

}  // namespace

std::vector<EvidenceSentence> dedup_by_normalized(std::span<const EvidenceSentence> items) {
  std::vector<EvidenceSentence> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(item.normalized).second) out.push_back(item);
  }
  return out;
}

std::vector<EvidenceSentence> symmetric_difference_dedup(std::span<const EvidenceSentence> positive,
                                                         std::span<const EvidenceSentence> negative) {
  std::unordered_set<std::string> pos_keys;
  std::unordered_set<std::string> neg_keys;
  for (const auto& e : positive) pos_keys.insert(e.normalized);
  for (const auto& e : negative) neg_keys.insert(e.normalized);

  std::vector<EvidenceSentence> out;
  for (const auto& e : dedup_by_normalized(positive)) {
    if (!neg_keys.contains(e.normalized)) out.push_back(e);
  }
  for (const auto& e : dedup_by_normalized(negative)) {
    if (!pos_keys.contains(e.normalized)) out.push_back(e);
  }
  return out;
}

std::vector<EvidenceSentence> merge_segments(std::span<const EvidenceSentence> candidates, bool dangling_heuristic) {
  std::vector<EvidenceSentence> merged;
  std::vector<std::string> raw;  // joined text with markers kept, so chains keep fusing
  for (const auto& next : candidates) {
    if (!merged.empty()) {
      auto& current = merged.back();
      const bool same_doc = current.doc_id == next.doc_id && current.source == next.source;
      const bool marker_join = ends_with_marker(raw.back()) || starts_with_marker(next.text);
      const bool dangling =
          dangling_heuristic && ends_without_terminal(raw.back()) && starts_lowercase(next.text);
      if (same_doc && (marker_join || dangling)) {
        raw.back() += " " + next.text;
        current.text = strip_markers(raw.back());
        current.normalized = normalize_sentence(current.text);
        current.similarity = std::max(current.similarity, next.similarity);
        continue;
      }
    }
    merged.push_back(next);
    raw.push_back(next.text);
  }
  return dedup_by_normalized(merged);
}

std::vector<EvidenceSentence> rank_and_truncate(std::span<const EvidenceSentence> candidates,
                                                const std::string& claim, EmbeddingProvider& embedder, int p) {
  if (candidates.empty() || p <= 0) return {};

  std::vector<std::string> batch;
  batch.reserve(candidates.size() + 1);
  batch.push_back(claim);
  for (const auto& c : candidates) batch.push_back(c.text);

  std::vector<Embedding> vectors;
  try {
    vectors = embedder.embed(batch);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw RankingFailed(std::string("embedding failed while ranking: ") + e.what());
  }
  if (vectors.size() != batch.size()) throw RankingFailed("embedder returned a wrong number of vectors");
  if (std::all_of(vectors[0].begin(), vectors[0].end(), [](double x) { return x == 0.0; })) {
    throw RankingFailed("claim embeds to a zero vector");
  }

  struct Ranked {
    size_t position;
    double similarity;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    try {
      ranked.push_back({i, cosine_similarity(vectors[0], vectors[i + 1])});
    } catch (const ZeroVector&) {
    } catch (const std::invalid_argument& e) {
      throw RankingFailed(e.what());
    }
  }
  std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    const auto pa = candidates[a.position].polarity;
    const auto pb = candidates[b.position].polarity;
    if (pa != pb) return pa == Polarity::FromClaim;
    return a.position < b.position;
  });
  if (ranked.size() > static_cast<size_t>(p)) ranked.resize(static_cast<size_t>(p));

  std::vector<EvidenceSentence> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) {
    EvidenceSentence e = candidates[r.position];
    e.similarity = r.similarity;
    out.push_back(std::move(e));
  }
  return out;
}

EvidenceBundle build_bundle(std::string claim_id, SourceKind source, std::vector<EvidenceSentence> positive,
                            std::vector<EvidenceSentence> negative, bool dual, const std::string& claim,
                            EmbeddingProvider& embedder, const PipelineConfig& cfg) {
  EvidenceBundle bundle;
  bundle.claim_id = std::move(claim_id);
  bundle.source = std::move(source);
  bundle.positive = std::move(positive);
  bundle.negative = std::move(negative);
  auto deduped = dual ? symmetric_difference_dedup(bundle.positive, bundle.negative)
                      : dedup_by_normalized(bundle.positive);
  bundle.candidates = merge_segments(deduped, cfg.merge_heuristic);
  bundle.final = rank_and_truncate(bundle.candidates, claim, embedder, cfg.final_top_p);
  return bundle;
}

AggregatedEvidence aggregate_sources(std::string claim_id, std::map<SourceKind, EvidenceBundle> bundles) {
  AggregatedEvidence aggregated;
  aggregated.claim_id = std::move(claim_id);
  std::unordered_set<std::string> seen;
  for (const auto& [source, bundle] : bundles) {
    for (const auto& e : bundle.final) {
      if (seen.insert(e.normalized).second) aggregated.sentences.push_back(e);
    }
  }
  aggregated.per_source = std::move(bundles);
  return aggregated;
}

}  // namespace claimcheck
