#pragma once

#include <span>
#include <string>
#include <vector>

#include "claimcheck/embedding.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

/// Splits on '.', '!' or '?' followed by whitespace or end of text. A period
/// directly after a lone capital letter ("J. Smith") does not split.
/// Segments shorter than 3 characters after trimming are dropped.
std::vector<std::string> split_sentences(std::string_view body);

struct SelectionResult {
  std::vector<EvidenceSentence> sentences;
  /// "doc_id: reason" for documents whose embedding failed (SelectionFailed).
  std::vector<std::string> failures;
};

/// Sentence-level evidence for one query (the claim or its negation).
///
/// Only the first `cfg.selection_docs` documents are mined. For each, the
/// query and every sentence are embedded and the `cfg.sentences_per_doc`
/// sentences most similar to the query are kept (ties: earlier sentence).
/// Output follows document rank, then similarity within a document.
/// Sentences whose embedding is a zero vector are skipped; if the query
/// itself embeds to zero nothing can be scored and the result is empty.
SelectionResult select_evidence(const std::string& query, Polarity polarity,
                                std::span<const RetrievedDocument> docs, EmbeddingProvider& embedder,
                                const PipelineConfig& cfg);

}  // namespace claimcheck
