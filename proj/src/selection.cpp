#include "claimcheck/selection.hpp"

#include <algorithm>
#include <cctype>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

namespace {

bool is_terminator(char ch) { return ch == '.' || ch == '!' || ch == '?'; }

bool is_space(char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; }

// "J." - a single uppercase letter standing alone before the period.
bool lone_capital_before(std::string_view text, size_t period) {
  if (period == 0 || text[period] != '.') return false;
  const char prev = text[period - 1];
  if (!std::isupper(static_cast<unsigned char>(prev))) return false;
  return period == 1 || !std::isalpha(static_cast<unsigned char>(text[period - 2]));
}

void push_segment(std::string_view segment, std::vector<std::string>& out) {
  std::string_view trimmed = trim(segment);
  if (trimmed.size() >= 3) out.emplace_back(trimmed);
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view body) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < body.size(); ++i) {
    if (!is_terminator(body[i])) continue;
    // Keep runs like "?!" or "..." together.
    size_t end = i;
    while (end + 1 < body.size() && is_terminator(body[end + 1])) ++end;
    const bool boundary = end + 1 == body.size() || is_space(body[end + 1]);
    if (!boundary || lone_capital_before(body, i)) {
      i = end;
      continue;
    }
    push_segment(body.substr(start, end + 1 - start), out);
    start = end + 1;
    i = end;
  }
  if (start < body.size()) push_segment(body.substr(start), out);
  return out;
}

SelectionResult select_evidence(const std::string& query, Polarity polarity,
                                std::span<const RetrievedDocument> docs, EmbeddingProvider& embedder,
                                const PipelineConfig& cfg) {
  SelectionResult result;
  const size_t limit = std::min(docs.size(), static_cast<size_t>(std::max(cfg.selection_docs, 0)));
  const size_t keep = static_cast<size_t>(std::max(cfg.sentences_per_doc, 0));

  for (size_t d = 0; d < limit; ++d) {
    const auto& doc = docs[d];
    const auto sentences = split_sentences(doc.body);
    if (sentences.empty()) continue;

    std::vector<std::string> batch;
    batch.reserve(sentences.size() + 1);
    batch.push_back(query);
    batch.insert(batch.end(), sentences.begin(), sentences.end());

    std::vector<Embedding> vectors;
    try {
      vectors = embedder.embed(batch);
      if (vectors.size() != batch.size()) throw SelectionFailed("embedder returned a wrong number of vectors");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      result.failures.push_back(doc.doc_id + ": " + e.what());
      continue;
    }

    struct Scored {
      size_t position;
      double similarity;
    };
    std::vector<Scored> scored;
    scored.reserve(sentences.size());
    bool query_is_zero = false;
    for (size_t s = 0; s < sentences.size(); ++s) {
      try {
        scored.push_back({s, cosine_similarity(vectors[0], vectors[s + 1])});
      } catch (const ZeroVector&) {
        if (std::all_of(vectors[0].begin(), vectors[0].end(), [](double x) { return x == 0.0; })) {
          query_is_zero = true;
          break;
        }
      } catch (const std::invalid_argument& e) {
        result.failures.push_back(doc.doc_id + ": " + e.what());
        scored.clear();
        break;
      }
    }
    if (query_is_zero) return {{}, std::move(result.failures)};

    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.similarity > b.similarity; });
    if (scored.size() > keep) scored.resize(keep);
    for (const auto& s : scored) {
      result.sentences.push_back(make_evidence(sentences[s.position], doc.source, doc.doc_id, polarity, s.similarity));
    }
  }
  return result;
}

}  // namespace claimcheck
