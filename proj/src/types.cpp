#include "claimcheck/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

void validate(const ClaimPair& claim) {
  if (trim(claim.text).empty()) {
    throw InvalidClaim("claim '" + claim.id + "' has empty text");
  }
  if (claim.negated_text) {
    if (trim(*claim.negated_text).empty()) {
      throw InvalidClaim("claim '" + claim.id + "' has an empty negation");
    }
    if (normalize_sentence(*claim.negated_text) == normalize_sentence(claim.text)) {
      throw InvalidClaim("claim '" + claim.id + "' negation equals the claim after normalization");
    }
  }
}

std::string to_string(SourceFamily family) {
  switch (family) {
    case SourceFamily::WikipediaLike: return "wikipedia";
    case SourceFamily::PubMedLike: return "pubmed";
    case SourceFamily::WebSearch: return "web";
    case SourceFamily::Custom: return "custom";
  }
  return "custom";
}

std::optional<SourceFamily> parse_source_family(std::string_view text) {
  const std::string lower = ascii_lower(text);
  if (lower == "wikipedia") return SourceFamily::WikipediaLike;
  if (lower == "pubmed") return SourceFamily::PubMedLike;
  if (lower == "web" || lower == "google") return SourceFamily::WebSearch;
  if (lower == "custom") return SourceFamily::Custom;
  return std::nullopt;
}

LabelScheme::LabelScheme(std::string name, std::vector<std::string> labels, std::vector<char> letters)
    : name_(std::move(name)), labels_(std::move(labels)), letters_(std::move(letters)) {
  if (labels_.size() < 2) {
    throw InvalidScheme("scheme '" + name_ + "' needs at least two labels");
  }
  if (letters_.empty()) {
    if (labels_.size() > 26) throw InvalidScheme("scheme '" + name_ + "' has more than 26 labels");
    for (size_t i = 0; i < labels_.size(); ++i) letters_.push_back(static_cast<char>('A' + i));
  }
  if (letters_.size() != labels_.size()) {
    throw InvalidScheme("scheme '" + name_ + "' label/letter count mismatch");
  }
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
    throw InvalidScheme("scheme '" + name_ + "' has duplicate labels");
  }
  if (std::set<char>(letters_.begin(), letters_.end()).size() != letters_.size()) {
    throw InvalidScheme("scheme '" + name_ + "' has duplicate option letters");
  }
  for (char letter : letters_) {
    if (letter == ' ' || letter == '\0') throw InvalidScheme("scheme '" + name_ + "' has a blank option letter");
  }
}

std::optional<size_t> LabelScheme::index_of_label(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<size_t>(it - labels_.begin());
}

std::optional<size_t> LabelScheme::index_of_letter(char letter) const {
  auto it = std::find(letters_.begin(), letters_.end(), letter);
  if (it == letters_.end()) return std::nullopt;
  return static_cast<size_t>(it - letters_.begin());
}

std::optional<LabelScheme> builtin_scheme(std::string_view name) {
  const std::string key = ascii_lower(name);
  if (key == "scifact") {
    return LabelScheme("scifact", {"Supported", "Refuted", "Not Enough Info"});
  }
  if (key == "averitec") {
    return LabelScheme("averitec", {"Supported", "Refuted", "Conflicting evidence/cherrypicking",
                                    "Not Enough Info"});
  }
  if (key == "liar") {
    return LabelScheme("liar",
                       {"Pants on Fire", "False", "Barely True", "Half True", "Mostly True", "True"});
  }
  if (key == "pubhealth") {
    return LabelScheme("pubhealth", {"True", "False", "Mixture", "Unproven"});
  }
  return std::nullopt;
}

std::vector<std::string> builtin_scheme_names() { return {"averitec", "liar", "pubhealth", "scifact"}; }

void validate(const PipelineConfig& cfg) {
  auto require_positive = [](int value, const char* name) {
    if (value < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  require_positive(cfg.retrieval_depth, "retrieval_depth");
  require_positive(cfg.selection_docs, "selection_docs");
  require_positive(cfg.sentences_per_doc, "sentences_per_doc");
  require_positive(cfg.final_top_p, "final_top_p");
  require_positive(cfg.max_in_flight, "max_in_flight");
  require_positive(cfg.workers, "workers");
  if (cfg.selection_docs > cfg.retrieval_depth) {
    throw ConfigError("selection_docs must not exceed retrieval_depth");
  }
  if (!(cfg.logprob_floor < 0.0) || !std::isfinite(cfg.logprob_floor)) {
    throw ConfigError("logprob_floor must be a finite negative number");
  }
}

std::string to_string(Polarity polarity) {
  return polarity == Polarity::FromClaim ? "claim" : "negation";
}

std::optional<Polarity> parse_polarity(std::string_view text) {
  if (text == "claim") return Polarity::FromClaim;
  if (text == "negation") return Polarity::FromNegation;
  return std::nullopt;
}

EvidenceSentence make_evidence(std::string text, SourceKind source, std::string doc_id,
                               Polarity polarity, double similarity) {
  EvidenceSentence e;
  e.normalized = normalize_sentence(text);
  e.text = std::move(text);
  e.source = std::move(source);
  e.doc_id = std::move(doc_id);
  e.polarity = polarity;
  e.similarity = similarity;
  return e;
}

}  // namespace claimcheck
