#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace claimcheck {

// ---------------------------------------------------------------------------
// Claims
// ---------------------------------------------------------------------------

/// A claim and (once generated) its negated counterpart.
struct ClaimPair {
  std::string id;
  std::string text;
  std::optional<std::string> negated_text;
  std::optional<std::string> gold_label;

  bool has_negation() const { return negated_text.has_value(); }
};

/// Throws InvalidClaim when the text is blank, or when a negation is present
/// but blank or identical to the claim after normalization.
void validate(const ClaimPair& claim);

// ---------------------------------------------------------------------------
// Knowledge sources
// ---------------------------------------------------------------------------

enum class SourceFamily { WikipediaLike = 0, PubMedLike = 1, WebSearch = 2, Custom = 3 };

/// Identifies one knowledge source. Ordering is the fixed provenance order
/// used when unioning evidence: encyclopedia, biomedical, web, then custom
/// adapters by name.
struct SourceKind {
  SourceFamily family = SourceFamily::Custom;
  std::string name;

  static SourceKind wikipedia() { return {SourceFamily::WikipediaLike, "wikipedia"}; }
  static SourceKind pubmed() { return {SourceFamily::PubMedLike, "pubmed"}; }
  static SourceKind web() { return {SourceFamily::WebSearch, "google"}; }

  friend auto operator<=>(const SourceKind&, const SourceKind&) = default;
  friend bool operator==(const SourceKind&, const SourceKind&) = default;
};

std::string to_string(SourceFamily family);
/// Accepts "wikipedia", "pubmed", "web"/"google", "custom" (case-insensitive).
std::optional<SourceFamily> parse_source_family(std::string_view text);

/// Source name used for verdicts over the cross-source evidence union.
inline constexpr std::string_view kMergedSource = "merged";

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// m-way label set with one single-character option token per label.
class LabelScheme {
 public:
  /// Throws InvalidScheme on fewer than two labels, duplicates or a letter
  /// count mismatch. Empty `letters` assigns A, B, C, ... in order.
  LabelScheme(std::string name, std::vector<std::string> labels, std::vector<char> letters = {});

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<char>& option_letters() const { return letters_; }
  size_t size() const { return labels_.size(); }

  std::optional<size_t> index_of_label(std::string_view label) const;
  std::optional<size_t> index_of_letter(char letter) const;

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;

 private:
  std::string name_;
  std::vector<std::string> labels_;
  std::vector<char> letters_;
};

/// Schemes for the four benchmark datasets: scifact, averitec, liar, pubhealth.
std::optional<LabelScheme> builtin_scheme(std::string_view name);
std::vector<std::string> builtin_scheme_names();

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  int retrieval_depth = 5;    // documents per source per query
  int selection_docs = 5;     // leading documents mined for sentences, <= retrieval_depth
  int sentences_per_doc = 1;  // sentences kept per document
  int final_top_p = 5;        // evidence sentences kept per source
  std::uint64_t seed = 0;
  bool merge_heuristic = true;     // fuse dangling segments, not only "[SEP]" joins
  double logprob_floor = -20.0;    // log-probability for option letters the provider omits
  int max_in_flight = 4;           // concurrent remote calls per provider
  int workers = 4;                 // claim-level worker pool size
};

/// Throws ConfigError when any count is < 1 or selection_docs > retrieval_depth.
void validate(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Evidence
// ---------------------------------------------------------------------------

enum class Polarity { FromClaim = 0, FromNegation = 1 };

std::string to_string(Polarity polarity);
std::optional<Polarity> parse_polarity(std::string_view text);

struct EvidenceSentence {
  std::string text;
  std::string normalized;  // normalize_sentence(text)
  SourceKind source;
  std::string doc_id;
  Polarity polarity = Polarity::FromClaim;
  double similarity = 0.0;

  friend bool operator==(const EvidenceSentence&, const EvidenceSentence&) = default;
};

EvidenceSentence make_evidence(std::string text, SourceKind source, std::string doc_id,
                               Polarity polarity, double similarity);

}  // namespace claimcheck
