#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "claimcheck/aggregation.hpp"
#include "claimcheck/llm_client.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

/// Per-option logits z, in scheme order.
struct LabelLogits {
  LabelScheme scheme;
  std::vector<double> logits;
};

struct VeracityVerdict {
  std::string claim_id;
  std::string source;  // adapter name, or kMergedSource
  std::string label;   // empty when abstained
  double confidence = 0.0;  // log softmax(z) at the argmax; <= 0
  std::vector<double> logits;
  bool abstained = false;
  std::string note;  // why the verdict abstained, if it did

  friend bool operator==(const VeracityVerdict&, const VeracityVerdict&) = default;
};

// ---------------------------------------------------------------------------
// Prompting
// ---------------------------------------------------------------------------

inline constexpr std::string_view kNoEvidenceBlock = "No evidence retrieved.";

/// Default zero-shot verification prompt. Placeholders: {claim}, {evidence},
/// {options}.
inline constexpr std::string_view kDefaultVerdictTemplate =
    "You are a fact-checking assistant. Decide whether the evidence supports the claim.\n"
    "\n"
    "Claim: {claim}\n"
    "\n"
    "Evidence:\n"
    "{evidence}\n"
    "\n"
    "Options:\n"
    "{options}\n"
    "\n"
    "Answer with the letter of the single best option and nothing else.\n"
    "Answer:";

/// Renders the prompt. Evidence is numbered "1. ...", one per line, or the
/// no-evidence block when empty; options render as "A) <label>" lines.
/// Throws TemplateMissingPlaceholder when a placeholder is absent.
std::string build_prompt(const std::string& claim, std::span<const EvidenceSentence> evidence,
                         const LabelScheme& scheme, std::string_view prompt_template = kDefaultVerdictTemplate);

// ---------------------------------------------------------------------------
// Confidence
// ---------------------------------------------------------------------------

/// log-sum-exp with max subtraction.
double logsumexp(std::span<const double> z);

struct LabelConfidence {
  size_t index = 0;
  std::string label;
  double confidence = 0.0;
};

/// argmax (lowest index on ties) and z[argmax] - logsumexp(z).
LabelConfidence confidence_from_logits(const LabelLogits& z);

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

struct VerdictRequest {
  std::string claim_id;
  std::string source;
  std::string prompt;
  std::vector<char> option_letters;
};

/// What a provider reports for one request: its top token and, per option
/// letter, a log-probability if it saw one.
struct OptionScores {
  std::string top_token;
  std::vector<std::optional<double>> letter_logprobs;  // aligned with option_letters
};

class VerdictProvider {
 public:
  virtual ~VerdictProvider() = default;
  virtual OptionScores choose(const VerdictRequest& request) = 0;
  virtual std::string identity() const = 0;
};

/// Fills missing letters with `floor`. Throws NoValidOption when no letter
/// received a log-probability.
LabelLogits to_label_logits(const OptionScores& scores, const LabelScheme& scheme, double floor);

/// Deterministic offline provider. Fixture logits keyed "claim_id|source"
/// (or "claim_id|*") win; otherwise logits derive from a hash of the
/// request, so identical prompts always yield identical verdicts.
class MockVerdictProvider final : public VerdictProvider {
 public:
  MockVerdictProvider() = default;
  explicit MockVerdictProvider(std::map<std::string, std::vector<double>> fixtures)
      : fixtures_(std::move(fixtures)) {}
  /// JSON object {"claim_id|source": [z...], ...}.
  static std::unique_ptr<MockVerdictProvider> from_file(const std::string& path);

  OptionScores choose(const VerdictRequest& request) override;
  std::string identity() const override { return "mock"; }

 private:
  std::map<std::string, std::vector<double>> fixtures_;
};

/// Chat completion with top log-probabilities on a single output token.
class RemoteVerdictProvider final : public VerdictProvider {
 public:
  RemoteVerdictProvider(ChatEndpoint endpoint, std::shared_ptr<HttpTransport> transport, int max_in_flight = 4,
                        RetryPolicy retry = {}, int top_logprobs = 20);

  /// Reads LLM_API_URL, LLM_API_KEY and LLM_MODEL.
  static std::unique_ptr<RemoteVerdictProvider> from_env(std::shared_ptr<HttpTransport> transport,
                                                         int max_in_flight = 4);

  OptionScores choose(const VerdictRequest& request) override;
  std::string identity() const override { return "remote:" + client_.endpoint().model; }

 private:
  ChatClient client_;
  int top_logprobs_;
};

/// Reads an option letter out of a raw token (" A", "A)", "(b" -> 'A'/'B').
std::optional<char> option_letter_from_token(std::string_view token, std::span<const char> letters);

/// Maps a chat completion onto option scores: for each letter, the best
/// log-probability among first-token alternatives that spell that letter.
OptionScores option_scores_from_completion(const ChatCompletion& completion, std::span<const char> letters);

/// Prompt -> provider -> label. A response with no usable option letter
/// becomes an abstention with confidence = floor. ProviderUnavailable
/// propagates so the caller can count it.
VeracityVerdict predict_verdict(const ClaimPair& claim, const std::string& source,
                                std::span<const EvidenceSentence> evidence, VerdictProvider& provider,
                                const LabelScheme& scheme, std::string_view prompt_template,
                                double logprob_floor = -20.0);

}  // namespace claimcheck
