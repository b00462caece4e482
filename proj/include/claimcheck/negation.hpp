#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "claimcheck/llm_client.hpp"
#include "claimcheck/types.hpp"

namespace claimcheck {

/// Produces the negated counterpart of a claim. Implementations must be safe
/// to call from several threads at once.
class NegationProvider {
 public:
  virtual ~NegationProvider() = default;
  virtual std::string negate(std::string_view claim) = 0;
  /// Short description recorded in run manifests.
  virtual std::string identity() const = 0;
};

/// Offline fallback:
///  1. first auxiliary (is, are, was, were, can, will, does, do): insert "not"
///     after it, or drop the "not" that already follows it;
///  2. else first known third-person verb ("increases"): "does not increase";
///  3. else prefix "It is not the case that ".
std::string rule_based_negate(std::string_view claim);

class RuleBasedNegator final : public NegationProvider {
 public:
  std::string negate(std::string_view claim) override { return rule_based_negate(claim); }
  std::string identity() const override { return "rule-based"; }
};

/// Looks negations up by exact claim text. Unknown claims raise
/// ProviderUnavailable so the fallback path is exercised like a remote outage.
class FixtureNegator final : public NegationProvider {
 public:
  explicit FixtureNegator(std::map<std::string, std::string> table) : table_(table.begin(), table.end()) {}
  /// JSON object {"claim text": "negated text", ...}.
  static FixtureNegator from_file(const std::string& path);

  std::string negate(std::string_view claim) override;
  std::string identity() const override { return "fixture"; }

 private:
  std::map<std::string, std::string, std::less<>> table_;
};

inline constexpr std::string_view kDefaultNegationPrompt =
    "Rewrite the following claim so that it states the opposite. Keep the same topic and "
    "entities; flip the direction of effects or quantities where possible (for example "
    "\"5% of X\" becomes \"95% of X\"). Reply with the rewritten claim only.\n\n"
    "Claim: {claim}";

/// Chat-completion backed negation. The prompt template needs a {claim}
/// placeholder.
class RemoteNegator final : public NegationProvider {
 public:
  RemoteNegator(ChatEndpoint endpoint, std::string prompt_template,
                std::shared_ptr<HttpTransport> transport, int max_in_flight = 4,
                RetryPolicy retry = {});

  /// Reads NEGATION_API_URL, NEGATION_API_KEY and NEGATION_MODEL.
  static std::unique_ptr<RemoteNegator> from_env(std::string prompt_template,
                                                 std::shared_ptr<HttpTransport> transport,
                                                 int max_in_flight = 4);

  std::string negate(std::string_view claim) override;
  std::string identity() const override;

 private:
  ChatClient client_;
  std::string prompt_template_;
};

/// Counts negate() calls; used to verify that a condition never negates.
class CountingNegator final : public NegationProvider {
 public:
  explicit CountingNegator(std::shared_ptr<NegationProvider> inner) : inner_(std::move(inner)) {}
  std::string negate(std::string_view claim) override {
    ++calls_;
    return inner_->negate(claim);
  }
  std::string identity() const override { return inner_->identity(); }
  int calls() const { return calls_.load(); }

 private:
  std::shared_ptr<NegationProvider> inner_;
  std::atomic<int> calls_{0};
};

/// Returns `claim` with negated_text filled by `provider`. When the provider
/// is unavailable and `fallback` is set, the rule-based negation is used;
/// otherwise ProviderUnavailable propagates. An empty or claim-identical
/// result raises DegenerateNegation.
ClaimPair negate_claim(const ClaimPair& claim, NegationProvider& provider, bool fallback = true);

}  // namespace claimcheck
