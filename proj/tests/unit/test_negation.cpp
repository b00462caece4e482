#include <doctest.h>

#include <random>

#include "claimcheck/errors.hpp"
#include "claimcheck/negation.hpp"
#include "claimcheck/text.hpp"
#include "helpers.hpp"

using namespace claimcheck;

namespace {

class FixedNegator final : public NegationProvider {
 public:
  explicit FixedNegator(std::string answer) : answer_(std::move(answer)) {}
  std::string negate(std::string_view) override { return answer_; }
  std::string identity() const override { return "fixed"; }

 private:
  std::string answer_;
};

class DownNegator final : public NegationProvider {
 public:
  std::string negate(std::string_view) override { throw ProviderUnavailable("down"); }
  std::string identity() const override { return "down"; }
};

std::string chat_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

}  // namespace

TEST_SUITE("negation") {
  TEST_CASE("rule-based fallback examples") {
    CHECK(rule_based_negate("The sky is blue") == "The sky is not blue");
    CHECK(rule_based_negate("The sky is not blue") == "The sky is blue");
    CHECK(rule_based_negate("Vaccines cause autism") == "It is not the case that Vaccines cause autism");
    CHECK(rule_based_negate("X increases Y") == "X does not increase Y");
    CHECK(rule_based_negate("Drug X increases blood pressure.") == "Drug X does not increase blood pressure.");
  }

  TEST_CASE("auxiliary matching is case-insensitive and ignores trailing punctuation") {
    CHECK(rule_based_negate("Is it safe?") == "Is not it safe?");
    CHECK(rule_based_negate("Cats can, sometimes, swim") == "Cats can not, sometimes, swim");
    CHECK(rule_based_negate("Treatment does not help.") == "Treatment does help.");
    CHECK(rule_based_negate("Increases risk") == "Does not increase risk");
  }

  TEST_CASE("auxiliaries win over lexical verbs") {
    CHECK(rule_based_negate("Aspirin reduces pain and is cheap") == "Aspirin reduces pain and is not cheap");
  }

  TEST_CASE("rule-based negation always changes the text") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> words = {"the", "drug", "is",     "not",   "can",   "Vaccines", "cause",
                                            "X",   "are",  "reduces", "risk", "of",    "cancer",   "will",
                                            "do",  "does", "It",     "case",  "that",  "5%",       "blue."};
    std::uniform_int_distribution<size_t> len(1, 10);
    std::uniform_int_distribution<size_t> pick(0, words.size() - 1);
    for (int i = 0; i < 2000; ++i) {
      std::string s;
      const size_t n = len(rng);
      for (size_t k = 0; k < n; ++k) s += (k ? " " : "") + words[pick(rng)];
      CAPTURE(s);
      const std::string negated = rule_based_negate(s);
      CHECK(negated != s);
      CHECK(normalize_sentence(negated) != normalize_sentence(s));
    }
  }

  TEST_CASE("auxiliary rule is an involution") {
    const std::vector<std::string> sentences = {
        "The sky is blue", "Cats are mammals.", "It was raining", "They were late", "Birds can fly",
        "It will rain",    "He does smoke",     "We do agree",    "The sky is not blue", "Vitamin C is not a cure."};
    for (const auto& s : sentences) {
      CAPTURE(s);
      CHECK(rule_based_negate(rule_based_negate(s)) == s);
    }
  }

  TEST_CASE("fixture negator reproduces the pinned reframings") {
    auto fixture = FixtureNegator::from_file((testing::fixtures() / "negations.json").string());
    CHECK(fixture.negate("A deficiency of vitamin B12 increases homocysteine") ==
          "A surplus of vitamin B12 decreases homocysteine");
    CHECK(fixture.negate("5% of perinatal mortality is due to low birth weight") ==
          "95% of perinatal mortality is not due to low birth weight");
    CHECK_THROWS_AS(fixture.negate("unknown claim"), ProviderUnavailable);
  }

  TEST_CASE("negate_claim keeps the original text and fills the negation") {
    RuleBasedNegator rules;
    const ClaimPair claim{"c1", "The sky is blue", std::nullopt, std::string("Supported")};
    const ClaimPair out = negate_claim(claim, rules);
    CHECK(out.text == claim.text);
    CHECK(out.gold_label == claim.gold_label);
    CHECK(out.negated_text == "The sky is not blue");
  }

  TEST_CASE("negate_claim failure handling") {
    const ClaimPair claim{"c1", "Vaccines cause autism", std::nullopt, std::nullopt};
    DownNegator down;
    CHECK(negate_claim(claim, down, true).negated_text == "It is not the case that Vaccines cause autism");
    CHECK_THROWS_AS(negate_claim(claim, down, false), ProviderUnavailable);

    FixedNegator echo("vaccines CAUSE autism!");
    CHECK_THROWS_AS(negate_claim(claim, echo), DegenerateNegation);
    FixedNegator empty("  ");
    CHECK_THROWS_AS(negate_claim(claim, empty), DegenerateNegation);
    RuleBasedNegator rules;
    CHECK_THROWS_AS(negate_claim(ClaimPair{"c2", " ", std::nullopt, std::nullopt}, rules), InvalidClaim);
  }

  TEST_CASE("counting negator counts calls") {
    CountingNegator counter(std::make_shared<RuleBasedNegator>());
    counter.negate("a is b");
    counter.negate("c is d");
    CHECK(counter.calls() == 2);
    CHECK(counter.identity() == "rule-based");
  }

  TEST_CASE("remote negator fills the template and strips quotes") {
    testing::NetworkGuard online(true);
    auto transport = std::make_shared<testing::ScriptedTransport>(
        std::vector<HttpResponse>{{200, chat_body("  \"Drug X does not lower blood pressure\"  "), ""}});
    RemoteNegator negator({"http://llm.test/v1/chat/completions", "secret", "mistral-small"},
                          "Negate: {claim} ({claim})", transport);
    CHECK(negator.negate("Drug X lowers blood pressure") == "Drug X does not lower blood pressure");
    REQUIRE(transport->requests.size() == 1);
    const auto body = nlohmann::json::parse(transport->requests[0].body);
    CHECK(body["model"] == "mistral-small");
    CHECK(body["messages"][0]["content"] == "Negate: Drug X lowers blood pressure (Drug X lowers blood pressure)");
    bool has_auth = false;
    for (const auto& [k, v] : transport->requests[0].headers) has_auth |= k == "Authorization" && v == "Bearer secret";
    CHECK(has_auth);
    CHECK(negator.identity().find("mistral-small") != std::string::npos);
  }

  TEST_CASE("remote negator rejects templates without {claim}") {
    auto transport = std::make_shared<testing::ScriptedTransport>(std::vector<HttpResponse>{{200, "{}", ""}});
    CHECK_THROWS_AS(RemoteNegator({"http://x", "", "m"}, "no placeholder", transport), TemplateMissingPlaceholder);
  }

  TEST_CASE("remote negator from_env refuses in offline mode") {
    testing::NetworkGuard offline(false);
    CHECK_THROWS_AS(RemoteNegator::from_env(std::string(kDefaultNegationPrompt), nullptr), ConfigError);
  }
}
