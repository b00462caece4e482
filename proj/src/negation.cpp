#include "claimcheck/negation.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <vector>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

namespace {

struct Word {
  size_t begin;     // first byte of the whitespace-delimited token
  size_t core_end;  // one past the last byte before trailing punctuation
  std::string lower_core;
};

std::vector<Word> scan_words(std::string_view text) {
  std::vector<Word> words;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    const size_t begin = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t core_end = i;
    while (core_end > begin && std::string_view(",.;:!?\"')").find(text[core_end - 1]) != std::string_view::npos) {
      --core_end;
    }
    words.push_back({begin, core_end, ascii_lower(text.substr(begin, core_end - begin))});
  }
  return words;
}

constexpr std::array<std::string_view, 8> kAuxiliaries = {"is", "are", "was", "were",
                                                          "can", "will", "does", "do"};

// Third-person singular forms common in scientific and political claims.
const std::map<std::string, std::string, std::less<>>& third_person_verbs() {
  static const std::map<std::string, std::string, std::less<>> verbs = {
      {"activates", "activate"}, {"affects", "affect"},     {"blocks", "block"},
      {"causes", "cause"},       {"contains", "contain"},   {"correlates", "correlate"},
      {"cures", "cure"},         {"decreases", "decrease"}, {"depends", "depend"},
      {"enhances", "enhance"},   {"exists", "exist"},       {"has", "have"},
      {"helps", "help"},         {"impairs", "impair"},     {"improves", "improve"},
      {"increases", "increase"}, {"induces", "induce"},     {"inhibits", "inhibit"},
      {"kills", "kill"},         {"leads", "lead"},         {"lowers", "lower"},
      {"makes", "make"},         {"occurs", "occur"},       {"predicts", "predict"},
      {"prevents", "prevent"},   {"produces", "produce"},   {"promotes", "promote"},
      {"protects", "protect"},   {"raises", "raise"},       {"reduces", "reduce"},
      {"regulates", "regulate"}, {"remains", "remain"},     {"requires", "require"},
      {"results", "result"},     {"supports", "support"},   {"treats", "treat"},
      {"works", "work"},         {"worsens", "worsen"},
  };
  return verbs;
}

bool is_auxiliary(std::string_view word) {
  for (auto aux : kAuxiliaries) {
    if (word == aux) return true;
  }
  return false;
}

bool is_degenerate(std::string_view claim, std::string_view negated) {
  return trim(negated).empty() || normalize_sentence(negated) == normalize_sentence(claim);
}

}  // namespace

std::string rule_based_negate(std::string_view claim) {
  const std::string text(claim);
  const auto words = scan_words(text);

  for (size_t i = 0; i < words.size(); ++i) {
    if (!is_auxiliary(words[i].lower_core)) continue;
    if (i + 1 < words.size() && words[i + 1].lower_core == "not") {
      // Drop the whitespace and the "not" core; keep any trailing punctuation.
      std::string out = text;
      out.erase(words[i].core_end, words[i + 1].core_end - words[i].core_end);
      return out;
    }
    std::string out = text;
    out.insert(words[i].core_end, " not");
    return out;
  }

  const auto& verbs = third_person_verbs();
  for (const auto& word : words) {
    auto it = verbs.find(word.lower_core);
    if (it == verbs.end()) continue;
    const bool capitalized = std::isupper(static_cast<unsigned char>(text[word.begin])) != 0;
    std::string replacement = (capitalized ? "Does not " : "does not ") + it->second;
    std::string out = text;
    out.replace(word.begin, word.core_end - word.begin, replacement);
    return out;
  }

  return "It is not the case that " + text;
}

FixtureNegator FixtureNegator::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing("negation fixture not found: " + path);
  const auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ConfigError("negation fixture must be a JSON object: " + path);
  }
  std::map<std::string, std::string> table;
  for (const auto& [claim, negated] : parsed.items()) table.emplace(claim, negated.get<std::string>());
  return FixtureNegator(std::move(table));
}

std::string FixtureNegator::negate(std::string_view claim) {
  auto it = table_.find(claim);
  if (it == table_.end()) throw ProviderUnavailable("no fixture negation for: " + std::string(claim));
  return it->second;
}

RemoteNegator::RemoteNegator(ChatEndpoint endpoint, std::string prompt_template,
                             std::shared_ptr<HttpTransport> transport, int max_in_flight,
                             RetryPolicy retry)
    : client_(std::move(endpoint), std::move(transport), max_in_flight, retry),
      prompt_template_(std::move(prompt_template)) {
  if (prompt_template_.find("{claim}") == std::string::npos) {
    throw TemplateMissingPlaceholder("negation prompt template lacks {claim}");
  }
}

std::unique_ptr<RemoteNegator> RemoteNegator::from_env(std::string prompt_template,
                                                       std::shared_ptr<HttpTransport> transport,
                                                       int max_in_flight) {
  require_network("remote negation provider");
  auto url = env_var("NEGATION_API_URL");
  if (!url) throw ConfigError("NEGATION_API_URL is not set");
  ChatEndpoint endpoint{*url, env_var("NEGATION_API_KEY").value_or(""),
                        env_var("NEGATION_MODEL").value_or("mistral-large-latest")};
  return std::make_unique<RemoteNegator>(std::move(endpoint), std::move(prompt_template),
                                         std::move(transport), max_in_flight);
}

std::string RemoteNegator::negate(std::string_view claim) {
  std::string prompt = prompt_template_;
  for (size_t pos = prompt.find("{claim}"); pos != std::string::npos; pos = prompt.find("{claim}", pos)) {
    prompt.replace(pos, 7, claim);
    pos += claim.size();
  }
  ChatOptions options;
  options.max_tokens = 200;
  std::string content(trim(client_.complete(prompt, options).content));
  // Models like to wrap the answer in quotes.
  if (content.size() >= 2 && content.front() == '"' && content.back() == '"') {
    content = std::string(trim(std::string_view(content).substr(1, content.size() - 2)));
  }
  return content;
}

std::string RemoteNegator::identity() const { return "remote:" + client_.endpoint().model; }

ClaimPair negate_claim(const ClaimPair& claim, NegationProvider& provider, bool fallback) {
  if (trim(claim.text).empty()) throw InvalidClaim("cannot negate an empty claim");
  std::string negated;
  try {
    negated = provider.negate(claim.text);
  } catch (const ProviderUnavailable&) {
    if (!fallback) throw;
    negated = rule_based_negate(claim.text);
  }
  if (is_degenerate(claim.text, negated)) {
    throw DegenerateNegation("negation of claim '" + claim.id + "' is empty or identical");
  }
  ClaimPair out = claim;
  out.negated_text = std::move(negated);
  return out;
}

}  // namespace claimcheck
