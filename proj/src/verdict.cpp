#include "claimcheck/verdict.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string build_prompt(const std::string& claim, std::span<const EvidenceSentence> evidence,
                         const LabelScheme& scheme, std::string_view prompt_template) {
  for (auto placeholder : {"{claim}", "{evidence}", "{options}"}) {
    if (prompt_template.find(placeholder) == std::string_view::npos) {
      throw TemplateMissingPlaceholder(std::string("prompt template lacks ") + placeholder);
    }
  }

  std::string evidence_block;
  if (evidence.empty()) {
    evidence_block = kNoEvidenceBlock;
  } else {
    for (size_t i = 0; i < evidence.size(); ++i) {
      if (i > 0) evidence_block += '\n';
      evidence_block += std::to_string(i + 1) + ". " + collapse_spaces(evidence[i].text);
    }
  }

  std::string options_block;
  for (size_t i = 0; i < scheme.size(); ++i) {
    if (i > 0) options_block += '\n';
    options_block += std::string(1, scheme.option_letters()[i]) + ") " + scheme.labels()[i];
  }

  // Single left-to-right pass so placeholder-like text inside the claim or
  // evidence is never expanded.
  std::string prompt;
  prompt.reserve(prompt_template.size() + evidence_block.size() + claim.size());
  const std::string claim_text = collapse_spaces(claim);
  size_t pos = 0;
  while (pos < prompt_template.size()) {
    if (prompt_template.substr(pos).starts_with("{claim}")) {
      prompt += claim_text;
      pos += 7;
    } else if (prompt_template.substr(pos).starts_with("{evidence}")) {
      prompt += evidence_block;
      pos += 10;
    } else if (prompt_template.substr(pos).starts_with("{options}")) {
      prompt += options_block;
      pos += 9;
    } else {
      prompt += prompt_template[pos++];
    }
  }
  return prompt;
}

double logsumexp(std::span<const double> z) {
  if (z.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double x : z) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

LabelConfidence confidence_from_logits(const LabelLogits& z) {
  if (z.logits.size() != z.scheme.size()) {
    throw std::invalid_argument("logit count does not match the label scheme");
  }
  for (double x : z.logits) {
    if (!std::isfinite(x)) throw std::invalid_argument("logits must be finite");
  }
  size_t best = 0;
  for (size_t i = 1; i < z.logits.size(); ++i) {
    if (z.logits[i] > z.logits[best]) best = i;
  }
  return {best, z.scheme.labels()[best], z.logits[best] - logsumexp(z.logits)};
}

LabelLogits to_label_logits(const OptionScores& scores, const LabelScheme& scheme, double floor) {
  if (scores.letter_logprobs.size() != scheme.size()) {
    throw std::invalid_argument("option scores do not match the label scheme");
  }
  LabelLogits out{scheme, {}};
  bool any = false;
  for (const auto& lp : scores.letter_logprobs) {
    if (lp && std::isfinite(*lp)) {
      out.logits.push_back(*lp);
      any = true;
    } else {
      out.logits.push_back(floor);
    }
  }
  if (!any) throw NoValidOption("provider returned no log-probability for any option letter");
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<MockVerdictProvider> MockVerdictProvider::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing("verdict fixture not found: " + path);
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) throw ConfigError("verdict fixture must be a JSON object: " + path);
  std::map<std::string, std::vector<double>> fixtures;
  for (const auto& [key, logits] : parsed.items()) fixtures.emplace(key, logits.get<std::vector<double>>());
  return std::make_unique<MockVerdictProvider>(std::move(fixtures));
}

OptionScores MockVerdictProvider::choose(const VerdictRequest& request) {
  OptionScores scores;
  const size_t m = request.option_letters.size();

  auto fixture = fixtures_.find(request.claim_id + "|" + request.source);
  if (fixture == fixtures_.end()) fixture = fixtures_.find(request.claim_id + "|*");
  if (fixture != fixtures_.end()) {
    for (size_t i = 0; i < m; ++i) {
      if (i < fixture->second.size()) {
        scores.letter_logprobs.emplace_back(fixture->second[i]);
      } else {
        scores.letter_logprobs.emplace_back(std::nullopt);
      }
    }
  } else {
    std::uint64_t state = fnv1a64(request.claim_id + "\x1f" + request.source + "\x1f" + request.prompt);
    for (size_t i = 0; i < m; ++i) {
      // Uniform in [-6, 0) with 2^-53 resolution.
      const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      scores.letter_logprobs.emplace_back(-6.0 * unit);
    }
  }

  size_t best = 0;
  for (size_t i = 1; i < m; ++i) {
    if (scores.letter_logprobs[i].value_or(-1e300) > scores.letter_logprobs[best].value_or(-1e300)) best = i;
  }
  if (m > 0) scores.top_token = std::string(1, request.option_letters[best]);
  return scores;
}

// ---------------------------------------------------------------------------

RemoteVerdictProvider::RemoteVerdictProvider(ChatEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                                             int max_in_flight, RetryPolicy retry, int top_logprobs)
    : client_(std::move(endpoint), std::move(transport), max_in_flight, retry), top_logprobs_(top_logprobs) {}

std::unique_ptr<RemoteVerdictProvider> RemoteVerdictProvider::from_env(std::shared_ptr<HttpTransport> transport,
                                                                       int max_in_flight) {
  require_network("remote verdict provider");
  auto url = env_var("LLM_API_URL");
  if (!url) throw ConfigError("LLM_API_URL is not set");
  auto model = env_var("LLM_MODEL");
  if (!model) throw ConfigError("LLM_MODEL is not set");
  ChatEndpoint endpoint{*url, env_var("LLM_API_KEY").value_or(""), *model};
  return std::make_unique<RemoteVerdictProvider>(std::move(endpoint), std::move(transport), max_in_flight);
}

std::optional<char> option_letter_from_token(std::string_view token, std::span<const char> letters) {
  std::string_view core = trim(token);
  while (!core.empty() && std::string_view("([{\"'*").find(core.front()) != std::string_view::npos) {
    core.remove_prefix(1);
  }
  while (!core.empty() && std::string_view(")]}.:\"'*").find(core.back()) != std::string_view::npos) {
    core.remove_suffix(1);
  }
  if (core.size() != 1) return std::nullopt;
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(core.front())));
  for (char letter : letters) {
    if (letter == core.front() || letter == upper) return letter;
  }
  return std::nullopt;
}

OptionScores option_scores_from_completion(const ChatCompletion& completion, std::span<const char> letters) {
  OptionScores scores;
  scores.top_token = std::string(trim(completion.content));
  scores.letter_logprobs.assign(letters.size(), std::nullopt);
  for (const auto& alt : completion.first_token_alternatives) {
    auto letter = option_letter_from_token(alt.token, letters);
    if (!letter) continue;
    const auto index = static_cast<size_t>(std::find(letters.begin(), letters.end(), *letter) - letters.begin());
    auto& slot = scores.letter_logprobs[index];
    if (!slot || alt.logprob > *slot) slot = alt.logprob;
  }
  return scores;
}

OptionScores RemoteVerdictProvider::choose(const VerdictRequest& request) {
  ChatOptions options;
  options.temperature = 0.0;
  options.max_tokens = 1;
  options.logprobs = true;
  options.top_logprobs = top_logprobs_;
  return option_scores_from_completion(client_.complete(request.prompt, options), request.option_letters);
}

// ---------------------------------------------------------------------------

VeracityVerdict predict_verdict(const ClaimPair& claim, const std::string& source,
                                std::span<const EvidenceSentence> evidence, VerdictProvider& provider,
                                const LabelScheme& scheme, std::string_view prompt_template, double logprob_floor) {
  VerdictRequest request{claim.id, source, build_prompt(claim.text, evidence, scheme, prompt_template),
                         scheme.option_letters()};
  const OptionScores scores = provider.choose(request);

  VeracityVerdict verdict;
  verdict.claim_id = claim.id;
  verdict.source = source;
  try {
    // Out-of-scheme top tokens are fine: the argmax below only ranges over
    // valid option letters.
    const LabelLogits z = to_label_logits(scores, scheme, logprob_floor);
    const LabelConfidence best = confidence_from_logits(z);
    verdict.label = best.label;
    verdict.confidence = best.confidence;
    verdict.logits = z.logits;
  } catch (const NoValidOption& e) {
    verdict.abstained = true;
    verdict.confidence = logprob_floor;
    verdict.logits.assign(scheme.size(), logprob_floor);
    verdict.note = e.what();
  }
  return verdict;
}

}  // namespace claimcheck
