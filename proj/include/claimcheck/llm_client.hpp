#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimcheck/http.hpp"

namespace claimcheck {

/// An OpenAI-compatible chat-completions endpoint (Mistral, vLLM, Together,
/// OpenAI all speak this dialect). `url` is the full completions URL.
struct ChatEndpoint {
  std::string url;
  std::string api_key;
  std::string model;
};

struct ChatOptions {
  double temperature = 0.0;
  int max_tokens = 256;
  bool logprobs = false;
  int top_logprobs = 0;  // only sent when logprobs is set
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

struct ChatCompletion {
  std::string content;
  /// Top alternatives for the first generated token, as reported by the
  /// provider; empty when log-probabilities were not requested.
  std::vector<TokenLogprob> first_token_alternatives;
};

nlohmann::json build_chat_request(const ChatEndpoint& endpoint, const std::string& prompt,
                                  const ChatOptions& options);

/// Throws ProviderUnavailable when the body is not a chat completion.
ChatCompletion parse_chat_response(const std::string& body);

/// Thread-safe: concurrent complete() calls are bounded by the limiter.
class ChatClient {
 public:
  ChatClient(ChatEndpoint endpoint, std::shared_ptr<HttpTransport> transport, int max_in_flight,
             RetryPolicy retry = {});

  ChatCompletion complete(const std::string& prompt, const ChatOptions& options);

  const ChatEndpoint& endpoint() const { return endpoint_; }
  const InFlightLimiter& limiter() const { return limiter_; }

 private:
  ChatEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  InFlightLimiter limiter_;
  RetryPolicy retry_;
};

}  // namespace claimcheck
