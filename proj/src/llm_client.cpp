#include "claimcheck/llm_client.hpp"

#include "claimcheck/errors.hpp"

namespace claimcheck {

using nlohmann::json;

json build_chat_request(const ChatEndpoint& endpoint, const std::string& prompt,
                        const ChatOptions& options) {
  json request = {
      {"model", endpoint.model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", options.temperature},
      {"max_tokens", options.max_tokens},
  };
  if (options.logprobs) {
    request["logprobs"] = true;
    request["top_logprobs"] = options.top_logprobs;
  }
  return request;
}

ChatCompletion parse_chat_response(const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw ProviderUnavailable("chat response is not JSON");
  if (parsed.contains("error")) {
    throw ProviderUnavailable("chat endpoint error: " + parsed["error"].dump());
  }
  if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty()) {
    throw ProviderUnavailable("chat response has no choices");
  }
  const json& choice = parsed["choices"][0];
  ChatCompletion completion;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    completion.content = choice["message"]["content"].get<std::string>();
  }

  // {"logprobs": {"content": [{"token": "A", "logprob": -0.1, "top_logprobs": [...]}, ...]}}
  if (choice.contains("logprobs") && choice["logprobs"].is_object()) {
    const json& logprobs = choice["logprobs"];
    if (logprobs.contains("content") && logprobs["content"].is_array() &&
        !logprobs["content"].empty()) {
      const json& first = logprobs["content"][0];
      if (first.contains("top_logprobs") && first["top_logprobs"].is_array()) {
        for (const json& alt : first["top_logprobs"]) {
          if (!alt.contains("token") || !alt.contains("logprob") || !alt["logprob"].is_number()) continue;
          completion.first_token_alternatives.push_back(
              {alt["token"].get<std::string>(), alt["logprob"].get<double>()});
        }
      }
      if (completion.first_token_alternatives.empty() && first.contains("token") &&
          first.contains("logprob") && first["logprob"].is_number()) {
        completion.first_token_alternatives.push_back(
            {first["token"].get<std::string>(), first["logprob"].get<double>()});
      }
    }
  }
  return completion;
}

ChatClient::ChatClient(ChatEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                       int max_in_flight, RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      limiter_(max_in_flight),
      retry_(retry) {
  if (endpoint_.url.empty()) throw ConfigError("chat endpoint URL is empty");
  if (!transport_) throw ConfigError("chat client needs a transport");
}

ChatCompletion ChatClient::complete(const std::string& prompt, const ChatOptions& options) {
  HttpRequest request;
  request.method = "POST";
  request.url = endpoint_.url;
  request.headers.emplace_back("Content-Type", "application/json");
  if (!endpoint_.api_key.empty()) {
    request.headers.emplace_back("Authorization", "Bearer " + endpoint_.api_key);
  }
  request.body = build_chat_request(endpoint_, prompt, options).dump();

  HttpResponse response;
  {
    auto slot = limiter_.acquire();
    response = send_with_retry(*transport_, request, retry_);
  }
  if (response.status < 200 || response.status >= 300) {
    throw ProviderUnavailable("chat endpoint returned HTTP " + std::to_string(response.status));
  }
  return parse_chat_response(response.body);
}

}  // namespace claimcheck
