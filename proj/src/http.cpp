#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "claimcheck/http.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "claimcheck/errors.hpp"

namespace claimcheck {

namespace {

std::atomic<bool> g_network_allowed{true};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse send(const HttpRequest& request) override {
    if (!network_allowed()) throw ConfigError("network access is disabled (mock mode)");
    const auto parts = split_url(request.url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [key, value] : request.headers) {
      if (key == "Content-Type") {
        content_type = value;
      } else {
        headers.emplace(key, value);
      }
    }

    httplib::Result result = request.method == "POST"
                                 ? client.Post(parts.path, headers, request.body, content_type)
                                 : client.Get(parts.path, headers);
    HttpResponse response;
    if (!result) {
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
  }

 private:
  std::chrono::seconds timeout_;
};

bool retryable(const HttpResponse& response) {
  return response.status == 0 || response.status == 429 || response.status >= 500;
}

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

void set_network_allowed(bool allowed) { g_network_allowed.store(allowed); }
bool network_allowed() { return g_network_allowed.load(); }

void require_network(std::string_view what) {
  if (!network_allowed()) {
    throw ConfigError(std::string(what) + " requires network access, which mock mode forbids");
  }
}

HttpResponse send_with_retry(HttpTransport& transport, const HttpRequest& request,
                             const RetryPolicy& policy,
                             const std::function<void(std::chrono::milliseconds)>& sleep) {
  auto delay = policy.base_delay;
  HttpResponse last;
  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    last = transport.send(request);
    if (!retryable(last)) return last;
    if (attempt == policy.max_attempts) break;
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
    delay = std::min(delay * 2, policy.max_delay);
  }
  std::string reason = last.status == 0 ? last.error : "HTTP " + std::to_string(last.status);
  throw ProviderUnavailable(request.url + " failed after " + std::to_string(policy.max_attempts) +
                            " attempts: " + reason);
}

InFlightLimiter::InFlightLimiter(int limit) : limit_(limit < 1 ? 1 : limit) {}

InFlightLimiter::Slot::Slot(InFlightLimiter& owner) : owner_(owner) {
  std::unique_lock lock(owner_.mutex_);
  owner_.cv_.wait(lock, [&] { return owner_.active_ < owner_.limit_; });
  ++owner_.active_;
  owner_.peak_ = std::max(owner_.peak_, owner_.active_);
}

InFlightLimiter::Slot::~Slot() {
  {
    std::lock_guard lock(owner_.mutex_);
    --owner_.active_;
  }
  owner_.cv_.notify_one();
}

int InFlightLimiter::peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

std::optional<std::string> env_var(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

}  // namespace claimcheck
