#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace claimcheck {

struct HttpRequest {
  std::string method = "GET";  // GET or POST
  std::string url;             // absolute, http:// or https://
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;  // 0 = transport failure (no HTTP response)
  std::string body;
  std::string error;
};

/// Minimal request/response seam between remote providers and the network.
/// Tests substitute scripted transports; production uses the httplib one.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(60));

/// Process-wide switch used by mock mode. While offline, remote providers
/// refuse to construct and the default transport refuses to connect.
void set_network_allowed(bool allowed);
bool network_allowed();
/// Throws ConfigError naming `what` when the network is disabled.
void require_network(std::string_view what);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{20000};
};

/// Sends with exponential backoff on transport failures, 429 and 5xx.
/// Other statuses are returned to the caller untouched. Throws
/// ProviderUnavailable when every attempt failed.
HttpResponse send_with_retry(HttpTransport& transport, const HttpRequest& request,
                             const RetryPolicy& policy,
                             const std::function<void(std::chrono::milliseconds)>& sleep = {});

/// Bounds the number of concurrent calls a provider makes.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit);

  class Slot {
   public:
    explicit Slot(InFlightLimiter& owner);
    ~Slot();
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    InFlightLimiter& owner_;
  };

  Slot acquire() { return Slot(*this); }
  int limit() const { return limit_; }
  int peak() const;

 private:
  int limit_;
  int active_ = 0;
  int peak_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
};

std::optional<std::string> env_var(const char* name);

}  // namespace claimcheck
