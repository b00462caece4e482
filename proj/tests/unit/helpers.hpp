#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "claimcheck/http.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return CLAIMCHECK_SOURCE_DIR; }
inline std::filesystem::path fixtures() { return source_dir() / "fixtures"; }

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("claimcheck-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Replays scripted responses and records requests. When the script runs
/// out, the last response repeats.
class ScriptedTransport final : public claimcheck::HttpTransport {
 public:
  explicit ScriptedTransport(std::vector<claimcheck::HttpResponse> script) : script_(script.begin(), script.end()) {}

  claimcheck::HttpResponse send(const claimcheck::HttpRequest& request) override {
    std::lock_guard lock(mutex_);
    requests.push_back(request);
    if (script_.size() > 1) {
      auto r = script_.front();
      script_.pop_front();
      return r;
    }
    return script_.front();
  }

  std::vector<claimcheck::HttpRequest> requests;

 private:
  std::mutex mutex_;
  std::deque<claimcheck::HttpResponse> script_;
};

/// Answers every request through a callback.
class LambdaTransport final : public claimcheck::HttpTransport {
 public:
  explicit LambdaTransport(std::function<claimcheck::HttpResponse(const claimcheck::HttpRequest&)> fn)
      : fn_(std::move(fn)) {}
  claimcheck::HttpResponse send(const claimcheck::HttpRequest& request) override { return fn_(request); }

 private:
  std::function<claimcheck::HttpResponse(const claimcheck::HttpRequest&)> fn_;
};

/// Restores the global network switch on scope exit.
class NetworkGuard {
 public:
  explicit NetworkGuard(bool allowed) : previous_(claimcheck::network_allowed()) {
    claimcheck::set_network_allowed(allowed);
  }
  ~NetworkGuard() { claimcheck::set_network_allowed(previous_); }

 private:
  bool previous_;
};

}  // namespace testing
