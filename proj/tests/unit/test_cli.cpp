#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "claimcheck/http.hpp"
#include "cli.hpp"
#include "helpers.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  testing::NetworkGuard restore(claimcheck::network_allowed());
  args.insert(args.begin(), "claimcheck");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = claimcheck::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config() { return (testing::fixtures() / "config.json").string(); }

/// Sets an environment variable for the scope.
class EnvGuard {
 public:
  EnvGuard(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) previous_ = old;
    setenv(name, value, 1);
  }
  ~EnvGuard() {
    if (previous_) setenv(name_, previous_->c_str(), 1);
    else unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> previous_;
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("index a corpus") {
    testing::TempDir dir;
    const auto corpus = (testing::fixtures() / "corpus10.jsonl").string();
    const auto r = run_cli({"index", corpus, (dir / "a").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("indexed 10 documents") != std::string::npos);
    CHECK(run_cli({"index", corpus, (dir / "b").string()}).code == 0);
    CHECK(testing::read_text(dir / "a" / "manifest.json") == testing::read_text(dir / "b" / "manifest.json"));
    CHECK(testing::read_text(dir / "a" / "postings.tsv") == testing::read_text(dir / "b" / "postings.tsv"));

    const auto missing = run_cli({"index", (dir / "nope.jsonl").string(), (dir / "c").string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("nope.jsonl") != std::string::npos);
  }

  TEST_CASE("usage errors") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({"--config", config(), "--condition", "sideways", "verify", "x"}).code == 2);
    CHECK(run_cli({"--config", config(), "--sources", "wikipedia,bing", "verify", "A claim."}).code == 2);
  }

  TEST_CASE("negate") {
    const auto r = run_cli({"--mock", "negate", "Drug X increases blood pressure."});
    CHECK(r.code == 0);
    CHECK(r.out == "Drug X does not increase blood pressure.\n");
  }

  TEST_CASE("verify prints a deterministic verdict block") {
    const auto a = run_cli({"--config", config(), "verify", "--id", "sf-1", "Vitamin D supplementation reduces fractures."});
    const auto b = run_cli({"--config", config(), "verify", "--id", "sf-1", "Vitamin D supplementation reduces fractures."});
    CHECK(a.code == 0);
    CHECK_FALSE(a.out.empty());
    CHECK(a.out == b.out);
    CHECK(a.out.find("merged") != std::string::npos);
  }

  TEST_CASE("verify --json emits one JSON object") {
    const auto r = run_cli({"--config", config(), "--json", "--sources", "pubmed", "verify", "Aspirin lowers risk."});
    CHECK(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j.is_object());
    CHECK(j["claim"]["text"] == "Aspirin lowers risk.");
    CHECK(j["sources"].size() == 1);
  }

  TEST_CASE("mock mode rejects remote providers") {
    testing::TempDir dir;
    auto cfg = json::parse(testing::read_text(testing::fixtures() / "config.json"));
    cfg["verdict"] = {{"kind", "remote"}, {"url", "http://127.0.0.1:9/v1/chat/completions"}, {"model", "m"}};
    cfg["dataset"]["path"] = (testing::fixtures() / "claims.jsonl").string();
    cfg["dataset"]["scheme"] = "scifact";
    for (auto& s : cfg["sources"]) s["path"] = (testing::fixtures() / s["path"].get<std::string>()).string();
    testing::write_text(dir / "c.json", cfg.dump());
    CHECK(run_cli({"--config", (dir / "c.json").string(), "verify", "A claim."}).code == 3);
  }

  TEST_CASE("CLAIMCHECK_MOCK enables mock mode") {
    testing::TempDir dir;
    auto cfg = json::parse(testing::read_text(testing::fixtures() / "config.json"));
    cfg["mock"] = false;
    cfg["verdict"] = {{"kind", "mock"}};
    for (auto& s : cfg["sources"]) s["path"] = (testing::fixtures() / s["path"].get<std::string>()).string();
    cfg.erase("dataset");
    testing::write_text(dir / "c.json", cfg.dump());
    {
      EnvGuard env("CLAIMCHECK_MOCK", "1");
      cfg["verdict"] = {{"kind", "remote"}, {"url", "http://127.0.0.1:9/"}, {"model", "m"}};
      testing::write_text(dir / "remote.json", cfg.dump());
      CHECK(run_cli({"--config", (dir / "remote.json").string(), "verify", "A claim."}).code == 3);
    }
    {
      EnvGuard env("CLAIMCHECK_MOCK", "0");
      CHECK(run_cli({"--config", (dir / "c.json").string(), "verify", "A claim."}).code == 0);
    }
  }

  TEST_CASE("evaluate writes per-condition metrics and analyze rebuilds KDE") {
    testing::TempDir dir;
    const auto out = (dir / "runs").string();
    const auto r = run_cli({"--config", config(), "--out", out, "evaluate"});
    CHECK(r.code == 0);
    const auto original = testing::read_text(dir / "runs" / "original" / "metrics.json");
    const auto dual = testing::read_text(dir / "runs" / "original+negated" / "metrics.json");
    REQUIRE_FALSE(original.empty());
    REQUIRE_FALSE(dual.empty());
    CHECK(original != dual);
    for (const char* key : {"accuracy", "precision", "recall", "f1"}) {
      CHECK(json::parse(original)["sources"][0].contains(key));
    }

    const auto json_run = run_cli({"--config", config(), "--out", out, "--json", "--condition", "original", "evaluate"});
    CHECK(json_run.code == 0);
    CHECK(json::accept(json_run.out));

    const auto run_dir = (dir / "runs" / "original+negated").string();
    const auto before = testing::read_text(dir / "runs" / "original+negated" / "kde.csv");
    CHECK(run_cli({"analyze", run_dir}).code == 0);
    const auto first = testing::read_text(dir / "runs" / "original+negated" / "kde.csv");
    CHECK(run_cli({"analyze", "--no-svg", run_dir}).code == 0);
    CHECK(testing::read_text(dir / "runs" / "original+negated" / "kde.csv") == first);
    CHECK(first == before);
    CHECK(fs::exists(dir / "runs" / "original+negated" / "kde.svg"));

    CHECK(run_cli({"analyze", dir.path().string()}).code == 2);
  }

  TEST_CASE("evaluate --limit --seed picks the same subset") {
    testing::TempDir dir;
    for (const char* sub : {"a", "b"}) {
      const auto r = run_cli({"--config", config(), "--out", (dir / sub).string(), "--limit", "3", "--seed", "7",
                              "--condition", "original", "evaluate"});
      CHECK(r.code == 0);
    }
    const auto a = json::parse(testing::read_text(dir / "a" / "original" / "run-manifest.json"));
    const auto b = json::parse(testing::read_text(dir / "b" / "original" / "run-manifest.json"));
    CHECK(a["claims"].size() == 3);
    CHECK(a["claims"] == b["claims"]);
  }
}
