#include <doctest.h>

#include <set>

#include "claimcheck/config.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/negation.hpp"
#include "claimcheck/pipeline.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace claimcheck;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Setup {
  RunConfig cfg;
  Providers providers;
  ExperimentPlan plan;
};

Setup fixture_setup(ClaimCondition condition, const fs::path& config = testing::fixtures() / "config.json") {
  auto cfg = load_run_config(config);
  auto providers = build_providers(cfg);
  ExperimentPlan plan{*cfg.dataset, condition, std::nullopt, cfg.pipeline, verdict_template(cfg)};
  return Setup{std::move(cfg), std::move(providers), std::move(plan)};
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), dir).string()] = testing::read_text(entry.path());
  }
  return out;
}

DatasetDescriptor scifact_descriptor(const fs::path& path) {
  return DatasetDescriptor{"t", *builtin_scheme("scifact"), path, "claim", "label", "id", "", {}};
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("dataset loading filters bad records") {
    testing::TempDir dir;
    testing::write_text(dir / "d.jsonl",
                        "{\"id\": \"a\", \"claim\": \"One.\", \"label\": \"Supported\"}\n"
                        "{\"id\": \"b\", \"claim\": \"Two.\", \"label\": \"Maybe\"}\n"
                        "{\"id\": 7, \"claim\": \"Three.\", \"label\": \"Refuted\"}\n"
                        "{\"claim\": \"Four.\", \"label\": \"Not Enough Info\"}\n");
    const auto desc = scifact_descriptor(dir / "d.jsonl");
    const auto load = load_dataset(desc);
    REQUIRE(load.claims.size() == 3);
    REQUIRE(load.rejected.size() == 1);
    CHECK(load.rejected[0].line == 2);
    CHECK(load.claims[1].id == "7");
    CHECK(load.claims[2].id == "4");
    CHECK(load.claims[0].gold_label == "Supported");

    const auto again = load_dataset(desc);
    REQUIRE(again.claims.size() == load.claims.size());
    for (size_t i = 0; i < again.claims.size(); ++i) {
      CHECK(again.claims[i].id == load.claims[i].id);
      CHECK(again.claims[i].text == load.claims[i].text);
    }
  }

  TEST_CASE("dataset errors") {
    testing::TempDir dir;
    testing::write_text(dir / "empty.jsonl", "");
    CHECK_THROWS_AS(load_dataset(scifact_descriptor(dir / "empty.jsonl")), EmptyDataset);
    CHECK_THROWS_AS(load_dataset(scifact_descriptor(dir / "missing.jsonl")), FileMissing);
    testing::write_text(dir / "dup.jsonl",
                        "{\"id\": \"a\", \"claim\": \"One.\", \"label\": \"Supported\"}\n"
                        "{\"id\": \"a\", \"claim\": \"Two.\", \"label\": \"Supported\"}\n"
                        "not json\n"
                        "{\"id\": \"c\", \"claim\": \"\", \"label\": \"Supported\"}\n");
    const auto load = load_dataset(scifact_descriptor(dir / "dup.jsonl"));
    CHECK(load.claims.size() == 1);
    CHECK(load.rejected.size() == 3);
  }

  TEST_CASE("dataset field mapping, aliases and ready-made negations") {
    testing::TempDir dir;
    testing::write_text(dir / "d.jsonl",
                        "{\"uid\": \"x\", \"text\": \"The sky is blue.\", \"verdict\": \"SUPPORT\", "
                        "\"neg\": \"The sky is not blue.\"}\n");
    const json j = {{"name", "custom"},
                    {"scheme", "scifact"},
                    {"path", "d.jsonl"},
                    {"claim_field", "text"},
                    {"label_field", "verdict"},
                    {"id_field", "uid"},
                    {"negation_field", "neg"},
                    {"label_aliases", {{"SUPPORT", "Supported"}}}};
    const auto desc = descriptor_from_json(j, dir.path());
    const auto load = load_dataset(desc);
    REQUIRE(load.claims.size() == 1);
    CHECK(load.claims[0].id == "x");
    CHECK(load.claims[0].gold_label == "Supported");
    CHECK(load.claims[0].negated_text == "The sky is not blue.");
    CHECK_THROWS_AS(descriptor_from_json(json{{"name", "n"}, {"path", "p"}, {"bogus", 1}}, dir.path()), ConfigError);
  }

  TEST_CASE("seeded subsets are repeatable and in file order") {
    std::vector<ClaimPair> claims;
    for (int i = 0; i < 20; ++i) claims.push_back({"c" + std::to_string(i), "claim " + std::to_string(i), {}, {}});
    const auto a = select_claims(claims, 3, 7), b = select_claims(claims, 3, 7);
    REQUIRE(a.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(a[i].id == b[i].id);
    std::vector<size_t> positions;
    for (const auto& c : a) positions.push_back(std::stoul(c.id.substr(1)));
    CHECK(std::is_sorted(positions.begin(), positions.end()));
    CHECK(select_claims(claims, std::nullopt, 7).size() == 20);
    CHECK(select_claims(claims, 50, 7).size() == 20);

    const auto perm = seeded_permutation(50, 11);
    std::set<size_t> seen(perm.begin(), perm.end());
    CHECK(seen.size() == 50);
    CHECK(*seen.rbegin() == 49);
    CHECK(seeded_permutation(50, 11) == perm);
    CHECK(seeded_permutation(50, 12) != perm);
  }

  TEST_CASE("trace file names") {
    CHECK(trace_file_name("sf-1") == "sf-1.json");
    CHECK(trace_file_name("a/b c") == "a%2Fb%20c.json");
    CHECK(trace_file_name(".hidden") == "%2Ehidden.json");
    CHECK(trace_file_name("x.y_z") == "x.y_z.json");
  }

  TEST_CASE("config loading") {
    const auto cfg = load_run_config(testing::fixtures() / "config.json");
    CHECK(cfg.mock);
    CHECK(cfg.sources.size() == 3);
    CHECK(cfg.pipeline.retrieval_depth == 3);
    CHECK(cfg.dataset->path == testing::fixtures() / "claims.jsonl");
    CHECK_THROWS_AS(run_config_from_json(json{{"sources", json::array()}, {"colour", "red"}}, "/"), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), FileMissing);
  }

  TEST_CASE("providers in mock mode") {
    auto cfg = load_run_config(testing::fixtures() / "config.json");
    testing::NetworkGuard restore(true);
    const auto providers = build_providers(cfg);
    CHECK_FALSE(network_allowed());
    REQUIRE(providers.sources.size() == 3);
    CHECK(providers.sources[0]->kind() == SourceKind::wikipedia());
    CHECK(providers.sources[2]->kind() == SourceKind::web());
    CHECK(build_providers(cfg, {"pubmed"}).sources.size() == 1);
    CHECK_THROWS_AS(build_providers(cfg, {"bing"}), UsageError);
    cfg.verdict.kind = "remote";
    CHECK_THROWS_AS(build_providers(cfg), ConfigError);
  }

  TEST_CASE("pipeline: E_i is the union of per-source finals") {
    auto s = fixture_setup(ClaimCondition::OriginalPlusNegated);
    const auto claims = load_dataset(s.plan.dataset).claims;
    for (const auto& claim : claims) {
      const auto trace = verify_claim(claim, s.providers, s.plan.dataset.scheme, {s.plan.condition, s.cfg.pipeline});
      std::vector<std::vector<EvidenceSentence>> finals;
      for (const auto& [kind, bundle] : trace.evidence.per_source) finals.push_back(bundle.final);
      CHECK(oracle::normalized_set(trace.evidence.sentences) == oracle::normalized_union(finals));
      CHECK(trace.sources.size() == 3);
      CHECK(trace.merged.source == "merged");
      CHECK(trace.claim.negated_text.has_value());
      CHECK(trace.negation_origin == "rule-based");

      const auto round = trace_from_json(to_json(trace));
      CHECK(to_json(round) == to_json(trace));
    }
  }

  TEST_CASE("pipeline: original-only never calls the negation provider") {
    auto s = fixture_setup(ClaimCondition::OriginalOnly);
    auto counter = std::make_shared<CountingNegator>(s.providers.negation);
    s.providers.negation = counter;
    testing::TempDir out;
    const auto summary = run_experiment(s.plan, s.providers, out.path());
    CHECK(summary.complete);
    CHECK(summary.claims == 5);
    CHECK(counter->calls() == 0);

    auto dual = fixture_setup(ClaimCondition::OriginalPlusNegated);
    auto dual_counter = std::make_shared<CountingNegator>(dual.providers.negation);
    dual.providers.negation = dual_counter;
    testing::TempDir out2;
    run_experiment(dual.plan, dual.providers, out2.path());
    CHECK(dual_counter->calls() == 5);
  }

  TEST_CASE("run artifacts are deterministic") {
    testing::TempDir a, b;
    auto s1 = fixture_setup(ClaimCondition::OriginalPlusNegated);
    auto s2 = fixture_setup(ClaimCondition::OriginalPlusNegated);
    s2.plan.cfg.workers = 1;  // worker count must not change artifacts
    run_experiment(s1.plan, s1.providers, a.path());
    run_experiment(s2.plan, s2.providers, b.path());
    const auto ta = tree(a.path()), tb = tree(b.path());
    CHECK(ta == tb);
    for (const char* f : {"confidences.csv", "metrics.json", "kde.csv", "run-manifest.json", "traces/sf-1.json"})
      CHECK(ta.count(f) == 1);
    const auto metrics = json::parse(ta.at("metrics.json"));
    CHECK(metrics["sources"].back()["source"] == "merged");
    for (const char* key : {"accuracy", "precision", "recall", "f1"}) CHECK(metrics["sources"][0].contains(key));
  }

  TEST_CASE("an interrupted run resumes to identical artifacts") {
    testing::TempDir whole, resumed;
    auto s = fixture_setup(ClaimCondition::OriginalPlusNegated);
    run_experiment(s.plan, s.providers, whole.path());

    auto r = fixture_setup(ClaimCondition::OriginalPlusNegated);
    r.plan.cfg.workers = 1;
    RunOptions stop;
    stop.max_new_traces = 3;
    const auto partial = run_experiment(r.plan, r.providers, resumed.path(), stop);
    CHECK_FALSE(partial.complete);
    CHECK(partial.computed == 3);
    CHECK_FALSE(fs::exists(resumed / "metrics.json"));

    auto counter = std::make_shared<CountingNegator>(r.providers.negation);
    r.providers.negation = counter;
    const auto rest = run_experiment(r.plan, r.providers, resumed.path());
    CHECK(rest.complete);
    CHECK(rest.reused == 3);
    CHECK(rest.computed == 2);
    CHECK(counter->calls() == 2);
    CHECK(tree(whole.path()) == tree(resumed.path()));
  }

  TEST_CASE("traces from a different plan are recomputed") {
    testing::TempDir dir;
    auto s = fixture_setup(ClaimCondition::OriginalPlusNegated);
    run_experiment(s.plan, s.providers, dir.path());
    auto changed = fixture_setup(ClaimCondition::OriginalPlusNegated);
    changed.plan.cfg.final_top_p = 2;
    const auto summary = run_experiment(changed.plan, changed.providers, dir.path());
    CHECK(summary.reused == 0);
    CHECK(summary.computed == 5);
  }

  TEST_CASE("run manifest records configuration and providers") {
    auto s = fixture_setup(ClaimCondition::OriginalOnly);
    const auto claims = load_dataset(s.plan.dataset).claims;
    const auto manifest = run_manifest(s.plan, s.providers, claims, 0);
    CHECK(manifest["condition"] == "original");
    CHECK(manifest["sources"].size() == 3);
    CHECK(manifest["providers"]["verdict"] == "mock");
    CHECK(manifest["claims"].size() == 5);
    CHECK(manifest.dump().find("time") == std::string::npos);
  }

  TEST_CASE("dual retrieval surfaces evidence only the negation finds") {
    const auto config = testing::fixtures() / "dual" / "config.json";
    const std::string refuting = "In a randomized trial of 900 adults, drug X does not increase blood pressure.";
    for (const auto condition : {ClaimCondition::OriginalPlusNegated, ClaimCondition::OriginalOnly}) {
      auto s = fixture_setup(condition, config);
      const auto claims = load_dataset(s.plan.dataset).claims;
      REQUIRE(claims.size() == 1);
      const auto trace = verify_claim(claims[0], s.providers, s.plan.dataset.scheme, {condition, s.cfg.pipeline});
      bool found = false;
      for (const auto& e : trace.evidence.sentences) found |= e.text == refuting;
      CAPTURE(to_string(condition));
      CHECK(found == (condition == ClaimCondition::OriginalPlusNegated));
    }
  }

  TEST_CASE("failing sources abstain instead of aborting") {
    auto s = fixture_setup(ClaimCondition::OriginalPlusNegated);
    auto transport = std::make_shared<testing::ScriptedTransport>(std::vector<HttpResponse>{{500, "", ""}});
    s.providers.sources.push_back(std::make_shared<WebSearchSource>(
        SourceKind{SourceFamily::Custom, "flaky"}, WebSearchEndpoint{"https://x.test", "k", "cx"}, transport, 1,
        RetryPolicy{1, std::chrono::milliseconds(1), std::chrono::milliseconds(1)}));
    const auto claims = load_dataset(s.plan.dataset).claims;
    const auto trace = verify_claim(claims[0], s.providers, s.plan.dataset.scheme, {s.plan.condition, s.cfg.pipeline});
    REQUIRE(trace.sources.size() == 4);
    CHECK(trace.sources[3].verdict.abstained);
    CHECK_FALSE(trace.sources[3].failures.empty());
    CHECK_FALSE(trace.sources[0].verdict.abstained);
    CHECK(trace.abstentions() >= 1);
  }
}
