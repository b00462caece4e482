#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "claimcheck/analysis.hpp"
#include "claimcheck/config.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/http.hpp"
#include "claimcheck/local_index.hpp"
#include "claimcheck/negation.hpp"
#include "claimcheck/pipeline.hpp"

namespace claimcheck::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { Error, Warn, Info };

struct GlobalFlags {
  std::string config;
  bool mock = false;
  std::string out;
  std::vector<std::string> sources;
  std::string condition;
  std::optional<size_t> limit;
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::string log_level = "info";
};

class Logger {
 public:
  Logger(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void warn(const std::string& message) const {
    if (level_ >= LogLevel::Warn) err_ << "warning: " << message << '\n';
  }
  void info(const std::string& message) const {
    if (level_ >= LogLevel::Info) err_ << message << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

/// Config file, then environment, then flags.
RunConfig resolve_config(const GlobalFlags& flags) {
  RunConfig cfg = flags.config.empty() ? RunConfig{} : load_run_config(flags.config);
  apply_env(cfg);
  if (flags.mock) cfg.mock = true;
  if (flags.seed) cfg.pipeline.seed = *flags.seed;
  set_network_allowed(!cfg.mock);
  return cfg;
}

LabelScheme scheme_for(const RunConfig& cfg, const std::string& scheme_flag) {
  if (!scheme_flag.empty()) return resolve_scheme(scheme_flag, fs::current_path());
  if (cfg.dataset) return cfg.dataset->scheme;
  return *builtin_scheme("scifact");
}

std::vector<ClaimCondition> conditions_for(const std::string& text, ClaimCondition fallback, bool allow_both) {
  if (text.empty()) return {fallback};
  if (text == "both" && allow_both) return {ClaimCondition::OriginalOnly, ClaimCondition::OriginalPlusNegated};
  if (auto c = parse_condition(text)) return {*c};
  throw UsageError("unknown condition '" + text + "' (expected original, original+negated" +
                   (allow_both ? ", both)" : ")"));
}

std::string fixed4(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", x);
  return buffer;
}

std::string pad(std::string text, size_t width) {
  if (text.size() < width) text.resize(width, ' ');
  return text;
}

// ---------------------------------------------------------------------------

int cmd_index(const GlobalFlags& flags, const std::string& corpus, std::string out_path, std::ostream& out,
              const Logger& log) {
  if (out_path.empty()) out_path = flags.out;
  if (out_path.empty()) throw UsageError("index needs an output directory (positional or --out)");
  if (!fs::exists(corpus)) throw FileMissing("corpus not found: " + corpus);
  auto build = build_local_index(corpus);
  for (const auto& issue : build.issues) {
    log.warn(issue.file + ":" + std::to_string(issue.line) + ": " + issue.message);
  }
  build.index.save(out_path);
  if (flags.json) {
    out << json{{"documents", build.index.documents().size()},
                {"terms", build.index.term_count()},
                {"skipped", build.issues.size()},
                {"out", out_path}}
               .dump()
        << '\n';
  } else {
    out << "indexed " << build.index.documents().size() << " documents, " << build.index.term_count()
        << " terms -> " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_negate(const GlobalFlags& flags, const std::string& claim_text, std::ostream& out) {
  const RunConfig cfg = resolve_config(flags);
  const auto negator = build_negation_provider(cfg);
  ClaimPair claim{"cli", claim_text, std::nullopt, std::nullopt};
  std::string origin = negator->identity();
  ClaimPair negated;
  try {
    negated = negate_claim(claim, *negator, /*fallback=*/false);
  } catch (const ProviderUnavailable&) {
    negated = claim;
    negated.negated_text = rule_based_negate(claim_text);
    origin = "rule-based fallback";
  }
  if (flags.json) {
    out << json{{"claim", claim_text}, {"negation", *negated.negated_text}, {"provider", origin}}.dump() << '\n';
  } else {
    out << *negated.negated_text << '\n';
  }
  return kExitOk;
}

int cmd_verify(const GlobalFlags& flags, const std::string& claim_text, const std::string& claim_id,
               const std::string& scheme_flag, std::ostream& out) {
  const auto condition = conditions_for(flags.condition, ClaimCondition::OriginalPlusNegated, false).front();
  const RunConfig cfg = resolve_config(flags);
  const LabelScheme scheme = scheme_for(cfg, scheme_flag);
  Providers providers = build_providers(cfg, flags.sources);
  ClaimOptions options{condition, cfg.pipeline, verdict_template(cfg)};
  const ClaimTrace trace = verify_claim(ClaimPair{claim_id, claim_text, std::nullopt, std::nullopt}, providers,
                                        scheme, options);
  if (flags.json) {
    out << to_json(trace).dump() << '\n';
  } else {
    out << render_trace(trace);
  }
  return kExitOk;
}

int cmd_evaluate(const GlobalFlags& flags, const std::string& dataset_path, const std::string& scheme_flag,
                 std::ostream& out, const Logger& log) {
  const auto conditions = flags.condition.empty()
                              ? std::vector{ClaimCondition::OriginalOnly, ClaimCondition::OriginalPlusNegated}
                              : conditions_for(flags.condition, ClaimCondition::OriginalPlusNegated, true);
  const RunConfig cfg = resolve_config(flags);

  std::optional<DatasetDescriptor> dataset = cfg.dataset;
  if (!dataset_path.empty()) {
    json spec = {{"path", fs::absolute(dataset_path).string()}};
    if (!scheme_flag.empty()) spec["scheme"] = scheme_flag;
    else if (cfg.dataset) spec["scheme"] = to_json(cfg.dataset->scheme);
    dataset = descriptor_from_json(spec, fs::current_path());
  } else if (dataset && !scheme_flag.empty()) {
    dataset->scheme = resolve_scheme(scheme_flag, fs::current_path());
  }
  if (!dataset) throw UsageError("evaluate needs a dataset (positional path or 'dataset' in --config)");
  if (!fs::is_regular_file(dataset->path)) throw FileMissing("dataset not found: " + dataset->path.string());

  Providers providers = build_providers(cfg, flags.sources);
  const fs::path out_root = flags.out.empty() ? fs::path("runs") : fs::path(flags.out);
  const std::string prompt = verdict_template(cfg);

  json report = json::object();
  for (const auto condition : conditions) {
    ExperimentPlan plan{*dataset, condition, flags.limit, cfg.pipeline, prompt};
    RunOptions options;
    options.log = [&log](const std::string& message) {
      if (!message.empty() && message.front() == '[') {
        log.info(message);
      } else {
        log.warn(message);
      }
    };
    const fs::path dir = out_root / to_string(condition);
    log.info("condition " + to_string(condition) + " -> " + dir.string());
    const RunSummary summary = run_experiment(plan, providers, dir, options);
    if (!summary.complete) return kExitFailure;
    report[to_string(condition)] = metrics_json(plan, summary);

    if (!flags.json) {
      out << "condition " << to_string(condition) << " (" << summary.claims << " claims, dataset "
          << dataset->name << ", scheme " << dataset->scheme.name() << ") -> " << dir.string() << '\n';
      out << "  " << pad("source", 12) << pad("accuracy", 10) << pad("precision", 11) << pad("recall", 8)
          << pad("macro-F1", 10) << "abstained\n";
      for (const auto& m : summary.metrics) {
        out << "  " << pad(m.source, 12) << pad(fixed4(m.report.accuracy), 10) << pad(fixed4(m.report.precision), 11)
            << pad(fixed4(m.report.recall), 8) << pad(fixed4(m.report.f1), 10) << m.abstentions << '\n';
      }
    }
  }
  if (flags.json) out << report.dump() << '\n';
  return kExitOk;
}

int cmd_analyze(const GlobalFlags& flags, const std::string& run_dir, bool svg, std::ostream& out,
                const Logger& log) {
  const fs::path csv = fs::path(run_dir) / "confidences.csv";
  if (!fs::is_regular_file(csv)) throw FileMissing("no confidences.csv in " + run_dir);
  const fs::path target = flags.out.empty() ? fs::path(run_dir) : fs::path(flags.out);
  fs::create_directories(target);

  const auto rows = read_confidences_csv(csv);
  std::vector<std::string> skipped;
  const auto curves = kde_by_regime(rows, 512, &skipped);
  for (const auto& s : skipped) log.warn("kde skipped " + s);
  write_kde_csv(target / "kde.csv", curves);
  if (svg) write_kde_svg(target / "kde.svg", curves);

  if (flags.json) {
    json groups = json::array();
    for (const auto& c : curves) {
      groups.push_back({{"regime", c.regime}, {"source", c.source}, {"n", c.curve.n_samples},
                        {"bandwidth", c.curve.bandwidth}});
    }
    out << json{{"curves", groups}, {"skipped", skipped}, {"out", target.string()}}.dump() << '\n';
  } else {
    out << "wrote " << curves.size() << " density curves to " << (target / "kde.csv").string();
    if (svg) out << " and kde.svg";
    out << '\n';
    for (const auto& c : curves) {
      out << "  " << pad(c.regime, 6) << pad(c.source, 12) << "n=" << c.curve.n_samples
          << "  bandwidth=" << fixed4(c.curve.bandwidth) << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Claim verification with dual-perspective evidence retrieval", "claimcheck"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON run configuration");
  app.add_flag("--mock", flags.mock, "Offline providers only; any remote provider is an error");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--sources", flags.sources, "Comma-separated source names to use")->delimiter(',');
  app.add_option("--condition", flags.condition, "original | original+negated | both (evaluate)");
  app.add_option("--limit", flags.limit, "Evaluate a seeded random subset of this many claims");
  app.add_option("--seed", flags.seed, "Seed for subset selection");
  app.add_flag("--json", flags.json, "Machine-readable output on stdout");
  app.add_option("--log-level", flags.log_level, "error | warn | info")
      ->check(CLI::IsMember({"error", "warn", "info"}));

  auto* index = app.add_subcommand("index", "Build a BM25 index from a JSONL corpus");
  std::string corpus_path, index_out;
  index->add_option("corpus", corpus_path, "Corpus file or directory of *.jsonl")->required();
  index->add_option("out", index_out, "Index directory (defaults to --out)");

  auto* negate = app.add_subcommand("negate", "Print the negation of a claim");
  std::string negate_text;
  negate->add_option("claim", negate_text, "Claim text")->required();

  auto* verify = app.add_subcommand("verify", "Verify one claim end to end");
  std::string verify_text, verify_id = "cli", verify_scheme;
  verify->add_option("claim", verify_text, "Claim text")->required();
  verify->add_option("--id", verify_id, "Claim id (keys mock fixtures)");
  verify->add_option("--scheme", verify_scheme, "Label scheme name or file");

  auto* evaluate = app.add_subcommand("evaluate", "Run a dataset through the pipeline and score it");
  std::string dataset_path, evaluate_scheme;
  evaluate->add_option("dataset", dataset_path, "Claims JSONL (defaults to the config's dataset)");
  evaluate->add_option("--scheme", evaluate_scheme, "Label scheme name or file");

  auto* analyze = app.add_subcommand("analyze", "Confidence densities per agreement regime");
  std::string run_dir;
  bool no_svg = false;
  analyze->add_option("run-dir", run_dir, "Run directory containing confidences.csv")->required();
  analyze->add_flag("--no-svg", no_svg, "Skip kde.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    out << app.help("", e.get_name() == "CallForAllHelp" ? CLI::AppFormatMode::All : CLI::AppFormatMode::Normal);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  const LogLevel level = flags.log_level == "error" ? LogLevel::Error
                         : flags.log_level == "warn" ? LogLevel::Warn
                                                     : LogLevel::Info;
  const Logger log(err, level);

  try {
    if (*index) return cmd_index(flags, corpus_path, index_out, out, log);
    if (*negate) return cmd_negate(flags, negate_text, out);
    if (*verify) return cmd_verify(flags, verify_text, verify_id, verify_scheme, out);
    if (*evaluate) return cmd_evaluate(flags, dataset_path, evaluate_scheme, out, log);
    if (*analyze) return cmd_analyze(flags, run_dir, !no_svg, out, log);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FileMissing& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidScheme& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TemplateMissingPlaceholder& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace claimcheck::cli
