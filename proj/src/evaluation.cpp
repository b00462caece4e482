#include "claimcheck/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

LabelScheme scheme_from_json(const json& j) {
  try {
    std::vector<char> letters;
    if (j.contains("letters")) {
      const auto& l = j.at("letters");
      if (l.is_string()) {
        const auto s = l.get<std::string>();
        letters.assign(s.begin(), s.end());
      } else {
        for (const auto& item : l) {
          const auto s = item.get<std::string>();
          if (s.size() != 1) throw InvalidScheme("option letters must be single characters");
          letters.push_back(s.front());
        }
      }
    }
    return LabelScheme(j.at("name").get<std::string>(), j.at("labels").get<std::vector<std::string>>(),
                       std::move(letters));
  } catch (const json::exception& e) {
    throw InvalidScheme(std::string("malformed scheme: ") + e.what());
  }
}

json to_json(const LabelScheme& scheme) {
  return {{"name", scheme.name()},
          {"labels", scheme.labels()},
          {"letters", std::string(scheme.option_letters().begin(), scheme.option_letters().end())}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissing("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

LabelScheme resolve_scheme(const std::string& name_or_path, const fs::path& base) {
  if (auto builtin = builtin_scheme(name_or_path)) return *builtin;
  fs::path path = name_or_path;
  if (path.is_relative() && !base.empty()) path = base / path;
  if (!fs::is_regular_file(path)) {
    throw ConfigError("unknown label scheme '" + name_or_path + "' (not built in, no such file)");
  }
  auto parsed = json::parse(read_file(path), nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("scheme file is not valid JSON: " + path.string());
  try {
    return scheme_from_json(parsed);
  } catch (const InvalidScheme& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

DatasetDescriptor descriptor_from_json(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> kKeys = {"name",        "scheme",         "path",         "claim_field",
                                              "label_field", "id_field",       "negation_field", "label_aliases"};
  if (!j.is_object()) throw ConfigError("dataset must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown dataset key '" + key + "'");
  }
  try {
    if (!j.contains("path")) throw ConfigError("dataset needs a 'path'");
    fs::path path = j.at("path").get<std::string>();
    if (path.is_relative()) path = base_dir / path;

    const json scheme_spec = j.value("scheme", json("scifact"));
    LabelScheme scheme = scheme_spec.is_object() ? scheme_from_json(scheme_spec)
                                                 : resolve_scheme(scheme_spec.get<std::string>(), base_dir);
    DatasetDescriptor desc{j.value("name", path.stem().string()), std::move(scheme), path.lexically_normal(),
                           "claim", "label", "id", "", {}};
    desc.claim_field = j.value("claim_field", desc.claim_field);
    desc.label_field = j.value("label_field", desc.label_field);
    desc.id_field = j.value("id_field", desc.id_field);
    desc.negation_field = j.value("negation_field", desc.negation_field);
    if (j.contains("label_aliases")) {
      desc.label_aliases = j.at("label_aliases").get<std::map<std::string, std::string>>();
    }
    return desc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed dataset descriptor: ") + e.what());
  } catch (const InvalidScheme& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const DatasetDescriptor& desc) {
  return {{"name", desc.name},
          {"scheme", to_json(desc.scheme)},
          {"path", desc.path.generic_string()},
          {"claim_field", desc.claim_field},
          {"label_field", desc.label_field},
          {"id_field", desc.id_field},
          {"negation_field", desc.negation_field},
          {"label_aliases", desc.label_aliases}};
}

DatasetLoad load_dataset(const DatasetDescriptor& desc) {
  if (!fs::is_regular_file(desc.path)) throw FileMissing("dataset not found: " + desc.path.string());
  std::ifstream in(desc.path, std::ios::binary);
  if (!in) throw FileMissing("cannot read dataset: " + desc.path.string());

  DatasetLoad load;
  std::set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  auto reject = [&](std::string reason) { load.rejected.push_back({line_no, std::move(reason)}); };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      reject("not a JSON object");
      continue;
    }

    auto claim_it = record.find(desc.claim_field);
    if (claim_it == record.end() || !claim_it->is_string() || trim(claim_it->get<std::string>()).empty()) {
      reject("missing or empty '" + desc.claim_field + "'");
      continue;
    }

    auto label_it = record.find(desc.label_field);
    if (label_it == record.end() || !label_it->is_string()) {
      reject("missing '" + desc.label_field + "'");
      continue;
    }
    std::string label = label_it->get<std::string>();
    if (auto alias = desc.label_aliases.find(label); alias != desc.label_aliases.end()) label = alias->second;
    if (!desc.scheme.index_of_label(label)) {
      reject("label '" + label + "' is not in scheme '" + desc.scheme.name() + "'");
      continue;
    }

    std::string id = std::to_string(line_no);
    if (auto id_it = record.find(desc.id_field); id_it != record.end()) {
      if (id_it->is_string()) {
        id = id_it->get<std::string>();
      } else if (id_it->is_number_integer()) {
        id = id_it->dump();
      } else {
        reject("'" + desc.id_field + "' must be a string or integer");
        continue;
      }
    }
    if (!seen_ids.insert(id).second) {
      reject("duplicate id '" + id + "'");
      continue;
    }

    ClaimPair claim{id, claim_it->get<std::string>(), std::nullopt, label};
    if (!desc.negation_field.empty()) {
      auto neg_it = record.find(desc.negation_field);
      if (neg_it != record.end() && neg_it->is_string() && !trim(neg_it->get<std::string>()).empty()) {
        claim.negated_text = neg_it->get<std::string>();
      }
    }
    try {
      validate(claim);
    } catch (const InvalidClaim& e) {
      reject(e.what());
      continue;
    }
    load.claims.push_back(std::move(claim));
  }

  if (load.claims.empty()) {
    throw EmptyDataset("no valid claims in " + desc.path.string() + " (" + std::to_string(load.rejected.size()) +
                       " rejected)");
  }
  return load;
}

std::vector<size_t> seeded_permutation(size_t n, std::uint64_t seed) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  auto bounded = [&rng](std::uint64_t range) {
    // Reject the short tail so x % range is uniform.
    const std::uint64_t threshold = (0 - range) % range;
    for (;;) {
      const std::uint64_t x = rng();
      if (x >= threshold) return x % range;
    }
  };
  for (size_t i = n; i > 1; --i) {
    const auto j = static_cast<size_t>(bounded(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<ClaimPair> select_claims(const std::vector<ClaimPair>& claims, std::optional<size_t> limit,
                                     std::uint64_t seed) {
  if (!limit || *limit >= claims.size()) return claims;
  auto order = seeded_permutation(claims.size(), seed);
  order.resize(*limit);
  std::sort(order.begin(), order.end());
  std::vector<ClaimPair> out;
  out.reserve(order.size());
  for (size_t i : order) out.push_back(claims[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string trace_file_name(const std::string& claim_id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char ch : claim_id) {
    if (std::isalnum(ch) || ch == '-' || ch == '_' || (ch == '.' && !out.empty())) {
      out.push_back(static_cast<char>(ch));
    } else {
      out.push_back('%');
      out.push_back(kHex[ch >> 4]);
      out.push_back(kHex[ch & 0x0F]);
    }
  }
  return out + ".json";
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

json pipeline_json(const PipelineConfig& cfg) {
  return {{"retrieval_depth", cfg.retrieval_depth},
          {"selection_docs", cfg.selection_docs},
          {"sentences_per_doc", cfg.sentences_per_doc},
          {"final_top_p", cfg.final_top_p},
          {"seed", cfg.seed},
          {"merge_heuristic", cfg.merge_heuristic},
          {"logprob_floor", cfg.logprob_floor}};
}

bool trace_matches(const ClaimTrace& trace, const ClaimPair& claim, ClaimCondition condition,
                   const std::vector<std::string>& source_names) {
  if (trace.claim.id != claim.id || trace.claim.text != claim.text || trace.claim.gold_label != claim.gold_label) {
    return false;
  }
  if (trace.condition != condition || trace.source_names() != source_names) return false;
  if (condition == ClaimCondition::OriginalPlusNegated && claim.negated_text &&
      trace.claim.negated_text != claim.negated_text) {
    return false;
  }
  return true;
}

std::optional<ClaimTrace> load_trace(const fs::path& path) {
  if (!fs::is_regular_file(path)) return std::nullopt;
  auto parsed = json::parse(read_file(path), nullptr, false);
  if (parsed.is_discarded()) return std::nullopt;
  try {
    return trace_from_json(parsed);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

json run_manifest(const ExperimentPlan& plan, const Providers& providers, const std::vector<ClaimPair>& claims,
                  size_t rejected_records) {
  json sources = json::array();
  for (const auto& s : providers.sources) {
    sources.push_back({{"name", s->kind().name}, {"family", to_string(s->kind().family)}, {"identity", s->identity()}});
  }
  json claim_ids = json::array();
  for (const auto& c : claims) claim_ids.push_back(c.id);
  const bool dual = plan.condition == ClaimCondition::OriginalPlusNegated;
  return {{"dataset", to_json(plan.dataset)},
          {"condition", to_string(plan.condition)},
          {"limit", plan.limit ? json(*plan.limit) : json(nullptr)},
          {"pipeline", pipeline_json(plan.cfg)},
          {"prompt_template", plan.prompt_template},
          {"sources", sources},
          {"providers",
           {{"negation", dual && providers.negation ? providers.negation->identity() : "unused"},
            {"embedding", providers.embedder->identity()},
            {"verdict", providers.verdict->identity()}}},
          {"claims", claim_ids},
          {"rejected_records", rejected_records}};
}

json metrics_json(const ExperimentPlan& plan, const RunSummary& summary) {
  json sources = json::array();
  for (const auto& m : summary.metrics) {
    json entry = to_json(m.report);
    entry["source"] = m.source;
    entry["abstentions"] = m.abstentions;
    sources.push_back(std::move(entry));
  }
  return {{"dataset", plan.dataset.name},
          {"scheme", plan.dataset.scheme.name()},
          {"condition", to_string(plan.condition)},
          {"claims", summary.claims},
          {"rejected_records", summary.rejected_records},
          {"abstentions", summary.abstentions},
          {"failure_notes", summary.failure_notes},
          {"sources", sources}};
}

RunSummary run_experiment(const ExperimentPlan& plan, Providers& providers, const fs::path& out_dir,
                          const RunOptions& options) {
  validate(plan.cfg);
  if (plan.limit && *plan.limit == 0) throw ConfigError("limit must be at least 1");
  if (!providers.embedder || !providers.verdict) throw ConfigError("embedding and verdict providers are required");
  if (providers.sources.empty()) throw ConfigError("no knowledge sources configured");
  normalize_sources(providers.sources);

  std::mutex log_mutex;
  auto log = [&](const std::string& message) {
    if (!options.log) return;
    std::lock_guard lock(log_mutex);
    options.log(message);
  };

  const DatasetLoad load = load_dataset(plan.dataset);
  for (const auto& r : load.rejected) {
    log("dataset line " + std::to_string(r.line) + " rejected: " + r.reason);
  }
  const std::vector<ClaimPair> claims = select_claims(load.claims, plan.limit, plan.cfg.seed);

  RunSummary summary;
  summary.dir = out_dir;
  summary.claims = claims.size();
  summary.rejected_records = load.rejected.size();

  const fs::path traces_dir = out_dir / "traces";
  fs::create_directories(traces_dir);

  const json manifest = run_manifest(plan, providers, claims, load.rejected.size());
  const fs::path manifest_path = out_dir / "run-manifest.json";
  bool reuse = true;
  if (fs::exists(manifest_path)) {
    auto previous = json::parse(read_file(manifest_path), nullptr, false);
    if (previous.is_discarded() || previous != manifest) {
      log("configuration differs from the previous run in " + out_dir.string() + "; recomputing all traces");
      reuse = false;
    }
  }
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");

  std::vector<std::string> source_names;
  for (const auto& s : providers.sources) source_names.push_back(s->kind().name);

  std::vector<size_t> pending;
  for (size_t i = 0; i < claims.size(); ++i) {
    const fs::path path = traces_dir / trace_file_name(claims[i].id);
    if (reuse) {
      auto existing = load_trace(path);
      if (existing && trace_matches(*existing, claims[i], plan.condition, source_names)) {
        ++summary.reused;
        continue;
      }
    }
    pending.push_back(i);
  }
  if (summary.reused > 0) log("reusing " + std::to_string(summary.reused) + " existing traces");

  ClaimOptions claim_options{plan.condition, plan.cfg, plan.prompt_template};
  const size_t budget = std::min(pending.size(), options.max_new_traces.value_or(pending.size()));
  std::atomic<size_t> next{0};
  std::atomic<size_t> computed{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!stop.load()) {
      const size_t k = next.fetch_add(1);
      if (k >= budget) return;
      const ClaimPair& claim = claims[pending[k]];
      try {
        const ClaimTrace trace = verify_claim(claim, providers, plan.dataset.scheme, claim_options);
        write_file_atomic(traces_dir / trace_file_name(claim.id), to_json(trace).dump(2) + "\n");
        const size_t done = computed.fetch_add(1) + 1;
        std::string line = "[" + std::to_string(done) + "/" + std::to_string(budget) + "] " + claim.id;
        if (trace.abstentions() > 0) line += " (" + std::to_string(trace.abstentions()) + " abstentions)";
        log(line);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop.store(true);
      }
    }
  };

  const size_t thread_count = std::min<size_t>(static_cast<size_t>(plan.cfg.workers), budget);
  std::vector<std::thread> threads;
  for (size_t t = 1; t < thread_count; ++t) threads.emplace_back(worker);
  if (thread_count > 0) worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  summary.computed = computed.load();

  if (summary.reused + summary.computed < claims.size()) {
    log("stopped with " + std::to_string(claims.size() - summary.reused - summary.computed) +
        " claims outstanding; rerun to resume");
    return summary;
  }
  summary.complete = true;

  // Aggregates are always rebuilt from the trace files, in claim order, so a
  // resumed run and an uninterrupted one produce the same bytes.
  std::vector<ConfidenceRow> rows;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> predictions;
  std::map<std::string, size_t> abstentions;
  for (const auto& claim : claims) {
    const fs::path path = traces_dir / trace_file_name(claim.id);
    auto trace = load_trace(path);
    if (!trace) throw std::runtime_error("trace unreadable after run: " + path.string());
    std::vector<VeracityVerdict> verdicts;
    for (const auto& st : trace->sources) verdicts.push_back(st.verdict);
    verdicts.push_back(trace->merged);
    const auto profile = build_profile(claim.id, std::span(verdicts).first(trace->sources.size()));
    for (auto& row : confidence_rows(profile, trace->merged)) rows.push_back(std::move(row));
    for (const auto& v : verdicts) {
      predictions[v.source].emplace_back(*claim.gold_label, v.label);
      if (v.abstained) ++abstentions[v.source];
    }
    summary.abstentions += trace->abstentions();
    summary.failure_notes += trace->failures.size();
    for (const auto& st : trace->sources) summary.failure_notes += st.failures.size();
  }

  std::vector<std::string> metric_order = source_names;
  metric_order.emplace_back(kMergedSource);
  for (const auto& name : metric_order) {
    summary.metrics.push_back({name, compute_metrics(predictions[name], plan.dataset.scheme), abstentions[name]});
  }

  write_confidences_csv(out_dir / "confidences.csv", rows);
  std::vector<std::string> skipped;
  const auto curves = kde_by_regime(rows, options.kde_grid_points, &skipped);
  for (const auto& s : skipped) log("kde skipped " + s);
  write_kde_csv(out_dir / "kde.csv", curves);
  write_file_atomic(out_dir / "metrics.json", metrics_json(plan, summary).dump(2) + "\n");
  return summary;
}

}  // namespace claimcheck
