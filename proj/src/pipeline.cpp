#include "claimcheck/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "claimcheck/errors.hpp"
#include "claimcheck/selection.hpp"

namespace claimcheck {

using nlohmann::json;

std::string to_string(ClaimCondition condition) {
  return condition == ClaimCondition::OriginalOnly ? "original" : "original+negated";
}

std::optional<ClaimCondition> parse_condition(std::string_view text) {
  if (text == "original") return ClaimCondition::OriginalOnly;
  if (text == "original+negated") return ClaimCondition::OriginalPlusNegated;
  return std::nullopt;
}

void normalize_sources(std::vector<std::shared_ptr<KnowledgeSource>>& sources) {
  std::stable_sort(sources.begin(), sources.end(),
                   [](const auto& a, const auto& b) { return a->kind() < b->kind(); });
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (s->kind().name == kMergedSource) throw ConfigError("'merged' is reserved and cannot name a source");
    if (!names.insert(s->kind().name).second) throw ConfigError("duplicate source name '" + s->kind().name + "'");
  }
}

size_t ClaimTrace::abstentions() const {
  size_t n = merged.abstained ? 1 : 0;
  for (const auto& s : sources) n += s.verdict.abstained ? 1 : 0;
  return n;
}

std::vector<std::string> ClaimTrace::source_names() const {
  std::vector<std::string> names;
  for (const auto& s : sources) names.push_back(s.source.name);
  return names;
}

VeracityVerdict abstention(const std::string& claim_id, const std::string& source, const LabelScheme& scheme,
                           double floor, std::string note) {
  VeracityVerdict v;
  v.claim_id = claim_id;
  v.source = source;
  v.abstained = true;
  v.confidence = floor;
  v.logits.assign(scheme.size(), floor);
  v.note = std::move(note);
  return v;
}

namespace {

std::vector<RetrievedRef> refs(const std::vector<RetrievedDocument>& docs) {
  std::vector<RetrievedRef> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.doc_id, d.rank, d.score});
  return out;
}

VeracityVerdict verdict_or_abstain(const ClaimPair& claim, const std::string& source,
                                   std::span<const EvidenceSentence> evidence, VerdictProvider& provider,
                                   const LabelScheme& scheme, const ClaimOptions& options) {
  try {
    return predict_verdict(claim, source, evidence, provider, scheme, options.prompt_template,
                           options.cfg.logprob_floor);
  } catch (const ProviderUnavailable& e) {
    return abstention(claim.id, source, scheme, options.cfg.logprob_floor,
                      std::string("verdict provider unavailable: ") + e.what());
  }
}

void append_failures(std::vector<std::string>& into, std::string_view stage, const std::vector<std::string>& items) {
  for (const auto& item : items) into.push_back(std::string(stage) + ": " + item);
}

}  // namespace

ClaimTrace verify_claim(const ClaimPair& input, Providers& providers, const LabelScheme& scheme,
                        const ClaimOptions& options) {
  validate(input);
  const PipelineConfig& cfg = options.cfg;
  const bool dual = options.condition == ClaimCondition::OriginalPlusNegated;

  ClaimTrace trace;
  trace.claim = input;
  trace.condition = options.condition;
  if (!dual) {
    trace.claim.negated_text.reset();
  } else if (input.negated_text) {
    trace.negation_origin = "dataset";
  } else {
    if (!providers.negation) throw ConfigError("condition original+negated needs a negation provider");
    try {
      trace.claim = negate_claim(input, *providers.negation, /*fallback=*/false);
      trace.negation_origin = providers.negation->identity();
    } catch (const ProviderUnavailable& e) {
      trace.claim.negated_text = rule_based_negate(input.text);
      trace.negation_origin = "rule-based fallback";
      trace.failures.push_back(std::string("negation: ") + e.what());
    } catch (const DegenerateNegation& e) {
      trace.claim.negated_text = rule_based_negate(input.text);
      trace.negation_origin = "rule-based fallback";
      trace.failures.push_back(std::string("negation: ") + e.what());
    }
  }
  const ClaimPair& claim = trace.claim;

  std::map<SourceKind, EvidenceBundle> bundles;
  for (const auto& source : providers.sources) {
    SourceTrace st;
    st.source = source->kind();
    EvidenceBundle bundle;
    bundle.claim_id = claim.id;
    bundle.source = st.source;

    std::string failed;
    std::vector<RetrievedDocument> positive_docs;
    std::vector<RetrievedDocument> negative_docs;
    try {
      positive_docs = retrieve_single(claim.text, *source, cfg);
      if (dual) negative_docs = retrieve_single(*claim.negated_text, *source, cfg);
    } catch (const SourceUnavailable& e) {
      failed = std::string("retrieval: ") + e.what();
    }
    st.retrieved_positive = refs(positive_docs);
    st.retrieved_negative = refs(negative_docs);

    if (failed.empty()) {
      auto positive = select_evidence(claim.text, Polarity::FromClaim, positive_docs, *providers.embedder, cfg);
      append_failures(st.failures, "selection", positive.failures);
      SelectionResult negative;
      if (dual) {
        negative = select_evidence(*claim.negated_text, Polarity::FromNegation, negative_docs, *providers.embedder, cfg);
        append_failures(st.failures, "selection", negative.failures);
      }
      try {
        bundle = build_bundle(claim.id, st.source, positive.sentences, negative.sentences, dual, claim.text,
                              *providers.embedder, cfg);
      } catch (const RankingFailed& e) {
        bundle.positive = std::move(positive.sentences);
        bundle.negative = std::move(negative.sentences);
        failed = std::string("ranking: ") + e.what();
      }
    }

    if (failed.empty()) {
      st.verdict = verdict_or_abstain(claim, st.source.name, bundle.final, *providers.verdict, scheme, options);
    } else {
      st.failures.push_back(failed);
      st.verdict = abstention(claim.id, st.source.name, scheme, cfg.logprob_floor, failed);
    }
    bundles.emplace(st.source, std::move(bundle));
    trace.sources.push_back(std::move(st));
  }

  trace.evidence = aggregate_sources(claim.id, std::move(bundles));
  trace.merged = verdict_or_abstain(claim, std::string(kMergedSource), trace.evidence.sentences, *providers.verdict,
                                    scheme, options);

  std::vector<VeracityVerdict> verdicts;
  for (const auto& st : trace.sources) verdicts.push_back(st.verdict);
  const auto profile = build_profile(claim.id, verdicts);
  trace.regime = profile.regime;
  trace.dispersion = profile.dispersion;
  return trace;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json to_json(const SourceKind& kind) { return {{"family", to_string(kind.family)}, {"name", kind.name}}; }

SourceKind kind_from_json(const json& j) {
  auto family = parse_source_family(j.at("family").get<std::string>());
  if (!family) throw std::runtime_error("unknown source family in trace");
  return {*family, j.at("name").get<std::string>()};
}

json to_json(std::span<const EvidenceSentence> items) {
  json out = json::array();
  for (const auto& e : items) out.push_back(to_json(e));
  return out;
}

std::vector<EvidenceSentence> evidence_list(const json& j) {
  std::vector<EvidenceSentence> out;
  for (const auto& e : j) out.push_back(evidence_from_json(e));
  return out;
}

json to_json(const std::vector<RetrievedRef>& items) {
  json out = json::array();
  for (const auto& r : items) out.push_back({{"doc_id", r.doc_id}, {"rank", r.rank}, {"score", r.score}});
  return out;
}

std::vector<RetrievedRef> refs_from_json(const json& j) {
  std::vector<RetrievedRef> out;
  for (const auto& r : j) out.push_back({r.at("doc_id").get<std::string>(), r.at("rank").get<int>(), r.at("score").get<double>()});
  return out;
}

template <typename T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

json to_json(const EvidenceSentence& e) {
  return {{"text", e.text},         {"normalized", e.normalized},           {"source", to_json(e.source)},
          {"doc_id", e.doc_id},     {"polarity", to_string(e.polarity)},    {"similarity", e.similarity}};
}

EvidenceSentence evidence_from_json(const json& j) {
  EvidenceSentence e;
  e.text = j.at("text").get<std::string>();
  e.normalized = j.at("normalized").get<std::string>();
  e.source = kind_from_json(j.at("source"));
  e.doc_id = j.at("doc_id").get<std::string>();
  auto polarity = parse_polarity(j.at("polarity").get<std::string>());
  if (!polarity) throw std::runtime_error("unknown polarity in trace");
  e.polarity = *polarity;
  e.similarity = j.at("similarity").get<double>();
  return e;
}

json to_json(const VeracityVerdict& v) {
  return {{"source", v.source},         {"label", v.label},         {"confidence", v.confidence},
          {"logits", v.logits},         {"abstained", v.abstained}, {"note", v.note}};
}

VeracityVerdict verdict_from_json(const json& j, const std::string& claim_id) {
  VeracityVerdict v;
  v.claim_id = claim_id;
  v.source = j.at("source").get<std::string>();
  v.label = j.at("label").get<std::string>();
  v.confidence = j.at("confidence").get<double>();
  v.logits = j.at("logits").get<std::vector<double>>();
  v.abstained = j.at("abstained").get<bool>();
  v.note = j.at("note").get<std::string>();
  return v;
}

json to_json(const ClaimTrace& t) {
  json claim = {{"id", t.claim.id}, {"text", t.claim.text}};
  claim["negated_text"] = optional_json(t.claim.negated_text);
  claim["gold_label"] = optional_json(t.claim.gold_label);

  json sources = json::array();
  for (const auto& st : t.sources) {
    const auto& bundle = t.evidence.per_source.at(st.source);
    sources.push_back({{"source", to_json(st.source)},
                       {"retrieved_positive", to_json(st.retrieved_positive)},
                       {"retrieved_negative", to_json(st.retrieved_negative)},
                       {"positive", to_json(bundle.positive)},
                       {"negative", to_json(bundle.negative)},
                       {"candidates", to_json(bundle.candidates)},
                       {"final", to_json(bundle.final)},
                       {"verdict", to_json(st.verdict)},
                       {"failures", st.failures}});
  }

  return {{"claim", claim},
          {"condition", to_string(t.condition)},
          {"negation_origin", t.negation_origin},
          {"sources", sources},
          {"aggregated", to_json(t.evidence.sentences)},
          {"merged", to_json(t.merged)},
          {"regime", t.regime ? json(to_string(*t.regime)) : json(nullptr)},
          {"dispersion", optional_json(t.dispersion)},
          {"failures", t.failures}};
}

ClaimTrace trace_from_json(const json& j) {
  try {
    ClaimTrace t;
    const auto& claim = j.at("claim");
    t.claim.id = claim.at("id").get<std::string>();
    t.claim.text = claim.at("text").get<std::string>();
    if (!claim.at("negated_text").is_null()) t.claim.negated_text = claim.at("negated_text").get<std::string>();
    if (!claim.at("gold_label").is_null()) t.claim.gold_label = claim.at("gold_label").get<std::string>();

    auto condition = parse_condition(j.at("condition").get<std::string>());
    if (!condition) throw std::runtime_error("unknown condition");
    t.condition = *condition;
    t.negation_origin = j.at("negation_origin").get<std::string>();

    t.evidence.claim_id = t.claim.id;
    for (const auto& s : j.at("sources")) {
      SourceTrace st;
      st.source = kind_from_json(s.at("source"));
      st.retrieved_positive = refs_from_json(s.at("retrieved_positive"));
      st.retrieved_negative = refs_from_json(s.at("retrieved_negative"));
      st.verdict = verdict_from_json(s.at("verdict"), t.claim.id);
      st.failures = s.at("failures").get<std::vector<std::string>>();
      EvidenceBundle bundle;
      bundle.claim_id = t.claim.id;
      bundle.source = st.source;
      bundle.positive = evidence_list(s.at("positive"));
      bundle.negative = evidence_list(s.at("negative"));
      bundle.candidates = evidence_list(s.at("candidates"));
      bundle.final = evidence_list(s.at("final"));
      t.evidence.per_source.emplace(st.source, std::move(bundle));
      t.sources.push_back(std::move(st));
    }
    t.evidence.sentences = evidence_list(j.at("aggregated"));
    t.merged = verdict_from_json(j.at("merged"), t.claim.id);
    if (!j.at("regime").is_null()) {
      t.regime = parse_regime(j.at("regime").get<std::string>());
      if (!t.regime) throw std::runtime_error("unknown regime");
    }
    if (!j.at("dispersion").is_null()) t.dispersion = j.at("dispersion").get<double>();
    t.failures = j.at("failures").get<std::vector<std::string>>();
    return t;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed trace: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string fixed4(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", x);
  return buffer;
}

std::string verdict_line(const VeracityVerdict& v) {
  std::string line = "  " + v.source;
  line.resize(std::max<size_t>(line.size() + 1, 14), ' ');
  if (v.abstained) return line + "(abstained: " + v.note + ")";
  return line + v.label + "  confidence " + fixed4(v.confidence);
}

}  // namespace

std::string render_trace(const ClaimTrace& t) {
  std::ostringstream out;
  out << "Claim [" << t.claim.id << "]: " << t.claim.text << '\n';
  out << "Condition: " << to_string(t.condition) << '\n';
  if (t.claim.negated_text) out << "Negation (" << t.negation_origin << "): " << *t.claim.negated_text << '\n';
  out << "Evidence (" << t.evidence.sentences.size() << " sentences):\n";
  if (t.evidence.sentences.empty()) out << "  " << kNoEvidenceBlock << '\n';
  for (size_t i = 0; i < t.evidence.sentences.size(); ++i) {
    const auto& e = t.evidence.sentences[i];
    out << "  " << i + 1 << ". [" << e.source.name << ", " << to_string(e.polarity) << "] " << e.text << '\n';
  }
  out << "Verdicts:\n";
  for (const auto& st : t.sources) out << verdict_line(st.verdict) << '\n';
  out << verdict_line(t.merged) << '\n';
  out << "Agreement: " << (t.regime ? to_string(*t.regime) : "n/a")
      << "  Dispersion: " << (t.dispersion ? fixed4(*t.dispersion) : "n/a") << '\n';
  std::vector<std::string> notes = t.failures;
  for (const auto& st : t.sources) {
    for (const auto& f : st.failures) notes.push_back(st.source.name + ": " + f);
  }
  for (const auto& note : notes) out << "Note: " << note << '\n';
  return out.str();
}

}  // namespace claimcheck
