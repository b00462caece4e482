#include <doctest.h>

#include <random>
#include <set>

#include "claimcheck/aggregation.hpp"
#include "claimcheck/embedding.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/selection.hpp"
#include "claimcheck/text.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace claimcheck;

namespace {

EvidenceSentence ev(const std::string& text, const std::string& doc = "d", Polarity p = Polarity::FromClaim,
                    SourceKind source = SourceKind::wikipedia(), double sim = 0.0) {
  return make_evidence(text, std::move(source), doc, p, sim);
}

std::vector<std::string> texts(const std::vector<EvidenceSentence>& items) {
  std::vector<std::string> out;
  for (const auto& e : items) out.push_back(e.text);
  return out;
}

// Sentences from a small pool with random case and punctuation, so that
// distinct raw strings often share a normalized form.
std::vector<EvidenceSentence> random_list(std::mt19937_64& rng, Polarity polarity) {
  static const std::vector<std::string> pool = {"drug x lowers risk", "the sky is blue", "aspirin helps",
                                                "salt raises pressure", "cats are mammals", "it rained",
                                                "vitamin c cures colds", "smoking kills"};
  std::uniform_int_distribution<size_t> len(0, 6), pick(0, pool.size() - 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<EvidenceSentence> out;
  for (size_t n = len(rng); n > 0; --n) {
    std::string s = pool[pick(rng)];
    if (coin(rng)) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    if (coin(rng)) s += ".";
    if (coin(rng)) s = "\"" + s + "\"";
    out.push_back(ev(s, "doc" + std::to_string(pick(rng)), polarity));
  }
  return out;
}

std::vector<RetrievedDocument> docs_of(const std::vector<std::pair<std::string, std::string>>& id_body) {
  std::vector<RetrievedDocument> out;
  int rank = 1;
  for (const auto& [id, body] : id_body) out.push_back({id, SourceKind::pubmed(), "", body, rank++, 0.0});
  return out;
}

class ThrowingEmbedder final : public EmbeddingProvider {
 public:
  std::vector<Embedding> embed(std::span<const std::string> texts) override {
    for (const auto& t : texts)
      if (t.find("boom") != std::string::npos) throw ProviderUnavailable("boom");
    return inner_.embed(texts);
  }
  std::string identity() const override { return "throwing"; }

 private:
  HashedBowEmbedder inner_;
};

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("split_sentences examples") {
    CHECK(split_sentences("A cat. A dog.") == std::vector<std::string>{"A cat.", "A dog."});
    CHECK(split_sentences("").empty());
    CHECK(split_sentences("J. Smith wrote it. It sold.") == std::vector<std::string>{"J. Smith wrote it.", "It sold."});
    // "No" is shorter than three characters and is dropped.
    CHECK(split_sentences("Really?! Yes. No") == std::vector<std::string>{"Really?!", "Yes."});
    CHECK(split_sentences("Ok. Hi. Fine!") == std::vector<std::string>{"Ok.", "Hi.", "Fine!"});
    CHECK(split_sentences("Dose was 2.5 mg daily. It worked.") ==
          std::vector<std::string>{"Dose was 2.5 mg daily.", "It worked."});
    CHECK(split_sentences("  no terminator here  ") == std::vector<std::string>{"no terminator here"});
  }

  TEST_CASE("select_evidence on no documents") {
    HashedBowEmbedder embedder;
    const auto result = select_evidence("claim", Polarity::FromClaim, {}, embedder, PipelineConfig{});
    CHECK(result.sentences.empty());
    CHECK(result.failures.empty());
  }

  TEST_CASE("a sentence identical to the query has similarity 1") {
    HashedBowEmbedder embedder;
    const auto docs = docs_of({{"d1", "Drug X increases blood pressure."}});
    const auto result = select_evidence("Drug X increases blood pressure.", Polarity::FromNegation, docs, embedder, {});
    REQUIRE(result.sentences.size() == 1);
    CHECK(result.sentences[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.sentences[0].polarity == Polarity::FromNegation);
    CHECK(result.sentences[0].source == SourceKind::pubmed());
  }

  TEST_CASE("per-document argmax matches brute force") {
    HashedBowEmbedder embedder;
    const std::string query = "aspirin lowers heart attack risk";
    const auto docs = docs_of({{"d1", "Aspirin is old. Aspirin lowers heart attack risk in trials. Dogs bark."},
                               {"d2", "Salt raises pressure. Heart attack risk falls with aspirin. Rain falls."}});
    PipelineConfig cfg;
    cfg.sentences_per_doc = 1;
    const auto result = select_evidence(query, Polarity::FromClaim, docs, embedder, cfg);
    REQUIRE(result.sentences.size() == 2);
    const auto qv = embedder.embed_one(query);
    for (size_t d = 0; d < docs.size(); ++d) {
      std::string best;
      double best_sim = -2;
      for (const auto& s : split_sentences(docs[d].body)) {
        const double sim = cosine_similarity(qv, embedder.embed_one(s));
        if (sim > best_sim) best_sim = sim, best = s;
      }
      CHECK(result.sentences[d].text == best);
      CHECK(result.sentences[d].doc_id == docs[d].doc_id);
      CHECK(result.sentences[d].similarity == doctest::Approx(best_sim).epsilon(1e-12));
    }
  }

  TEST_CASE("selection invariants on random documents") {
    std::mt19937_64 rng(23);
    const std::vector<std::string> words = {"drug", "x", "lowers", "raises", "risk", "blood", "pressure", "cats", "the"};
    std::uniform_int_distribution<size_t> w(0, words.size() - 1), sl(1, 6), ns(0, 5), nd(0, 7), cnt(1, 4);
    HashedBowEmbedder embedder;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::pair<std::string, std::string>> raw;
      for (size_t d = nd(rng); d > 0; --d) {
        std::string body;
        for (size_t s = ns(rng); s > 0; --s) {
          for (size_t k = sl(rng); k > 0; --k) body += words[w(rng)] + " ";
          body += "end. ";
        }
        raw.emplace_back("doc" + std::to_string(raw.size()), body);
      }
      const auto docs = docs_of(raw);
      PipelineConfig cfg;
      cfg.retrieval_depth = 8;
      cfg.selection_docs = static_cast<int>(cnt(rng));
      cfg.sentences_per_doc = static_cast<int>(cnt(rng));
      const std::string query = words[w(rng)] + " " + words[w(rng)];
      const auto result = select_evidence(query, Polarity::FromClaim, docs, embedder, cfg);
      CHECK(result.sentences.size() <= size_t(cfg.selection_docs * cfg.sentences_per_doc));
      std::set<std::string> allowed;
      for (size_t d = 0; d < docs.size() && d < size_t(cfg.selection_docs); ++d) allowed.insert(docs[d].doc_id);
      for (const auto& e : result.sentences) {
        CHECK(allowed.count(e.doc_id) == 1);
        CHECK(e.similarity >= -1.0 - 1e-9);
        CHECK(e.similarity <= 1.0 + 1e-9);
        CHECK(e.normalized == normalize_sentence(e.text));
      }
    }
  }

  TEST_CASE("duplicate documents change provenance only") {
    HashedBowEmbedder embedder;
    const std::string body = "Aspirin lowers risk. Cats sleep. Rain is wet.";
    const auto once = docs_of({{"a", body}});
    const auto twice = docs_of({{"a", body}, {"b", body}});
    PipelineConfig cfg;
    const auto r1 = select_evidence("aspirin risk", Polarity::FromClaim, once, embedder, cfg).sentences;
    const auto r2 = select_evidence("aspirin risk", Polarity::FromClaim, twice, embedder, cfg).sentences;
    REQUIRE(r2.size() == 2 * r1.size());
    for (size_t i = 0; i < r1.size(); ++i) {
      CHECK(r2[i].text == r1[i].text);
      CHECK(r2[r1.size() + i].text == r1[i].text);
      CHECK(r2[r1.size() + i].doc_id == "b");
    }
  }

  TEST_CASE("embedding failure affects only that document") {
    ThrowingEmbedder embedder;
    const auto docs = docs_of({{"bad", "This one goes boom."}, {"good", "Aspirin lowers risk."}});
    const auto result = select_evidence("aspirin", Polarity::FromClaim, docs, embedder, {});
    REQUIRE(result.sentences.size() == 1);
    CHECK(result.sentences[0].doc_id == "good");
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].rfind("bad:", 0) == 0);
  }

  TEST_CASE("only the first M documents are mined") {
    HashedBowEmbedder embedder;
    const auto docs = docs_of({{"1", "Aspirin one."}, {"2", "Aspirin two."}, {"3", "Aspirin three."}});
    PipelineConfig cfg;
    cfg.selection_docs = 2;
    const auto result = select_evidence("aspirin", Polarity::FromClaim, docs, embedder, cfg);
    CHECK(texts(result.sentences) == std::vector<std::string>{"Aspirin one.", "Aspirin two."});
  }
}

TEST_SUITE("aggregation") {
  TEST_CASE("symmetric difference examples") {
    const std::vector<EvidenceSentence> a = {ev("A a."), ev("B b.")};
    const std::vector<EvidenceSentence> b = {ev("b b"), ev("C c.")};
    CHECK(texts(symmetric_difference_dedup(a, b)) == std::vector<std::string>{"A a.", "C c."});
    CHECK(symmetric_difference_dedup(a, a).empty());
    const std::vector<EvidenceSentence> c = {ev("D d."), ev("E e.")};
    CHECK(texts(symmetric_difference_dedup(a, c)) == std::vector<std::string>{"A a.", "B b.", "D d.", "E e."});
    CHECK(symmetric_difference_dedup({}, {}).empty());
  }

  TEST_CASE("symmetric difference algebra on random lists") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto a = random_list(rng, Polarity::FromClaim);
      const auto b = random_list(rng, Polarity::FromNegation);
      CHECK(symmetric_difference_dedup(a, a).empty());
      CHECK(symmetric_difference_dedup(a, {}) == dedup_by_normalized(a));

      const auto na = oracle::normalized_set(a), nb = oracle::normalized_set(b);
      const auto out = symmetric_difference_dedup(a, b);
      std::set<std::string> expected;
      std::set_symmetric_difference(na.begin(), na.end(), nb.begin(), nb.end(),
                                    std::inserter(expected, expected.end()));
      const auto got = oracle::normalized_set(out);
      CHECK(got == expected);
      CHECK(got.size() == out.size());
      // Positives precede negatives.
      bool seen_negative = false;
      for (const auto& e : out) {
        if (e.polarity == Polarity::FromNegation) seen_negative = true;
        else CHECK_FALSE(seen_negative);
      }
    }
  }

  TEST_CASE("merge fuses [SEP] segments from one document") {
    const std::vector<EvidenceSentence> in = {ev("the drug [SEP]", "d", Polarity::FromClaim, SourceKind::pubmed(), 0.3),
                                              ev("reduces risk.", "d", Polarity::FromClaim, SourceKind::pubmed(), 0.7)};
    const auto out = merge_segments(in);
    REQUIRE(out.size() == 1);
    CHECK(out[0].text == "the drug reduces risk.");
    CHECK(out[0].similarity == 0.7);
    CHECK(out[0].normalized == "the drug reduces risk");

    const std::vector<EvidenceSentence> other = {ev("First one.", "d1"), ev("second one.", "d2")};
    CHECK(merge_segments(other) == other);
    CHECK(merge_segments({}).empty());
  }

  TEST_CASE("dangling-segment heuristic can be disabled") {
    const std::vector<EvidenceSentence> in = {ev("Patients who took it", "d"), ev("recovered faster.", "d")};
    CHECK(texts(merge_segments(in)) == std::vector<std::string>{"Patients who took it recovered faster."});
    CHECK(merge_segments(in, false) == in);
    const std::vector<EvidenceSentence> chain = {ev("a [SEP]", "d"), ev("b [SEP]", "d"), ev("c.", "d")};
    CHECK(texts(merge_segments(chain, false)) == std::vector<std::string>{"a b c."});
  }

  TEST_CASE("rank_and_truncate keeps the best p by brute force") {
    HashedBowEmbedder embedder;
    const std::string claim = "aspirin lowers heart attack risk";
    const std::vector<EvidenceSentence> candidates = {
        ev("Cats sleep a lot."), ev("Aspirin lowers risk.", "d", Polarity::FromNegation),
        ev("Heart attack risk is lower with aspirin."), ev("Salt raises pressure."), ev("Aspirin is a drug.")};
    const auto out = rank_and_truncate(candidates, claim, embedder, 2);
    REQUIRE(out.size() == 2);
    std::vector<std::pair<double, size_t>> scored;
    const auto cv = embedder.embed_one(claim);
    for (size_t i = 0; i < candidates.size(); ++i)
      scored.emplace_back(cosine_similarity(cv, embedder.embed_one(candidates[i].text)), i);
    std::stable_sort(scored.begin(), scored.end(), [](auto& x, auto& y) { return x.first > y.first; });
    CHECK(out[0].text == candidates[scored[0].second].text);
    CHECK(out[1].text == candidates[scored[1].second].text);
    CHECK(out[0].similarity == doctest::Approx(scored[0].first).epsilon(1e-12));
    CHECK(out[0].similarity >= out[1].similarity);

    const auto all = rank_and_truncate(candidates, claim, embedder, 10);
    CHECK(all.size() == candidates.size());
    for (size_t i = 1; i < all.size(); ++i) CHECK(all[i].similarity <= all[i - 1].similarity);
    CHECK(rank_and_truncate({}, claim, embedder, 3).empty());
  }

  TEST_CASE("rank ties prefer claim-side evidence") {
    HashedBowEmbedder embedder;
    const std::vector<EvidenceSentence> candidates = {ev("blue sky", "1", Polarity::FromNegation),
                                                      ev("sky blue", "2", Polarity::FromClaim)};
    const auto out = rank_and_truncate(candidates, "the sky is blue", embedder, 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0].polarity == Polarity::FromClaim);
  }

  TEST_CASE("ranking failures") {
    ThrowingEmbedder embedder;
    CHECK_THROWS_AS(rank_and_truncate(std::vector<EvidenceSentence>{ev("boom now")}, "claim", embedder, 2),
                    RankingFailed);
    HashedBowEmbedder bow;
    CHECK_THROWS_AS(rank_and_truncate(std::vector<EvidenceSentence>{ev("a b c")}, "...", bow, 2), RankingFailed);
  }

  TEST_CASE("aggregate_sources union examples") {
    EvidenceBundle w{"c", SourceKind::wikipedia(), {}, {}, {}, {ev("A a."), ev("B b.")}};
    EvidenceBundle p{"c", SourceKind::pubmed(), {}, {}, {}, {ev("b b", "x", Polarity::FromClaim, SourceKind::pubmed())}};
    const auto one = aggregate_sources("c", {{w.source, w}});
    CHECK(one.sentences == w.final);
    const auto same = aggregate_sources("c", {{w.source, w}, {SourceKind::web(), {"c", SourceKind::web(), {}, {}, {}, w.final}}});
    CHECK(same.sentences.size() == 2);
    const auto both = aggregate_sources("c", {{p.source, p}, {w.source, w}});
    REQUIRE(both.sentences.size() == 2);
    // Encyclopedia first regardless of insertion order, so it keeps provenance of "b b".
    CHECK(both.sentences[1].source == SourceKind::wikipedia());
    CHECK(both.per_source.size() == 2);
  }

  TEST_CASE("aggregate_sources equals the brute-force union") {
    std::mt19937_64 rng(41);
    const std::vector<SourceKind> kinds = {SourceKind::web(), SourceKind::pubmed(), SourceKind::wikipedia()};
    for (int trial = 0; trial < 500; ++trial) {
      std::map<SourceKind, EvidenceBundle> bundles;
      std::vector<std::vector<EvidenceSentence>> finals;
      size_t total = 0;
      for (const auto& k : kinds) {
        auto final = dedup_by_normalized(random_list(rng, Polarity::FromClaim));
        total += final.size();
        finals.push_back(final);
        bundles[k] = EvidenceBundle{"c", k, {}, {}, {}, final};
      }
      const auto agg = aggregate_sources("c", bundles);
      CHECK(oracle::normalized_set(agg.sentences) == oracle::normalized_union(finals));
      CHECK(agg.sentences.size() == oracle::normalized_union(finals).size());
      CHECK(agg.sentences.size() <= total);
    }
  }

  TEST_CASE("build_bundle stages") {
    HashedBowEmbedder embedder;
    PipelineConfig cfg;
    cfg.final_top_p = 2;
    std::vector<EvidenceSentence> pos = {ev("Shared sentence."), ev("Aspirin lowers risk."), ev("Aspirin helps hearts.")};
    std::vector<EvidenceSentence> neg = {ev("shared sentence", "d", Polarity::FromNegation),
                                         ev("Aspirin does not lower risk.", "d", Polarity::FromNegation)};
    const auto dual = build_bundle("c", SourceKind::wikipedia(), pos, neg, true, "aspirin lowers risk", embedder, cfg);
    CHECK(dual.candidates.size() == 3);
    CHECK(dual.final.size() == 2);
    const auto single = build_bundle("c", SourceKind::wikipedia(), pos, {}, false, "aspirin lowers risk", embedder, cfg);
    CHECK(single.candidates.size() == 3);
    CHECK(build_bundle("c", SourceKind::wikipedia(), pos, neg, true, "aspirin lowers risk", embedder, cfg) == dual);
  }
}
