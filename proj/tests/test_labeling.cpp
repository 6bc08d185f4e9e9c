#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "popmine/io.hpp"
#include "popmine/labeling.hpp"
#include "popmine/rng.hpp"
#include "popmine/sentiment.hpp"

using namespace popmine;

namespace {

TopicLabeling random_labeling(Rng& rng, const Taxonomy& taxonomy, int K) {
  TopicLabeling labeling = TopicLabeling::fresh(taxonomy, K);
  for (TopicDecision& d : labeling.topics) {
    switch (uniform_below(rng, 3)) {
      case 0:
        break;  // Unreviewed
      case 1:
        d.status = TopicStatus::Excluded;
        d.reason = uniform_below(rng, 2) ? "not economic" : "not understandable";
        break;
      default: {
        d.status = TopicStatus::Labeled;
        std::size_t n = 1 + uniform_below(rng, 3);
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n; ++i) {
          const std::string& label =
              taxonomy.labels()[uniform_below(rng, taxonomy.size())];
          if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
            labels.push_back(label);
          }
        }
        std::sort(labels.begin(), labels.end(),
                  [&taxonomy](const std::string& a, const std::string& b) {
                    return taxonomy.index_of(a) < taxonomy.index_of(b);
                  });
        d.labels = std::move(labels);
        break;
      }
    }
  }
  return labeling;
}

}  // namespace

TEST_CASE("taxonomy: built-in dimensions and invariants") {
  const Taxonomy& tax = Taxonomy::economic_dimensions();
  REQUIRE(tax.size() == 10);
  CHECK(tax.labels()[0] == "Jobs & Income");
  CHECK(tax.labels()[9] == "Minimum Wage");
  CHECK(tax.index_of("Pay for College") == 8);
  CHECK(tax.index_of("Climate") == -1);

  CHECK_THROWS_AS(Taxonomy({}), std::invalid_argument);
  CHECK_THROWS_AS(Taxonomy({"A", "A"}), std::invalid_argument);
  CHECK_THROWS_AS(Taxonomy({"A", ""}), std::invalid_argument);
  CHECK_THROWS_AS(Taxonomy({"has;semicolon"}), std::invalid_argument);

  std::istringstream in("# my labels\nAlpha\n\n  Beta\n");
  Taxonomy loaded = load_taxonomy(in);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.labels()[1] == "Beta");
  CHECK(loaded.content_hash() != tax.content_hash());
}

TEST_CASE("keyword rules: validation and loading") {
  const Taxonomy& tax = Taxonomy::economic_dimensions();
  CHECK_THROWS_AS(KeywordRules::make(tax, {{"Climate", {"warm"}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(KeywordRules::make(tax, {{"Taxes", {}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      KeywordRules::make(tax, {{"Taxes", {"tax"}}, {"Taxes", {"irs"}}}),
      std::invalid_argument);

  std::istringstream in(
      "# rules\nMinimum Wage\twage, minimum,workers\nTaxes\ttax\n");
  KeywordRules rules = load_rules(in, tax);
  REQUIRE(rules.entries().size() == 2);
  // entries come back in taxonomy order regardless of file order
  CHECK(rules.entries()[0].first == "Taxes");
  CHECK(rules.entries()[1].first == "Minimum Wage");
  CHECK(rules.entries()[1].second ==
        std::vector<std::string>{"wage", "minimum", "workers"});

  std::istringstream bad("Climate\twarm\n");
  CHECK_THROWS_AS(load_rules(bad, tax), std::runtime_error);
}

TEST_CASE("suggest: seeded rules rank the wage topic first") {
  std::vector<std::pair<std::string, double>> top = {
      {"feelthebern", 0.3}, {"wage", 0.25}, {"supports", 0.2},
      {"minimum", 0.15},    {"workers", 0.1}};
  auto suggestions = suggest(top, KeywordRules::economic_seeds());
  REQUIRE_FALSE(suggestions.empty());
  CHECK(suggestions[0].label == "Minimum Wage");
  CHECK(suggestions[0].match_count == 5);

  SUBCASE("disjoint words suggest nothing") {
    std::vector<std::pair<std::string, double>> none = {{"zzz", 0.5},
                                                        {"qqq", 0.5}};
    CHECK(suggest(none, KeywordRules::economic_seeds()).empty());
  }
  SUBCASE("invariant to top-word order") {
    Rng rng = make_rng(12);
    for (int i = 0; i < 20; ++i) {
      shuffle_in_place(rng, top);
      auto shuffled = suggest(top, KeywordRules::economic_seeds());
      REQUIRE(shuffled.size() == suggestions.size());
      for (std::size_t j = 0; j < shuffled.size(); ++j) {
        CHECK(shuffled[j].label == suggestions[j].label);
        CHECK(shuffled[j].match_count == suggestions[j].match_count);
      }
    }
  }
}

TEST_CASE("suggest: equals brute-force intersection counting on fuzz topics") {
  const Taxonomy& tax = Taxonomy::economic_dimensions();
  const KeywordRules& rules = KeywordRules::economic_seeds();
  std::vector<std::string> pool = {"wage",  "minimum", "tax",   "college",
                                   "trade", "care",    "wall",  "job",
                                   "zzz",   "reform",  "money", "free"};
  Rng rng = make_rng(808);
  for (int iter = 0; iter < 2000; ++iter) {
    std::vector<std::pair<std::string, double>> top;
    StringSet used;
    std::size_t n = uniform_below(rng, 8);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& w = pool[uniform_below(rng, pool.size())];
      if (used.insert(w).second) top.emplace_back(w, uniform_unit(rng));
    }
    auto got = suggest(top, rules);

    // brute force: count intersections, keep positives, sort by count then
    // taxonomy order
    std::vector<Suggestion> want;
    for (const auto& [label, keywords] : rules.entries()) {
      int count = 0;
      for (const auto& [w, p] : top) {
        if (std::find(keywords.begin(), keywords.end(), w) != keywords.end()) {
          ++count;
        }
      }
      if (count > 0) want.push_back({label, count});
    }
    std::stable_sort(want.begin(), want.end(),
                     [](const Suggestion& a, const Suggestion& b) {
                       return a.match_count > b.match_count;
                     });
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].label == want[i].label);
      CHECK(got[i].match_count == want[i].match_count);
      CHECK(tax.index_of(got[i].label) >= 0);
    }
  }
}

TEST_CASE("labeling persistence: round trips and errors") {
  const Taxonomy& tax = Taxonomy::economic_dimensions();

  SUBCASE("three-topic labeling round-trips byte-stably") {
    TopicLabeling labeling = TopicLabeling::fresh(tax, 3);
    labeling.topics[0] = {TopicStatus::Labeled, "", {"Taxes", "Minimum Wage"}};
    labeling.topics[1] = {TopicStatus::Excluded, "not understandable", {}};
    std::ostringstream out;
    save_labeling(out, labeling);
    std::istringstream in(out.str());
    TopicLabeling loaded = load_labeling(in, tax, 3);
    CHECK(loaded.topics == labeling.topics);
    std::ostringstream out2;
    save_labeling(out2, loaded);
    CHECK(out2.str() == out.str());
  }
  SUBCASE("labels outside the taxonomy are named in the error") {
    std::ostringstream out;
    save_labeling(out, TopicLabeling::fresh(tax, 2));
    std::string text = out.str();
    text += "";  // keep it a copy
    std::istringstream in(
        "#popmine-labeling v1 taxonomy=" + hash_hex(tax.content_hash()) +
        " topics=2\n0\tlabeled\tClimate\n1\tunreviewed\t\n");
    CHECK_THROWS_WITH_AS(load_labeling(in, tax, 2),
                         doctest::Contains("Climate"), std::runtime_error);
  }
  SUBCASE("duplicate and missing topic ids rejected") {
    std::string header = "#popmine-labeling v1 taxonomy=" +
                         hash_hex(tax.content_hash()) + " topics=2\n";
    std::istringstream dup(header + "0\tunreviewed\t\n0\tunreviewed\t\n");
    CHECK_THROWS_WITH_AS(load_labeling(dup, tax, 2),
                         doctest::Contains("duplicate"), std::runtime_error);
    std::istringstream missing(header + "0\tunreviewed\t\n");
    CHECK_THROWS_WITH_AS(load_labeling(missing, tax, 2),
                         doctest::Contains("missing"), std::runtime_error);
  }
  SUBCASE("malformed status rejected") {
    std::istringstream in("#popmine-labeling v1 taxonomy=" +
                          hash_hex(tax.content_hash()) +
                          " topics=1\n0\tmaybe\t\n");
    CHECK_THROWS_WITH_AS(load_labeling(in, tax, 1),
                         doctest::Contains("unknown status"),
                         std::runtime_error);
  }
  SUBCASE("taxonomy hash mismatch rejected") {
    Taxonomy other({"A", "B"});
    TopicLabeling labeling = TopicLabeling::fresh(other, 1);
    std::ostringstream out;
    save_labeling(out, labeling);
    std::istringstream in(out.str());
    CHECK_THROWS_WITH_AS(load_labeling(in, tax, 1),
                         doctest::Contains("taxonomy"), std::runtime_error);
  }
  SUBCASE("100 random labelings round trip") {
    Rng rng = make_rng(55);
    for (int i = 0; i < 100; ++i) {
      int K = 1 + static_cast<int>(uniform_below(rng, 12));
      TopicLabeling labeling = random_labeling(rng, tax, K);
      std::ostringstream out;
      save_labeling(out, labeling);
      std::istringstream in(out.str());
      TopicLabeling loaded = load_labeling(in, tax, K);
      CHECK(loaded.topics == labeling.topics);
      CHECK(loaded.taxonomy_hash == labeling.taxonomy_hash);
    }
  }
}

TEST_CASE("reconcile: agreement, conflicts, symmetry") {
  const Taxonomy& tax = Taxonomy::economic_dimensions();

  SUBCASE("identical labelings merge as-is") {
    Rng rng = make_rng(66);
    TopicLabeling a = random_labeling(rng, tax, 8);
    ReconcileResult r = reconcile(a, a);
    CHECK(r.merged.topics == a.topics);
    CHECK(r.conflicts.empty());
    CHECK(r.agreement_rate == 1.0);
  }
  SUBCASE("disagreement on topic 7 resets it to unreviewed") {
    TopicLabeling a = TopicLabeling::fresh(tax, 8);
    TopicLabeling b = TopicLabeling::fresh(tax, 8);
    a.topics[7] = {TopicStatus::Labeled, "", {"Taxes"}};
    b.topics[7] = {TopicStatus::Excluded, "noise", {}};
    ReconcileResult r = reconcile(a, b);
    CHECK(r.conflicts == std::vector<int>{7});
    CHECK(r.merged.topics[7].status == TopicStatus::Unreviewed);
    CHECK(r.agreement_rate == doctest::Approx(7.0 / 8.0));
  }
  SUBCASE("random pairs: conflict set equals per-topic equality check") {
    Rng rng = make_rng(77);
    for (int i = 0; i < 200; ++i) {
      int K = 1 + static_cast<int>(uniform_below(rng, 10));
      TopicLabeling a = random_labeling(rng, tax, K);
      TopicLabeling b = random_labeling(rng, tax, K);
      ReconcileResult ab = reconcile(a, b);
      std::vector<int> expected;
      for (int t = 0; t < K; ++t) {
        if (!(a.topics[static_cast<std::size_t>(t)] ==
              b.topics[static_cast<std::size_t>(t)])) {
          expected.push_back(t);
        }
      }
      CHECK(ab.conflicts == expected);
      ReconcileResult ba = reconcile(b, a);
      CHECK(ab.conflicts == ba.conflicts);
    }
  }
  SUBCASE("mismatched inputs rejected") {
    TopicLabeling a = TopicLabeling::fresh(tax, 3);
    TopicLabeling b = TopicLabeling::fresh(tax, 4);
    CHECK_THROWS_AS(reconcile(a, b), std::invalid_argument);
    Taxonomy other({"A"});
    TopicLabeling c = TopicLabeling::fresh(other, 3);
    CHECK_THROWS_AS(reconcile(a, c), std::invalid_argument);
  }
}

namespace {

// Deterministic toy model for session tests: 4 topics over a tiny vocabulary.
struct SessionFixture {
  Vocabulary vocab;
  TopicModel model;

  SessionFixture() {
    for (const char* w : {"wage", "minimum", "workers", "college", "tuition",
                          "zzz"}) {
      vocab.add(w, 1);
    }
    model.config.num_topics = 4;
    model.vocab_size = vocab.size();
    model.topic_word.assign(4 * 6, 1.0 / 6);
  }
};

}  // namespace

TEST_CASE("interactive_label: command handling") {
  SessionFixture fx;
  const Taxonomy& tax = Taxonomy::economic_dimensions();
  const KeywordRules& rules = KeywordRules::economic_seeds();
  TopicLabeling fresh = TopicLabeling::fresh(tax, 4);

  SUBCASE("index 10 labels Minimum Wage") {
    std::istringstream in("10\nq\n");
    std::ostringstream out;
    TopicLabeling result =
        interactive_label(fx.model, fx.vocab, tax, rules, fresh, in, out, "");
    CHECK(result.topics[0].status == TopicStatus::Labeled);
    CHECK(result.topics[0].labels == std::vector<std::string>{"Minimum Wage"});
    CHECK(result.topics[1].status == TopicStatus::Unreviewed);
  }
  SUBCASE("immediate quit changes nothing") {
    std::istringstream in("q\n");
    std::ostringstream out;
    TopicLabeling result =
        interactive_label(fx.model, fx.vocab, tax, rules, fresh, in, out, "");
    CHECK(result.topics == fresh.topics);
  }
  SUBCASE("EOF behaves like quit") {
    std::istringstream in("");
    std::ostringstream out;
    TopicLabeling result =
        interactive_label(fx.model, fx.vocab, tax, rules, fresh, in, out, "");
    CHECK(result.topics == fresh.topics);
  }
  SUBCASE("invalid input re-prompts without state change") {
    std::istringstream in("11\n0\nbananas\n1,2\nq\n");
    std::ostringstream out;
    TopicLabeling result =
        interactive_label(fx.model, fx.vocab, tax, rules, fresh, in, out, "");
    CHECK(result.topics[0].status == TopicStatus::Labeled);
    CHECK(result.topics[0].labels ==
          std::vector<std::string>{"Jobs & Income", "Trade & Globalization"});
    CHECK(out.str().find("invalid input") != std::string::npos);
  }
  SUBCASE("exclude with reason, skip, multi-label") {
    std::istringstream in("x too vague\ns\n3,9\n2\n");
    std::ostringstream out;
    TopicLabeling result =
        interactive_label(fx.model, fx.vocab, tax, rules, fresh, in, out, "");
    CHECK(result.topics[0].status == TopicStatus::Excluded);
    CHECK(result.topics[0].reason == "too vague");
    CHECK(result.topics[1].status == TopicStatus::Unreviewed);  // skipped
    CHECK(result.topics[2].labels ==
          std::vector<std::string>{"Taxes", "Pay for College"});
    CHECK(result.topics[3].labels == std::vector<std::string>{"Trade & Globalization"});
  }
  SUBCASE("reviewed topics are not revisited, decisions persist to disk") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "popmine_label_test";
    fs::create_directories(dir);
    fs::path path = dir / "labeling.tsv";

    TopicLabeling existing = TopicLabeling::fresh(tax, 4);
    existing.topics[0] = {TopicStatus::Labeled, "", {"Taxes"}};
    std::istringstream in("5\nq\n");
    std::ostringstream out;
    TopicLabeling result = interactive_label(fx.model, fx.vocab, tax, rules,
                                             existing, in, out, path);
    CHECK(result.topics[0].labels == std::vector<std::string>{"Taxes"});
    CHECK(result.topics[1].labels == std::vector<std::string>{"National Debt"});

    std::ifstream file(path);
    REQUIRE(file.good());
    TopicLabeling reloaded = load_labeling(file, tax, 4);
    CHECK(reloaded.topics == result.topics);
    fs::remove_all(dir);
  }
}

TEST_CASE("interactive_label: scripted session over the fixture model "
          "reproduces the golden labeling") {
  // Build the fixture model the same way the pipeline does: ingest, filter,
  // dedup, keep the positive partition, fit with a pinned seed.
  std::ifstream in(std::string(POPMINE_DATA_DIR) + "/fixtures/tweets_1k.jsonl");
  REQUIRE(in.good());
  IngestResult ingested = ingest(in, InputFormat::Records, false);
  std::vector<QueryFilter> filters = {
      QueryFilter::mention("berniesanders"),
      QueryFilter::conjunction({"bernie", "sanders"}),
      QueryFilter::keyword("sanders"), QueryFilter::hashtag("sanders")};
  std::vector<RawPost> matched;
  for (const RawPost& p : ingested.posts) {
    for (const QueryFilter& f : filters) {
      if (matches(p.text, f)) {
        matched.push_back(p);
        break;
      }
    }
  }
  DedupResult deduped = dedup(matched);
  std::ifstream lex_in(std::string(POPMINE_DATA_DIR) + "/demo_lexicon.tsv");
  Lexicon lexicon = load_lexicon(lex_in);
  TokenRules rules;
  PartitionResult parts = partition(deduped.kept, lexicon, rules);
  REQUIRE(parts.positive.size() == 288);

  std::vector<std::vector<std::string>> docs;
  for (const RawPost& p : parts.positive) docs.push_back(tokenize(p.text, rules));
  Vocabulary vocab = build_vocabulary(docs, 1, default_stopwords());
  EncodeResult encoded = encode(parts.positive, vocab, rules);

  LdaConfig config;
  config.num_topics = 8;
  config.sweeps = 150;
  config.seed = 2016;
  FitResult fitted = fit(encoded.corpus, config);

  const Taxonomy& tax = Taxonomy::economic_dimensions();
  std::istringstream script("9\nx not economic\ns\n1,10\n4\nq\n");
  std::ostringstream session_out;
  TopicLabeling result = interactive_label(
      fitted.model, encoded.corpus.vocabulary, tax,
      KeywordRules::economic_seeds(), TopicLabeling::fresh(tax, 8), script,
      session_out, "");

  std::ostringstream actual;
  save_labeling(actual, result);

  std::ifstream golden_file(std::string(POPMINE_DATA_DIR) +
                            "/golden/fixture_labeling.tsv");
  REQUIRE_MESSAGE(golden_file.good(), "golden labeling file missing");
  std::ostringstream golden;
  golden << golden_file.rdbuf();
  CHECK(actual.str() == golden.str());
}
