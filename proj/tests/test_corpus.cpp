#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "popmine/corpus.hpp"
#include "popmine/rng.hpp"

using namespace popmine;

namespace {

// --- brute-force oracles ---

// Naive whitespace split + lowercase membership test.
bool oracle_matches(const std::string& text, const QueryFilter& filter) {
  std::set<std::string> tokens;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.insert(word);
  }
  switch (filter.kind) {
    case QueryKind::Mention: return tokens.count("@" + filter.terms[0]) > 0;
    case QueryKind::Hashtag: return tokens.count("#" + filter.terms[0]) > 0;
    case QueryKind::Keyword: return tokens.count(filter.terms[0]) > 0;
    case QueryKind::Conjunction:
      for (const auto& t : filter.terms) {
        if (tokens.count(t) == 0) return false;
      }
      return true;
  }
  return false;
}

// Applies the three removal predicates then first-seen dedup, independently
// of the production code path.
std::vector<RawPost> oracle_dedup(const std::vector<RawPost>& posts) {
  std::vector<RawPost> kept;
  std::set<std::string> seen;
  for (const RawPost& p : posts) {
    if (is_retweet(p.text)) continue;
    if (contains_url(p.text)) continue;
    std::string norm = normalize(p.text);
    if (!seen.insert(norm).second) continue;
    kept.push_back(p);
  }
  return kept;
}

std::map<std::string, int> oracle_df(
    const std::vector<std::vector<std::string>>& docs,
    const StringSet& stopwords) {
  std::map<std::string, int> df;
  for (const auto& doc : docs) {
    std::set<std::string> uniq(doc.begin(), doc.end());
    for (const auto& t : uniq) {
      if (!stopwords.contains(t)) ++df[t];
    }
  }
  return df;
}

std::string mangle_case(Rng& rng, std::string s) {
  for (char& c : s) {
    if (uniform_unit(rng) < 0.4) {
      c = static_cast<char>(std::isupper(static_cast<unsigned char>(c))
                                ? std::tolower(static_cast<unsigned char>(c))
                                : std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("query filter construction and parsing") {
  CHECK(QueryFilter::mention("BernieSanders").terms[0] == "berniesanders");
  CHECK(QueryFilter::parse("hashtag:sanders").kind == QueryKind::Hashtag);
  QueryFilter conj = QueryFilter::parse("conjunction:bernie+sanders");
  CHECK(conj.terms == std::vector<std::string>{"bernie", "sanders"});
  CHECK_THROWS_AS(QueryFilter::parse("conjunction:solo"), std::invalid_argument);
  CHECK_THROWS_AS(QueryFilter::parse("nearby:x"), std::invalid_argument);
  CHECK_THROWS_AS(QueryFilter::mention(""), std::invalid_argument);
}

TEST_CASE("matches: paper query forms") {
  CHECK(matches("Thanks @BernieSanders!", QueryFilter::mention("berniesanders")));
  CHECK_FALSE(matches("Thanks BernieSanders!", QueryFilter::mention("berniesanders")));
  CHECK(matches("go #Sanders go", QueryFilter::hashtag("sanders")));
  CHECK(matches("SANDERS rally tonight", QueryFilter::keyword("sanders")));
  CHECK(matches("bernie met sanders today",
                QueryFilter::conjunction({"bernie", "sanders"})));
  CHECK_FALSE(matches("bernie alone", QueryFilter::conjunction({"bernie", "sanders"})));
}

TEST_CASE("matches: case invariance and oracle equivalence on 10k texts") {
  const std::vector<std::string> pool = {
      "bernie", "sanders",  "@berniesanders", "#sanders", "hello", "wage",
      "rally",  "@someone", "#feelthebern",   "news",     "x1",    "the",
      "vote"};
  const std::vector<QueryFilter> filters = {
      QueryFilter::mention("berniesanders"),
      QueryFilter::conjunction({"bernie", "sanders"}),
      QueryFilter::keyword("sanders"), QueryFilter::hashtag("sanders")};

  Rng rng = make_rng(91);
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    std::size_t n = 1 + uniform_below(rng, 8);
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) text += ' ';
      text += mangle_case(rng, pool[uniform_below(rng, pool.size())]);
    }
    for (const QueryFilter& f : filters) {
      CAPTURE(text);
      CHECK(matches(text, f) == oracle_matches(text, f));
    }
  }
}

TEST_CASE("normalize: whitespace, case, unicode") {
  CHECK(normalize("  Hello   World ") == "hello world");
  CHECK(normalize("") == "");
  CHECK(normalize("\t A \n B \r\n") == "a b");
  // decomposed and precomposed accents agree after NFC
  CHECK(normalize("Caf\x65\xcc\x81") == normalize("Caf\xc3\xa9"));
  CHECK(normalize("\xc3\x89TAT") == "\xc3\xa9tat");
}

TEST_CASE("normalize: idempotent over 10k fuzz inputs") {
  const std::vector<std::string> pieces = {
      "Hello",  "WORLD",          " ",        "  ",       "\t",
      "\n",     "caf\xc3\xa9",    "\x65\xcc\x81", "\xc4\xb0", "\xc3\x9f",
      "#Tag",   "@User",          "\xc2\xa0", "\xf0\x9f\x94\xa5",
      "\xe1\xbe\xbc", "x",        "!",        "http://t.co/x",
      "\xce\xa9", "RT"};
  Rng rng = make_rng(17);
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    std::size_t n = uniform_below(rng, 10);
    for (std::size_t j = 0; j < n; ++j) {
      text += pieces[uniform_below(rng, pieces.size())];
    }
    std::string once = normalize(text);
    CAPTURE(text);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("contains_url / is_retweet") {
  CHECK(is_retweet("RT @user: great rally"));
  CHECK(is_retweet("  rt   @user more"));
  CHECK_FALSE(is_retweet("start rt @user"));
  CHECK(contains_url("read this https://t.co/x"));
  CHECK(contains_url("HTTP://example.com"));
  CHECK(contains_url("see t.co/abc"));
  std::string plain = "sanders supports free tuition";
  CHECK_FALSE(contains_url(plain));
  CHECK_FALSE(is_retweet(plain));
}

TEST_CASE("tokenize: rules") {
  TokenRules rules;
  CHECK(tokenize("#FeelTheBern supports $15 wage!", rules) ==
        std::vector<std::string>{"#feelthebern", "supports", "15", "wage"});
  CHECK(tokenize("", rules).empty());
  CHECK(tokenize("@BernieSanders", rules) ==
        std::vector<std::string>{"@berniesanders"});
  // kept prefixes only survive in leading position
  CHECK(tokenize("ab#cd", rules) == std::vector<std::string>{"ab", "cd"});
  // URL spans removed before splitting
  CHECK(tokenize("read https://t.co/xyz now", rules) ==
        std::vector<std::string>{"read", "now"});
  TokenRules keep_urls;
  keep_urls.strip_urls = false;
  CHECK(tokenize("see t.co/ab", keep_urls) ==
        std::vector<std::string>{"see", "co", "ab"});
  TokenRules len3;
  len3.min_token_len = 3;
  CHECK(tokenize("a bb ccc dddd", len3) ==
        std::vector<std::string>{"ccc", "dddd"});
}

TEST_CASE("dedup: removal rules and ordering") {
  auto post = [](std::string id, std::string text) {
    return RawPost{std::move(id), std::move(text), std::nullopt, std::nullopt};
  };
  SUBCASE("forced example") {
    std::vector<RawPost> posts = {post("1", "hello"), post("2", "Hello "),
                                  post("3", "RT @a: hello")};
    DedupResult r = dedup(posts);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].id == "1");
    CHECK(r.stats.retweets == 1);
    CHECK(r.stats.duplicates == 1);
    CHECK(r.stats.urls == 0);
  }
  SUBCASE("all-distinct clean input unchanged") {
    std::vector<RawPost> posts = {post("1", "alpha"), post("2", "beta"),
                                  post("3", "gamma")};
    DedupResult r = dedup(posts);
    CHECK(r.kept.size() == 3);
    CHECK(r.stats.removed() == 0);
  }
}

TEST_CASE("dedup: oracle equivalence and properties on 10k fuzz posts") {
  const std::vector<std::string> starts = {"", "RT @x: ", "rt @Y:  "};
  const std::vector<std::string> bodies = {
      "hello world", "free tuition", "wage rally", "Hello  World",
      "vote now",    "bernie 2016",  "tax plan"};
  const std::vector<std::string> tails = {"", " https://t.co/q", " t.co/zz",
                                          " !!", " again"};
  Rng rng = make_rng(4242);
  std::vector<RawPost> posts;
  posts.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    std::string text = starts[uniform_below(rng, starts.size())] +
                       mangle_case(rng, bodies[uniform_below(rng, bodies.size())]) +
                       tails[uniform_below(rng, tails.size())];
    posts.push_back(RawPost{std::to_string(i), text, std::nullopt, std::nullopt});
  }

  DedupResult r = dedup(posts);
  std::vector<RawPost> expected = oracle_dedup(posts);
  REQUIRE(r.kept.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(r.kept[i].id == expected[i].id);
  }
  CHECK(r.stats.removed() == posts.size() - r.kept.size());

  std::set<std::string> norms;
  for (const RawPost& p : r.kept) {
    CHECK_FALSE(is_retweet(p.text));
    CHECK_FALSE(contains_url(p.text));
    CHECK(norms.insert(normalize(p.text)).second);
  }

  DedupResult again = dedup(r.kept);
  CHECK(again.kept.size() == r.kept.size());
  CHECK(again.stats.removed() == 0);
}

TEST_CASE("ingest: record lines") {
  SUBCASE("identity parse") {
    std::istringstream in(R"({"id": "1", "text": "hello"})" "\n");
    IngestResult r = ingest(in, InputFormat::Records, false);
    REQUIRE(r.posts.size() == 1);
    CHECK(r.posts[0].id == "1");
    CHECK(r.posts[0].text == "hello");
    CHECK_FALSE(r.posts[0].created_at.has_value());
    CHECK(r.skipped == 0);
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    IngestResult r = ingest(in, InputFormat::Records, false);
    CHECK(r.posts.empty());
    CHECK(r.skipped == 0);
  }
  SUBCASE("non-strict skips and counts malformed records") {
    std::istringstream in(
        "{\"id\":\"1\",\"text\":\"a\"}\n"
        "{broken\n"
        "{\"id\":\"2\"}\n"
        "{\"id\":\"\",\"text\":\"b\"}\n"
        "{\"id\":\"1\",\"text\":\"dup id\"}\n"
        "{\"id\":\"3\",\"text\":\"c\",\"lang\":\"en\"}\n");
    IngestResult r = ingest(in, InputFormat::Records, false);
    REQUIRE(r.posts.size() == 2);
    CHECK(r.skipped == 4);
    CHECK(r.posts[1].lang == "en");
  }
  SUBCASE("strict aborts with line number") {
    std::istringstream in(
        "{\"id\":\"1\",\"text\":\"a\"}\n"
        "{\"id\":\"2\"}\n");
    CHECK_THROWS_WITH_AS(ingest(in, InputFormat::Records, true),
                         doctest::Contains("line 2"), std::runtime_error);
  }
  SUBCASE("integer ids are accepted") {
    std::istringstream in("{\"id\": 77, \"text\": \"n\"}\n");
    IngestResult r = ingest(in, InputFormat::Records, false);
    REQUIRE(r.posts.size() == 1);
    CHECK(r.posts[0].id == "77");
  }
}

TEST_CASE("ingest: bundled fixture has 997 posts and 3 malformed lines") {
  std::ifstream in(std::string(POPMINE_DATA_DIR) + "/fixtures/tweets_1k.jsonl");
  REQUIRE(in.good());
  IngestResult r = ingest(in, InputFormat::Records, false);
  CHECK(r.posts.size() == 997);
  CHECK(r.skipped == 3);

  std::ifstream again(std::string(POPMINE_DATA_DIR) + "/fixtures/tweets_1k.jsonl");
  CHECK_THROWS_WITH_AS(ingest(again, InputFormat::Records, true),
                       doctest::Contains("line 101"), std::runtime_error);
}

TEST_CASE("ingest: delimited round trip") {
  std::vector<RawPost> posts = {
      {"1", "plain text", std::string("2016-01-01T00:00:00Z"), std::string("en")},
      {"2", "tab\there\nand newline", std::nullopt, std::nullopt},
      {"3", "back\\slash", std::nullopt, std::string("de")},
  };
  std::ostringstream out;
  write_posts(out, posts, InputFormat::Delimited);
  std::istringstream in(out.str());
  IngestResult r = ingest(in, InputFormat::Delimited, true);
  REQUIRE(r.posts.size() == posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    CHECK(r.posts[i].id == posts[i].id);
    CHECK(r.posts[i].text == posts[i].text);
    CHECK(r.posts[i].created_at == posts[i].created_at);
    CHECK(r.posts[i].lang == posts[i].lang);
  }

  SUBCASE("bad column count is malformed") {
    std::istringstream bad("id\ttext\n1\tok\n2\n");
    IngestResult lenient = ingest(bad, InputFormat::Delimited, false);
    CHECK(lenient.posts.size() == 1);
    CHECK(lenient.skipped == 1);
  }
  SUBCASE("missing text column is structural") {
    std::istringstream bad("id\tbody\n1\tok\n");
    CHECK_THROWS_AS(ingest(bad, InputFormat::Delimited, false),
                    std::runtime_error);
  }
}

TEST_CASE("build_vocabulary: counts, stopwords, order") {
  std::vector<std::vector<std::string>> docs = {{"a", "b"}, {"a"}};
  SUBCASE("direct count") {
    Vocabulary v = build_vocabulary(docs, 1, StringSet{});
    REQUIRE(v.size() == 2);
    CHECK(v.index_of("a") == 0);
    CHECK(v.index_of("b") == 1);
    CHECK(v.doc_frequency(0) == 2);
    CHECK(v.doc_frequency(1) == 1);
  }
  SUBCASE("stopwords excluded") {
    Vocabulary v = build_vocabulary(docs, 1, StringSet{"a"});
    CHECK(v.size() == 1);
    CHECK(v.index_of("a") == -1);
    CHECK(v.index_of("b") == 0);
  }
  SUBCASE("min_df filters, first-appearance order preserved") {
    std::vector<std::vector<std::string>> d = {
        {"z", "q", "z"}, {"m", "q"}, {"m", "z"}};
    Vocabulary v = build_vocabulary(d, 2, StringSet{});
    REQUIRE(v.size() == 3);
    CHECK(v.index_of("z") == 0);
    CHECK(v.index_of("q") == 1);
    CHECK(v.index_of("m") == 2);
  }
  SUBCASE("min_df validation") {
    CHECK_THROWS_AS(build_vocabulary(docs, 0, StringSet{}),
                    std::invalid_argument);
  }
}

TEST_CASE("build_vocabulary: df table equals brute force on 1k fuzz docs") {
  const std::vector<std::string> pool = {"aa", "bb", "cc", "dd", "ee", "ff",
                                         "gg", "hh", "ii", "jj", "the", "of"};
  StringSet stops{"the", "of"};
  Rng rng = make_rng(2024);
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> doc;
    std::size_t n = uniform_below(rng, 8);
    for (std::size_t j = 0; j < n; ++j) {
      doc.push_back(pool[uniform_below(rng, pool.size())]);
    }
    docs.push_back(std::move(doc));
  }
  Vocabulary v = build_vocabulary(docs, 1, stops);
  std::map<std::string, int> expected = oracle_df(docs, stops);
  REQUIRE(static_cast<std::size_t>(v.size()) == expected.size());
  for (const auto& [token, df] : expected) {
    std::int32_t idx = v.index_of(token);
    REQUIRE(idx >= 0);
    CHECK(v.doc_frequency(idx) == df);
  }
}

TEST_CASE("vocabulary: save/load round trip and hash stability") {
  Vocabulary v = build_vocabulary({{"alpha", "beta"}, {"alpha", "gamma"}}, 1,
                                  StringSet{});
  std::ostringstream out;
  v.save(out);
  std::istringstream in(out.str());
  Vocabulary loaded = Vocabulary::load(in);
  REQUIRE(loaded.size() == v.size());
  CHECK(loaded.content_hash() == v.content_hash());
  for (std::int32_t i = 0; i < v.size(); ++i) {
    CHECK(loaded.token(i) == v.token(i));
    CHECK(loaded.doc_frequency(i) == v.doc_frequency(i));
  }
}

TEST_CASE("encode: drops, round trip, invariants") {
  TokenRules rules;
  auto post = [](std::string id, std::string text) {
    return RawPost{std::move(id), std::move(text), std::nullopt, std::nullopt};
  };

  SUBCASE("all-stopword post dropped and counted") {
    std::vector<RawPost> posts = {post("1", "the of the"),
                                  post("2", "wage rally")};
    std::vector<std::vector<std::string>> docs;
    for (const auto& p : posts) docs.push_back(tokenize(p.text, rules));
    Vocabulary v = build_vocabulary(docs, 1, StringSet{"the", "of"});
    EncodeResult r = encode(posts, v, rules);
    CHECK(r.dropped_empty == 1);
    REQUIRE(r.corpus.documents.size() == 1);
    CHECK(r.corpus.documents[0].post_id == "2");
    CHECK(r.corpus.total_tokens == 2);
  }
  SUBCASE("empty post list") {
    Vocabulary v = build_vocabulary({{"x1"}}, 1, StringSet{});
    EncodeResult r = encode({}, v, rules);
    CHECK(r.corpus.documents.empty());
    CHECK(r.corpus.total_tokens == 0);
    CHECK(r.dropped_empty == 0);
  }
  SUBCASE("decode reproduces the in-vocabulary token subsequence (fuzz)") {
    const std::vector<std::string> pool = {"aa", "bb", "cc", "dd", "ee",
                                           "oovword", "ff"};
    Rng rng = make_rng(5150);
    std::vector<RawPost> posts;
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 200; ++i) {
      std::string text;
      std::size_t n = uniform_below(rng, 10);
      for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) text += ' ';
        text += pool[uniform_below(rng, pool.size())];
      }
      posts.push_back(post(std::to_string(i), text));
      docs.push_back(tokenize(text, rules));
    }
    Vocabulary v = build_vocabulary({{"aa", "bb", "cc", "dd", "ee", "ff"}}, 1,
                                    StringSet{});
    EncodeResult r = encode(posts, v, rules);

    std::int64_t total = 0;
    std::size_t doc_index = 0;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < posts.size(); ++i) {
      std::vector<std::string> expected;
      for (const std::string& t : docs[i]) {
        if (v.index_of(t) >= 0) expected.push_back(t);
      }
      if (expected.empty()) {
        ++dropped;
        continue;
      }
      REQUIRE(doc_index < r.corpus.documents.size());
      const Document& doc = r.corpus.documents[doc_index++];
      CHECK(doc.post_id == posts[i].id);
      REQUIRE(doc.tokens.size() == expected.size());
      for (std::size_t j = 0; j < expected.size(); ++j) {
        CHECK(v.token(doc.tokens[j]) == expected[j]);
      }
      total += static_cast<std::int64_t>(doc.tokens.size());
    }
    CHECK(r.dropped_empty == dropped);
    CHECK(r.corpus.total_tokens == total);
  }
}

TEST_CASE("stopwords: bundled defaults and file loading") {
  const StringSet& defaults = default_stopwords();
  CHECK(defaults.contains("the"));
  CHECK(defaults.contains("and"));
  CHECK_FALSE(defaults.contains("wage"));
  CHECK(defaults.size() > 150);

  std::istringstream in("# comment\nfoo\n\n  bar  \n#another\nbaz\n");
  StringSet file = load_stopwords(in);
  CHECK(file.size() == 3);
  CHECK(file.contains("bar"));
}
