#ifndef POPMINE_CORPUS_HPP
#define POPMINE_CORPUS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace popmine {

// Transparent hashing so lookups accept string_view without allocating.
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const {
    return std::hash<std::string_view>{}(s);
  }
};

template <typename V>
using StringMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;
using StringSet = std::unordered_set<std::string, StringHash, std::equal_to<>>;

struct RawPost {
  std::string id;
  std::string text;
  std::optional<std::string> created_at;  // ISO-8601, stored verbatim
  std::optional<std::string> lang;
};

enum class QueryKind { Mention, Hashtag, Keyword, Conjunction };

// One collection query: "@term" mention, "#term" hashtag, bare keyword, or a
// conjunction that requires every term to be present.
struct QueryFilter {
  QueryKind kind;
  std::vector<std::string> terms;  // lowercase, validated on construction

  static QueryFilter mention(std::string term);
  static QueryFilter hashtag(std::string term);
  static QueryFilter keyword(std::string term);
  static QueryFilter conjunction(std::vector<std::string> terms);

  // Parses "mention:name", "hashtag:tag", "keyword:word",
  // "conjunction:a+b[+c...]". Throws std::invalid_argument on bad specs.
  static QueryFilter parse(std::string_view spec);
};

struct TokenRules {
  bool lowercase = true;
  std::string keep_prefixes = "#@";  // kept at token start only
  int min_token_len = 2;             // measured in code points
  bool strip_urls = true;
};

// NFC, lowercased, whitespace runs collapsed to single spaces, trimmed.
// Idempotent.
std::string normalize(std::string_view text);

// True iff the normalized text contains "http://", "https://" or "t.co/".
bool contains_url(std::string_view text);

// True iff the normalized text starts with "rt @".
bool is_retweet(std::string_view text);

// Splits on characters that are neither alphanumeric nor a kept prefix; kept
// prefixes survive only in leading position; URLs are removed first when
// rules.strip_urls is set; tokens shorter than min_token_len are dropped.
std::vector<std::string> tokenize(std::string_view text, const TokenRules& rules);

// Case-insensitive token-level match against one query filter.
bool matches(std::string_view text, const QueryFilter& filter);

enum class InputFormat { Records, Delimited };

struct IngestResult {
  std::vector<RawPost> posts;
  std::size_t skipped = 0;  // malformed records counted in non-strict mode
};

// Reads posts from a UTF-8 stream. Records format: one JSON object per line
// with fields id, text and optional created_at, lang. Delimited format:
// tab-separated with a header row and backslash escapes for tab/newline.
// In strict mode the first malformed record aborts with its line number.
IngestResult ingest(std::istream& source, InputFormat format, bool strict);

void write_posts(std::ostream& out, const std::vector<RawPost>& posts,
                 InputFormat format);

struct DedupStats {
  std::size_t retweets = 0;
  std::size_t urls = 0;
  std::size_t duplicates = 0;
  std::size_t removed() const { return retweets + urls + duplicates; }
};

struct DedupResult {
  std::vector<RawPost> kept;
  DedupStats stats;
};

// Removes retweets, then URL posts, then duplicates (first occurrence by
// normalized text wins). Order-preserving and idempotent.
DedupResult dedup(const std::vector<RawPost>& posts);

class Vocabulary {
 public:
  Vocabulary() = default;

  // -1 when the token is not in the vocabulary.
  std::int32_t index_of(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
  }
  const std::string& token(std::int32_t index) const { return tokens_.at(index); }
  std::int32_t doc_frequency(std::int32_t index) const { return df_.at(index); }
  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }

  // FNV-1a over the index-ordered token list; persisted models reference the
  // vocabulary they were trained on through this hash.
  std::uint64_t content_hash() const;

  void add(std::string token_text, std::int32_t doc_frequency);

  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int32_t> df_;
  StringMap<std::int32_t> index_;
};

// Builds a vocabulary over tokenized documents: stopwords excluded, tokens
// with document frequency below min_df excluded, indices assigned in
// first-appearance order.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                            int min_df, const StringSet& stopwords);

// Bundled English stopword list.
const StringSet& default_stopwords();

// One token per line, '#' comments, blank lines ignored.
StringSet load_stopwords(std::istream& in);

struct Document {
  std::string post_id;
  std::vector<std::int32_t> tokens;  // vocabulary indices, non-empty
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  std::int64_t total_tokens = 0;  // sum of document lengths
};

struct EncodeResult {
  Corpus corpus;
  std::size_t dropped_empty = 0;  // posts with no in-vocabulary tokens
};

// Tokenizes each post and maps tokens to vocabulary indices; out-of-vocabulary
// tokens are dropped, posts that become empty are dropped and counted.
EncodeResult encode(const std::vector<RawPost>& posts,
                    const Vocabulary& vocabulary, const TokenRules& rules);

}  // namespace popmine

#endif  // POPMINE_CORPUS_HPP
