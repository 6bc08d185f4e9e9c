#ifndef POPMINE_SENTIMENT_HPP
#define POPMINE_SENTIMENT_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "popmine/corpus.hpp"

namespace popmine {

enum class Polarity { Positive, Negative };

enum class SentimentLabel { Positive, Negative, Neutral };

std::string_view to_string(SentimentLabel label);

// Polarity word list with optional stem wildcards ("agree*" matches agree,
// agrees, agreed, ...). Immutable after load; safe to share across threads.
class Lexicon {
 public:
  void add(std::string_view pattern, Polarity category);

  // Exact patterns take precedence over stems; among stems the longest wins.
  // Returns true and sets category when the token matches any pattern.
  bool match(std::string_view token, Polarity& category) const;

  std::size_t count(Polarity category) const;
  std::size_t size() const { return exact_.size() + stems_.size(); }

 private:
  StringMap<Polarity> exact_;
  StringMap<Polarity> stems_;  // keyed by the stem, '*' removed
  std::size_t min_stem_ = 0;
  std::size_t max_stem_ = 0;
};

// One "pattern<TAB>category" entry per line, categories positive/negative,
// '#' comments and blank lines ignored. Aborts with the offending line number
// on a misplaced wildcard, an unknown category, or a duplicated pattern.
Lexicon load_lexicon(std::istream& source);

struct SentimentResult {
  int pos_hits = 0;
  int neg_hits = 0;
  SentimentLabel label = SentimentLabel::Neutral;
};

// Counts lexicon hits over lowercase tokens; each token contributes at most
// one hit. Label: positive iff pos_hits > neg_hits, negative iff the reverse,
// neutral on ties.
SentimentResult score(const std::vector<std::string>& tokens,
                      const Lexicon& lexicon);

struct PartitionResult {
  std::vector<RawPost> positive;
  std::vector<RawPost> negative;
  std::vector<RawPost> neutral;
};

// Tokenizes and scores every post; the three outputs are disjoint and cover
// the input in order.
PartitionResult partition(const std::vector<RawPost>& posts,
                          const Lexicon& lexicon, const TokenRules& rules);

}  // namespace popmine

#endif  // POPMINE_SENTIMENT_HPP
