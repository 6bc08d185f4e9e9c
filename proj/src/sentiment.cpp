#include "popmine/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <stdexcept>

namespace popmine {

std::string_view to_string(SentimentLabel label) {
  switch (label) {
    case SentimentLabel::Positive: return "positive";
    case SentimentLabel::Negative: return "negative";
    case SentimentLabel::Neutral: return "neutral";
  }
  return "neutral";
}

void Lexicon::add(std::string_view pattern, Polarity category) {
  if (pattern.empty()) {
    throw std::invalid_argument("empty lexicon pattern");
  }
  std::size_t star = pattern.find('*');
  bool is_stem = star != std::string_view::npos;
  if (is_stem && star != pattern.size() - 1) {
    throw std::invalid_argument("wildcard '*' allowed only at the end of a pattern");
  }
  if (is_stem && pattern.size() == 1) {
    throw std::invalid_argument("stem before '*' must be non-empty");
  }
  for (unsigned char c : pattern) {
    if (std::isupper(c)) {
      throw std::invalid_argument("lexicon patterns must be lowercase");
    }
  }
  if (is_stem) {
    std::string stem(pattern.substr(0, pattern.size() - 1));
    auto [it, inserted] = stems_.emplace(std::move(stem), category);
    if (!inserted) {
      throw std::invalid_argument("duplicate pattern '" + std::string(pattern) + "'");
    }
    std::size_t n = it->first.size();
    min_stem_ = min_stem_ == 0 ? n : std::min(min_stem_, n);
    max_stem_ = std::max(max_stem_, n);
  } else {
    auto [it, inserted] = exact_.emplace(std::string(pattern), category);
    (void)it;
    if (!inserted) {
      throw std::invalid_argument("duplicate pattern '" + std::string(pattern) + "'");
    }
  }
}

bool Lexicon::match(std::string_view token, Polarity& category) const {
  auto exact = exact_.find(token);
  if (exact != exact_.end()) {
    category = exact->second;
    return true;
  }
  if (stems_.empty() || token.size() < min_stem_) return false;
  std::size_t longest = std::min(token.size(), max_stem_);
  for (std::size_t n = longest; n >= min_stem_; --n) {
    auto stem = stems_.find(token.substr(0, n));
    if (stem != stems_.end()) {
      category = stem->second;
      return true;
    }
  }
  return false;
}

std::size_t Lexicon::count(Polarity category) const {
  auto count_in = [category](const StringMap<Polarity>& m) {
    return static_cast<std::size_t>(
        std::count_if(m.begin(), m.end(),
                      [category](const auto& kv) { return kv.second == category; }));
  };
  return count_in(exact_) + count_in(stems_);
}

Lexicon load_lexicon(std::istream& source) {
  Lexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": expected pattern<TAB>category");
    }
    std::string pattern = line.substr(0, tab);
    std::string category = line.substr(tab + 1);
    Polarity polarity;
    if (category == "positive") {
      polarity = Polarity::Positive;
    } else if (category == "negative") {
      polarity = Polarity::Negative;
    } else {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": unknown category '" + category + "'");
    }
    try {
      lexicon.add(pattern, polarity);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return lexicon;
}

SentimentResult score(const std::vector<std::string>& tokens,
                      const Lexicon& lexicon) {
  SentimentResult result;
  for (const std::string& token : tokens) {
    Polarity category;
    if (!lexicon.match(token, category)) continue;
    if (category == Polarity::Positive) {
      ++result.pos_hits;
    } else {
      ++result.neg_hits;
    }
  }
  if (result.pos_hits > result.neg_hits) {
    result.label = SentimentLabel::Positive;
  } else if (result.neg_hits > result.pos_hits) {
    result.label = SentimentLabel::Negative;
  } else {
    result.label = SentimentLabel::Neutral;
  }
  return result;
}

PartitionResult partition(const std::vector<RawPost>& posts,
                          const Lexicon& lexicon, const TokenRules& rules) {
  PartitionResult result;
  for (const RawPost& post : posts) {
    SentimentResult s = score(tokenize(post.text, rules), lexicon);
    switch (s.label) {
      case SentimentLabel::Positive: result.positive.push_back(post); break;
      case SentimentLabel::Negative: result.negative.push_back(post); break;
      case SentimentLabel::Neutral: result.neutral.push_back(post); break;
    }
  }
  return result;
}

}  // namespace popmine
