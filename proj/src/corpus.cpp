#include "popmine/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "popmine/io.hpp"

namespace popmine {

namespace {

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void check_terms(const QueryFilter& f) {
  if (f.kind == QueryKind::Conjunction) {
    if (f.terms.size() < 2) {
      throw std::invalid_argument("conjunction filter needs at least two terms");
    }
  } else if (f.terms.size() != 1) {
    throw std::invalid_argument("filter needs exactly one term");
  }
  for (const std::string& t : f.terms) {
    if (t.empty()) throw std::invalid_argument("filter term must be non-empty");
  }
}

}  // namespace

QueryFilter QueryFilter::mention(std::string term) {
  QueryFilter f{QueryKind::Mention, {lower_ascii(std::move(term))}};
  check_terms(f);
  return f;
}

QueryFilter QueryFilter::hashtag(std::string term) {
  QueryFilter f{QueryKind::Hashtag, {lower_ascii(std::move(term))}};
  check_terms(f);
  return f;
}

QueryFilter QueryFilter::keyword(std::string term) {
  QueryFilter f{QueryKind::Keyword, {lower_ascii(std::move(term))}};
  check_terms(f);
  return f;
}

QueryFilter QueryFilter::conjunction(std::vector<std::string> terms) {
  for (std::string& t : terms) t = lower_ascii(std::move(t));
  QueryFilter f{QueryKind::Conjunction, std::move(terms)};
  check_terms(f);
  return f;
}

QueryFilter QueryFilter::parse(std::string_view spec) {
  std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("query spec must look like kind:term, got '" +
                                std::string(spec) + "'");
  }
  std::string kind = lower_ascii(std::string(spec.substr(0, colon)));
  std::string rest(spec.substr(colon + 1));
  if (kind == "mention") return mention(rest);
  if (kind == "hashtag") return hashtag(rest);
  if (kind == "keyword") return keyword(rest);
  if (kind == "conjunction") {
    std::vector<std::string> terms;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      std::size_t plus = rest.find('+', pos);
      if (plus == std::string::npos) {
        terms.push_back(rest.substr(pos));
        break;
      }
      terms.push_back(rest.substr(pos, plus - pos));
      pos = plus + 1;
    }
    return conjunction(std::move(terms));
  }
  throw std::invalid_argument("unknown query kind '" + kind + "'");
}

namespace {

using nlohmann::json;

// Parses one records-format line; returns false with a reason on malformed
// input.
bool parse_record_line(const std::string& line, RawPost& post,
                       std::string& reason) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    reason = "not a valid record object";
    return false;
  }
  if (!obj.contains("id")) {
    reason = "missing required field 'id'";
    return false;
  }
  if (!obj.contains("text") || !obj["text"].is_string()) {
    reason = "missing required field 'text'";
    return false;
  }
  const json& id = obj["id"];
  if (id.is_string()) {
    post.id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    post.id = std::to_string(id.get<std::int64_t>());
  } else {
    reason = "field 'id' must be a string or integer";
    return false;
  }
  if (post.id.empty()) {
    reason = "field 'id' must be non-empty";
    return false;
  }
  post.text = obj["text"].get<std::string>();
  post.created_at.reset();
  post.lang.reset();
  if (obj.contains("created_at") && obj["created_at"].is_string()) {
    post.created_at = obj["created_at"].get<std::string>();
  }
  if (obj.contains("lang") && obj["lang"].is_string()) {
    post.lang = obj["lang"].get<std::string>();
  }
  return true;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(pos));
      break;
    }
    fields.emplace_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

struct DelimitedHeader {
  int id = -1;
  int text = -1;
  int created_at = -1;
  int lang = -1;
  std::size_t columns = 0;
};

DelimitedHeader parse_header(const std::string& line) {
  DelimitedHeader h;
  std::vector<std::string> names = split_tabs(line);
  h.columns = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "id") h.id = static_cast<int>(i);
    else if (names[i] == "text") h.text = static_cast<int>(i);
    else if (names[i] == "created_at") h.created_at = static_cast<int>(i);
    else if (names[i] == "lang") h.lang = static_cast<int>(i);
  }
  if (h.id < 0 || h.text < 0) {
    throw std::runtime_error(
        "delimited input header must declare 'id' and 'text' columns");
  }
  return h;
}

bool parse_delimited_line(const std::string& line, const DelimitedHeader& h,
                          RawPost& post, std::string& reason) {
  std::vector<std::string> fields = split_tabs(line);
  if (fields.size() != h.columns) {
    reason = "expected " + std::to_string(h.columns) + " columns, got " +
             std::to_string(fields.size());
    return false;
  }
  post.id = unescape_field(fields[static_cast<std::size_t>(h.id)]);
  if (post.id.empty()) {
    reason = "field 'id' must be non-empty";
    return false;
  }
  post.text = unescape_field(fields[static_cast<std::size_t>(h.text)]);
  post.created_at.reset();
  post.lang.reset();
  if (h.created_at >= 0) {
    std::string v = unescape_field(fields[static_cast<std::size_t>(h.created_at)]);
    if (!v.empty()) post.created_at = std::move(v);
  }
  if (h.lang >= 0) {
    std::string v = unescape_field(fields[static_cast<std::size_t>(h.lang)]);
    if (!v.empty()) post.lang = std::move(v);
  }
  return true;
}

}  // namespace

IngestResult ingest(std::istream& source, InputFormat format, bool strict) {
  IngestResult result;
  StringSet seen_ids;
  std::string line;
  std::size_t line_no = 0;

  DelimitedHeader header;
  if (format == InputFormat::Delimited) {
    if (!std::getline(source, line)) {
      return result;  // empty input
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = parse_header(line);
  }

  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    RawPost post;
    std::string reason;
    bool ok = format == InputFormat::Records
                  ? parse_record_line(line, post, reason)
                  : parse_delimited_line(line, header, post, reason);
    if (ok && !seen_ids.insert(post.id).second) {
      ok = false;
      reason = "duplicate id '" + post.id + "'";
    }
    if (!ok) {
      if (strict) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " +
                                 reason);
      }
      ++result.skipped;
      continue;
    }
    result.posts.push_back(std::move(post));
  }
  return result;
}

void write_posts(std::ostream& out, const std::vector<RawPost>& posts,
                 InputFormat format) {
  if (format == InputFormat::Records) {
    for (const RawPost& p : posts) {
      json obj;
      obj["id"] = p.id;
      obj["text"] = p.text;
      if (p.created_at) obj["created_at"] = *p.created_at;
      if (p.lang) obj["lang"] = *p.lang;
      out << obj.dump() << '\n';
    }
    return;
  }
  out << "id\ttext\tcreated_at\tlang\n";
  for (const RawPost& p : posts) {
    out << escape_field(p.id) << '\t' << escape_field(p.text) << '\t'
        << escape_field(p.created_at.value_or("")) << '\t'
        << escape_field(p.lang.value_or("")) << '\n';
  }
}

DedupResult dedup(const std::vector<RawPost>& posts) {
  DedupResult result;
  result.kept.reserve(posts.size());
  StringSet seen_text;
  for (const RawPost& post : posts) {
    std::string norm = normalize(post.text);
    if (norm.starts_with("rt @")) {
      ++result.stats.retweets;
    } else if (norm.find("http://") != std::string::npos ||
               norm.find("https://") != std::string::npos ||
               norm.find("t.co/") != std::string::npos) {
      ++result.stats.urls;
    } else if (!seen_text.insert(std::move(norm)).second) {
      ++result.stats.duplicates;
    } else {
      result.kept.push_back(post);
    }
  }
  return result;
}

std::uint64_t Vocabulary::content_hash() const {
  std::uint64_t h = fnv1a("");
  for (const std::string& t : tokens_) {
    h = fnv1a_append(h, t);
    h = fnv1a_append(h, "\n");
  }
  return h;
}

void Vocabulary::add(std::string token_text, std::int32_t doc_frequency) {
  auto index = static_cast<std::int32_t>(tokens_.size());
  auto [it, inserted] = index_.emplace(token_text, index);
  if (!inserted) {
    throw std::invalid_argument("duplicate vocabulary token '" + token_text + "'");
  }
  tokens_.push_back(std::move(token_text));
  df_.push_back(doc_frequency);
}

void Vocabulary::save(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << escape_field(tokens_[i]) << '\t' << df_[i] << '\n';
  }
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("vocabulary line " + std::to_string(line_no) +
                               ": expected token<TAB>df");
    }
    std::int32_t df = 0;
    try {
      df = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("vocabulary line " + std::to_string(line_no) +
                               ": bad document frequency");
    }
    vocab.add(unescape_field(line.substr(0, tab)), df);
  }
  return vocab;
}

Vocabulary build_vocabulary(
    const std::vector<std::vector<std::string>>& documents, int min_df,
    const StringSet& stopwords) {
  if (min_df < 1) throw std::invalid_argument("min_df must be >= 1");

  StringMap<std::int32_t> df;
  std::vector<std::string_view> first_seen;
  for (const auto& doc : documents) {
    // Count each token once per document.
    StringSet in_doc;
    for (const std::string& tok : doc) {
      if (stopwords.contains(tok)) continue;
      if (!in_doc.insert(tok).second) continue;
      auto [it, inserted] = df.emplace(tok, 1);
      if (inserted) {
        first_seen.push_back(it->first);
      } else {
        ++it->second;
      }
    }
  }

  Vocabulary vocab;
  for (std::string_view tok : first_seen) {
    auto it = df.find(tok);
    if (it->second >= min_df) {
      vocab.add(std::string(tok), it->second);
    }
  }
  return vocab;
}

namespace {

constexpr const char* kDefaultStopwords[] = {
    "a", "about", "above", "across", "after", "again", "against", "all",
    "almost", "alone", "along", "already", "also", "although", "always", "am",
    "among", "an", "and", "another", "any", "anybody", "anyone", "anything",
    "anywhere", "are", "area", "around", "as", "ask", "at", "away", "back",
    "be", "became", "because", "become", "becomes", "been", "before", "behind",
    "being", "below", "between", "both", "but", "by", "came", "can", "cannot",
    "case", "certain", "clearly", "come", "could", "did", "differ", "do",
    "does", "done", "down", "during", "each", "either", "else", "enough",
    "even", "ever", "every", "everybody", "everyone", "everything", "far",
    "few", "find", "first", "for", "four", "from", "full", "further", "gave",
    "get", "give", "go", "going", "got", "had", "has", "have", "having", "he",
    "her", "here", "herself", "high", "him", "himself", "his", "how",
    "however", "i", "if", "in", "interest", "into", "is", "it", "its",
    "itself", "just", "keep", "kind", "knew", "know", "large", "last", "later",
    "least", "less", "let", "like", "likely", "long", "made", "make", "many",
    "may", "me", "might", "more", "most", "mostly", "much", "must", "my",
    "myself", "near", "necessary", "need", "never", "new", "next", "no",
    "nobody", "non", "not", "nothing", "now", "nowhere", "of", "off", "often",
    "old", "on", "once", "one", "only", "onto", "or", "other", "others", "our",
    "out", "over", "own", "per", "perhaps", "put", "quite", "rather", "really",
    "right", "said", "same", "saw", "say", "see", "seem", "seemed", "seeming",
    "seems", "several", "shall", "she", "should", "show", "since", "so",
    "some", "somebody", "someone", "something", "somewhere", "still", "such",
    "sure", "take", "than", "that", "the", "their", "them", "then", "there",
    "therefore", "these", "they", "thing", "think", "this", "those", "though",
    "three", "through", "thus", "to", "together", "too", "toward", "two",
    "under", "until", "up", "upon", "us", "use", "used", "uses", "very", "via",
    "want", "was", "way", "we", "well", "went", "were", "what", "when",
    "where", "whether", "which", "while", "who", "whole", "whom", "whose",
    "why", "will", "with", "within", "without", "would", "yet", "you", "your",
    "yours", "yourself",
};

}  // namespace

const StringSet& default_stopwords() {
  static const StringSet set = [] {
    StringSet s;
    for (const char* w : kDefaultStopwords) s.insert(w);
    return s;
  }();
  return set;
}

StringSet load_stopwords(std::istream& in) {
  StringSet set;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    std::size_t end = line.find_last_not_of(" \t");
    set.insert(line.substr(start, end - start + 1));
  }
  return set;
}

EncodeResult encode(const std::vector<RawPost>& posts,
                    const Vocabulary& vocabulary, const TokenRules& rules) {
  EncodeResult result;
  result.corpus.vocabulary = vocabulary;
  for (const RawPost& post : posts) {
    Document doc;
    doc.post_id = post.id;
    for (const std::string& tok : tokenize(post.text, rules)) {
      std::int32_t idx = vocabulary.index_of(tok);
      if (idx >= 0) doc.tokens.push_back(idx);
    }
    if (doc.tokens.empty()) {
      ++result.dropped_empty;
      continue;
    }
    result.corpus.total_tokens += static_cast<std::int64_t>(doc.tokens.size());
    result.corpus.documents.push_back(std::move(doc));
  }
  return result;
}

}  // namespace popmine
