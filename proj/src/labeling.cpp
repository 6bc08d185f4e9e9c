#include "popmine/labeling.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "popmine/io.hpp"

namespace popmine {

namespace {

std::string trim(std::string_view s) {
  std::size_t start = s.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(start, end - start + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = s.find(sep, pos);
    if (hit == std::string_view::npos) {
      parts.emplace_back(s.substr(pos));
      return parts;
    }
    parts.emplace_back(s.substr(pos, hit - pos));
    pos = hit + 1;
  }
}

}  // namespace

Taxonomy::Taxonomy(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("taxonomy must be non-empty");
  std::uint64_t h = fnv1a("");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const std::string& label = labels_[i];
    if (label.empty()) throw std::invalid_argument("taxonomy label must be non-empty");
    if (label.find_first_of("\t\n;") != std::string::npos) {
      throw std::invalid_argument("taxonomy label '" + label +
                                  "' contains a reserved character");
    }
    if (!index_.emplace(label, static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate taxonomy label '" + label + "'");
    }
    h = fnv1a_append(h, label);
    h = fnv1a_append(h, "\n");
  }
  hash_ = h;
}

const Taxonomy& Taxonomy::economic_dimensions() {
  static const Taxonomy taxonomy({
      "Jobs & Income",
      "Trade & Globalization",
      "Taxes",
      "Entitlement",
      "National Debt",
      "Immigration",
      "Infrastructure",
      "Monetary Policy & The Federal Reserve",
      "Pay for College",
      "Minimum Wage",
  });
  return taxonomy;
}

int Taxonomy::index_of(std::string_view label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

Taxonomy load_taxonomy(std::istream& in) {
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string item = trim(line);
    if (item.empty() || item[0] == '#') continue;
    labels.push_back(std::move(item));
  }
  return Taxonomy(std::move(labels));
}

KeywordRules KeywordRules::make(
    const Taxonomy& taxonomy,
    std::vector<std::pair<std::string, std::vector<std::string>>> entries) {
  for (const auto& [label, keywords] : entries) {
    if (taxonomy.index_of(label) < 0) {
      throw std::invalid_argument("rules label '" + label +
                                  "' is not in the taxonomy");
    }
    if (keywords.empty()) {
      throw std::invalid_argument("rules label '" + label +
                                  "' has no keywords");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [&taxonomy](const auto& a, const auto& b) {
              return taxonomy.index_of(a.first) < taxonomy.index_of(b.first);
            });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].first == entries[i - 1].first) {
      throw std::invalid_argument("duplicate rules label '" +
                                  entries[i].first + "'");
    }
  }
  KeywordRules rules;
  rules.entries_ = std::move(entries);
  return rules;
}

KeywordRules KeywordRules::economic_seeds() {
  static const KeywordRules rules = KeywordRules::make(
      Taxonomy::economic_dimensions(),
      {
          {"Jobs & Income", {"job", "jobs", "income", "economy", "leverage", "wages"}},
          {"Trade & Globalization", {"trade", "deals", "nafta", "tpp", "globalization"}},
          {"Taxes", {"tax", "taxes", "millions", "irs"}},
          {"Entitlement", {"care", "universal", "healthcare", "medicare", "social", "security"}},
          {"Immigration", {"immigration", "reform", "immigrants", "border"}},
          {"Monetary Policy & The Federal Reserve",
           {"wall", "street", "money", "banks", "fed", "reserve", "arguing"}},
          {"Pay for College", {"college", "tuition", "free", "public", "university", "student"}},
          {"Minimum Wage", {"wage", "minimum", "workers", "supports", "feelthebern", "15"}},
      });
  return rules;
}

KeywordRules load_rules(std::istream& in, const Taxonomy& taxonomy) {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("rules line " + std::to_string(line_no) +
                               ": expected label<TAB>keywords");
    }
    std::string label = line.substr(0, tab);
    std::vector<std::string> keywords;
    for (const std::string& raw : split(line.substr(tab + 1), ',')) {
      std::string kw = trim(raw);
      if (!kw.empty()) keywords.push_back(std::move(kw));
    }
    entries.emplace_back(std::move(label), std::move(keywords));
  }
  try {
    return KeywordRules::make(taxonomy, std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("rules file: ") + e.what());
  }
}

TopicLabeling TopicLabeling::fresh(const Taxonomy& taxonomy, int num_topics) {
  if (num_topics < 1) throw std::invalid_argument("num_topics must be >= 1");
  TopicLabeling labeling;
  labeling.taxonomy_hash = taxonomy.content_hash();
  labeling.topics.assign(static_cast<std::size_t>(num_topics), TopicDecision{});
  return labeling;
}

std::size_t TopicLabeling::num_unreviewed() const {
  return static_cast<std::size_t>(
      std::count_if(topics.begin(), topics.end(), [](const TopicDecision& t) {
        return t.status == TopicStatus::Unreviewed;
      }));
}

std::vector<Suggestion> suggest(
    const std::vector<std::pair<std::string, double>>& top_words,
    const KeywordRules& rules) {
  std::vector<Suggestion> out;
  for (const auto& [label, keywords] : rules.entries()) {
    int count = 0;
    for (const auto& [token, prob] : top_words) {
      if (std::find(keywords.begin(), keywords.end(), token) !=
          keywords.end()) {
        ++count;
      }
    }
    if (count > 0) out.push_back({label, count});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Suggestion& a, const Suggestion& b) {
                     return a.match_count > b.match_count;
                   });
  return out;
}

namespace {

std::string status_name(TopicStatus status) {
  switch (status) {
    case TopicStatus::Unreviewed: return "unreviewed";
    case TopicStatus::Excluded: return "excluded";
    case TopicStatus::Labeled: return "labeled";
  }
  return "unreviewed";
}

// Sorts a label set into taxonomy order, validating membership.
std::vector<std::string> canonical_labels(std::vector<std::string> labels,
                                          const Taxonomy& taxonomy) {
  if (labels.empty()) {
    throw std::invalid_argument("labeled topic must carry at least one label");
  }
  std::sort(labels.begin(), labels.end(),
            [&taxonomy](const std::string& a, const std::string& b) {
              return taxonomy.index_of(a) < taxonomy.index_of(b);
            });
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (taxonomy.index_of(labels[i]) < 0) {
      throw std::invalid_argument("unknown label '" + labels[i] + "'");
    }
    if (i > 0 && labels[i] == labels[i - 1]) {
      throw std::invalid_argument("duplicate label '" + labels[i] + "'");
    }
  }
  return labels;
}

}  // namespace

void save_labeling(std::ostream& out, const TopicLabeling& labeling) {
  out << "#popmine-labeling v1 taxonomy=" << hash_hex(labeling.taxonomy_hash)
      << " topics=" << labeling.topics.size() << '\n';
  for (std::size_t t = 0; t < labeling.topics.size(); ++t) {
    const TopicDecision& decision = labeling.topics[t];
    out << t << '\t' << status_name(decision.status) << '\t';
    if (decision.status == TopicStatus::Labeled) {
      for (std::size_t i = 0; i < decision.labels.size(); ++i) {
        if (i > 0) out << ';';
        out << decision.labels[i];
      }
    } else if (decision.status == TopicStatus::Excluded) {
      out << escape_field(decision.reason);
    }
    out << '\n';
  }
}

TopicLabeling load_labeling(std::istream& in, const Taxonomy& taxonomy,
                            int num_topics) {
  std::string header;
  if (!std::getline(in, header) || !header.starts_with("#popmine-labeling v1 ")) {
    throw std::runtime_error("labeling file: missing header");
  }
  std::size_t tax_pos = header.find("taxonomy=");
  std::size_t topics_pos = header.find(" topics=");
  if (tax_pos == std::string::npos || topics_pos == std::string::npos) {
    throw std::runtime_error("labeling file: malformed header");
  }
  std::uint64_t file_hash = 0;
  int file_topics = 0;
  try {
    file_hash = std::stoull(
        header.substr(tax_pos + 9, topics_pos - (tax_pos + 9)), nullptr, 16);
    file_topics = std::stoi(header.substr(topics_pos + 8));
  } catch (const std::exception&) {
    throw std::runtime_error("labeling file: malformed header");
  }
  if (file_hash != taxonomy.content_hash()) {
    throw std::runtime_error(
        "labeling file: taxonomy hash mismatch (file written against a "
        "different taxonomy)");
  }
  if (file_topics != num_topics) {
    throw std::runtime_error("labeling file: topic count " +
                             std::to_string(file_topics) + " does not match " +
                             std::to_string(num_topics));
  }

  TopicLabeling labeling = TopicLabeling::fresh(taxonomy, num_topics);
  std::vector<bool> seen(static_cast<std::size_t>(num_topics), false);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 3) {
      throw std::runtime_error("labeling line " + std::to_string(line_no) +
                               ": expected id<TAB>status<TAB>payload");
    }
    int topic = -1;
    try {
      topic = std::stoi(fields[0]);
    } catch (const std::exception&) {
      throw std::runtime_error("labeling line " + std::to_string(line_no) +
                               ": bad topic id '" + fields[0] + "'");
    }
    if (topic < 0 || topic >= num_topics) {
      throw std::runtime_error("labeling line " + std::to_string(line_no) +
                               ": topic id " + std::to_string(topic) +
                               " out of range");
    }
    if (seen[static_cast<std::size_t>(topic)]) {
      throw std::runtime_error("labeling line " + std::to_string(line_no) +
                               ": duplicate topic id " + std::to_string(topic));
    }
    seen[static_cast<std::size_t>(topic)] = true;

    TopicDecision decision;
    if (fields[1] == "unreviewed") {
      decision.status = TopicStatus::Unreviewed;
    } else if (fields[1] == "excluded") {
      decision.status = TopicStatus::Excluded;
      decision.reason = unescape_field(fields[2]);
    } else if (fields[1] == "labeled") {
      decision.status = TopicStatus::Labeled;
      try {
        decision.labels = canonical_labels(split(fields[2], ';'), taxonomy);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("labeling line " + std::to_string(line_no) +
                                 ": " + e.what());
      }
    } else {
      throw std::runtime_error("labeling line " + std::to_string(line_no) +
                               ": unknown status '" + fields[1] + "'");
    }
    labeling.topics[static_cast<std::size_t>(topic)] = std::move(decision);
  }
  for (std::size_t t = 0; t < seen.size(); ++t) {
    if (!seen[t]) {
      throw std::runtime_error("labeling file: topic id " + std::to_string(t) +
                               " missing");
    }
  }
  return labeling;
}

ReconcileResult reconcile(const TopicLabeling& a, const TopicLabeling& b) {
  if (a.topics.size() != b.topics.size()) {
    throw std::invalid_argument("labelings cover different topic counts");
  }
  if (a.taxonomy_hash != b.taxonomy_hash) {
    throw std::invalid_argument("labelings use different taxonomies");
  }
  ReconcileResult result;
  result.merged.taxonomy_hash = a.taxonomy_hash;
  result.merged.topics.resize(a.topics.size());
  std::size_t agreed = 0;
  for (std::size_t t = 0; t < a.topics.size(); ++t) {
    if (a.topics[t] == b.topics[t]) {
      result.merged.topics[t] = a.topics[t];
      ++agreed;
    } else {
      result.merged.topics[t] = TopicDecision{};  // back to Unreviewed
      result.conflicts.push_back(static_cast<int>(t));
    }
  }
  result.agreement_rate =
      static_cast<double>(agreed) / static_cast<double>(a.topics.size());
  return result;
}

namespace {

void persist(const TopicLabeling& labeling,
             const std::filesystem::path& path) {
  if (path.empty()) return;
  std::ostringstream out;
  save_labeling(out, labeling);
  write_file_atomic(path, out.str());
}

// Parses "1,3,10" into taxonomy labels; returns false on any invalid index.
bool parse_label_indices(const std::string& input, const Taxonomy& taxonomy,
                         std::vector<std::string>& labels) {
  labels.clear();
  for (const std::string& raw : split(input, ',')) {
    std::string item = trim(raw);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      return false;
    }
    int index = 0;
    try {
      index = std::stoi(item);
    } catch (const std::exception&) {
      return false;
    }
    if (index < 1 || index > static_cast<int>(taxonomy.size())) return false;
    const std::string& label = taxonomy.labels()[static_cast<std::size_t>(index - 1)];
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
      labels.push_back(label);
    }
  }
  return !labels.empty();
}

}  // namespace

TopicLabeling interactive_label(const TopicModel& model,
                                const Vocabulary& vocabulary,
                                const Taxonomy& taxonomy,
                                const KeywordRules& rules,
                                TopicLabeling existing, std::istream& in,
                                std::ostream& out,
                                const std::filesystem::path& persist_path) {
  if (existing.taxonomy_hash != taxonomy.content_hash()) {
    throw std::invalid_argument("labeling does not match the taxonomy");
  }
  if (existing.topics.size() !=
      static_cast<std::size_t>(model.config.num_topics)) {
    throw std::invalid_argument("labeling does not match the model");
  }

  out << "Labels:\n";
  for (std::size_t i = 0; i < taxonomy.size(); ++i) {
    out << "  " << (i + 1) << ". " << taxonomy.labels()[i] << '\n';
  }
  out << "Commands: label indices (e.g. 1,3), x <reason> = exclude, "
         "s = skip, q = save and quit\n";

  bool quit = false;
  for (std::size_t t = 0; t < existing.topics.size() && !quit; ++t) {
    if (existing.topics[t].status != TopicStatus::Unreviewed) continue;

    auto words = top_words(model, vocabulary, static_cast<int>(t), 10);
    out << "\nTopic " << t << ":";
    for (const auto& [token, prob] : words) {
      out << ' ' << token << " (" << format_double(prob, 4) << ')';
    }
    out << '\n';
    auto suggestions = suggest(words, rules);
    if (!suggestions.empty()) {
      out << "  suggested:";
      for (const Suggestion& s : suggestions) {
        out << ' ' << s.label << " [" << s.match_count << ']';
      }
      out << '\n';
    }

    while (true) {
      out << "topic " << t << "> " << std::flush;
      std::string line;
      if (!std::getline(in, line)) {
        quit = true;  // EOF behaves like quit
        break;
      }
      line = trim(line);
      if (line == "q") {
        quit = true;
        break;
      }
      if (line == "s") break;
      if (line == "x" || line.starts_with("x ")) {
        TopicDecision decision;
        decision.status = TopicStatus::Excluded;
        decision.reason = line.size() > 1 ? trim(line.substr(2)) : "";
        existing.topics[t] = std::move(decision);
        persist(existing, persist_path);
        break;
      }
      std::vector<std::string> labels;
      if (parse_label_indices(line, taxonomy, labels)) {
        TopicDecision decision;
        decision.status = TopicStatus::Labeled;
        std::sort(labels.begin(), labels.end(),
                  [&taxonomy](const std::string& a, const std::string& b) {
                    return taxonomy.index_of(a) < taxonomy.index_of(b);
                  });
        decision.labels = std::move(labels);
        existing.topics[t] = std::move(decision);
        persist(existing, persist_path);
        break;
      }
      out << "invalid input; expected label indices 1-" << taxonomy.size()
          << ", 'x <reason>', 's' or 'q'\n";
    }
  }

  persist(existing, persist_path);
  return existing;
}

}  // namespace popmine
