#include "popmine/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "popmine/io.hpp"

namespace popmine {

TopicMassVector topic_mass(const TopicModel& model,
                           const std::vector<std::int64_t>& doc_lengths,
                           MassMode mode) {
  const int K = model.config.num_topics;
  TopicMassVector masses;
  masses.mode = mode;
  masses.weights.assign(static_cast<std::size_t>(K), 0.0);

  if (mode == MassMode::Uniform) {
    for (double& w : masses.weights) w = 1.0 / static_cast<double>(K);
    return masses;
  }

  if (doc_lengths.size() != static_cast<std::size_t>(model.num_docs)) {
    throw std::invalid_argument("document lengths do not match the model");
  }
  std::int64_t total = std::accumulate(doc_lengths.begin(), doc_lengths.end(),
                                       std::int64_t{0});
  if (total <= 0) throw std::invalid_argument("corpus has no tokens");
  for (std::size_t d = 0; d < doc_lengths.size(); ++d) {
    for (int k = 0; k < K; ++k) {
      masses.weights[static_cast<std::size_t>(k)] +=
          model.theta(d, k) * static_cast<double>(doc_lengths[d]);
    }
  }
  for (double& w : masses.weights) w /= static_cast<double>(total);
  return masses;
}

TopicMassVector topic_mass(const TopicModel& model, const Corpus& corpus,
                           MassMode mode) {
  std::vector<std::int64_t> lengths;
  lengths.reserve(corpus.documents.size());
  for (const Document& doc : corpus.documents) {
    lengths.push_back(static_cast<std::int64_t>(doc.tokens.size()));
  }
  return topic_mass(model, lengths, mode);
}

namespace {

void assign_ranks(std::vector<LabelShare>& entries) {
  for (LabelShare& entry : entries) {
    if (entry.percentage <= 0.0) {
      entry.rank.reset();
      continue;
    }
    int greater = 0;
    for (const LabelShare& other : entries) {
      if (other.percentage > entry.percentage) ++greater;
    }
    entry.rank = greater + 1;
  }
}

}  // namespace

LabelDistribution distribute(const TopicMassVector& masses,
                             const TopicLabeling& labeling,
                             const Taxonomy& taxonomy, bool lenient) {
  if (labeling.taxonomy_hash != taxonomy.content_hash()) {
    throw std::invalid_argument("labeling does not match the taxonomy");
  }
  if (masses.weights.size() != labeling.topics.size()) {
    throw std::invalid_argument("topic masses do not match the labeling");
  }

  std::vector<double> label_weight(taxonomy.size(), 0.0);
  double included = 0.0;
  for (std::size_t t = 0; t < labeling.topics.size(); ++t) {
    const TopicDecision& decision = labeling.topics[t];
    if (decision.status == TopicStatus::Unreviewed && !lenient) {
      throw std::invalid_argument("topic " + std::to_string(t) +
                                  " is unreviewed; label it or pass lenient");
    }
    if (decision.status != TopicStatus::Labeled) continue;
    const double share = masses.weights[t] /
                         static_cast<double>(decision.labels.size());
    for (const std::string& label : decision.labels) {
      int index = taxonomy.index_of(label);
      if (index < 0) {
        throw std::invalid_argument("label '" + label +
                                    "' is not in the taxonomy");
      }
      label_weight[static_cast<std::size_t>(index)] += share;
    }
    included += masses.weights[t];
  }
  if (included <= 0.0) {
    throw std::invalid_argument(
        "every topic is excluded; nothing to distribute");
  }

  LabelDistribution dist;
  dist.entries.reserve(taxonomy.size());
  for (std::size_t i = 0; i < taxonomy.size(); ++i) {
    LabelShare entry;
    entry.label = taxonomy.labels()[i];
    entry.percentage = label_weight[i] / included * 100.0;
    dist.entries.push_back(std::move(entry));
  }
  assign_ranks(dist.entries);
  return dist;
}

LabelDistribution combine(const LabelDistribution& distribution,
                          const std::vector<std::string>& group,
                          const std::string& new_name) {
  if (group.size() < 2) {
    throw std::invalid_argument("combine needs at least two labels");
  }
  auto find_entry = [&distribution](const std::string& label) {
    return std::find_if(distribution.entries.begin(),
                        distribution.entries.end(),
                        [&label](const LabelShare& e) { return e.label == label; });
  };
  for (const std::string& label : group) {
    if (find_entry(label) == distribution.entries.end()) {
      throw std::invalid_argument("unknown label '" + label + "'");
    }
  }
  auto in_group = [&group](const std::string& label) {
    return std::find(group.begin(), group.end(), label) != group.end();
  };
  for (const LabelShare& entry : distribution.entries) {
    if (!in_group(entry.label) && entry.label == new_name) {
      throw std::invalid_argument("combined name '" + new_name +
                                  "' collides with an existing label");
    }
  }

  LabelDistribution out;
  bool emitted = false;
  double sum = 0.0;
  for (const LabelShare& entry : distribution.entries) {
    if (in_group(entry.label)) sum += entry.percentage;
  }
  for (const LabelShare& entry : distribution.entries) {
    if (in_group(entry.label)) {
      if (!emitted) {
        LabelShare combined;
        combined.label = new_name;
        combined.percentage = sum;
        out.entries.push_back(std::move(combined));
        emitted = true;
      }
      continue;
    }
    out.entries.push_back(entry);
  }
  assign_ranks(out.entries);
  return out;
}

double round_percentage(double percentage) {
  return std::floor(percentage * 10.0 + 0.5) / 10.0;
}

namespace {

std::vector<const LabelShare*> display_order(const LabelDistribution& dist) {
  std::vector<const LabelShare*> order;
  order.reserve(dist.entries.size());
  for (const LabelShare& entry : dist.entries) order.push_back(&entry);
  std::stable_sort(order.begin(), order.end(),
                   [](const LabelShare* a, const LabelShare* b) {
                     return a->percentage > b->percentage;
                   });
  return order;
}

std::string rank_text(const LabelShare& entry) {
  return entry.rank ? std::to_string(*entry.rank) : "NA";
}

}  // namespace

std::string render(const LabelDistribution& distribution,
                   ReportFormat format) {
  std::vector<const LabelShare*> order = display_order(distribution);
  std::ostringstream out;

  switch (format) {
    case ReportFormat::TextTable: {
      std::size_t label_width = std::string("Economic Issue").size();
      for (const LabelShare* e : order) {
        label_width = std::max(label_width, e->label.size());
      }
      out << "Economic Issue" << std::string(label_width - 14 + 2, ' ')
          << "Distribution(%)" << "  " << "Rank" << '\n';
      for (const LabelShare* e : order) {
        std::string pct = format_double(round_percentage(e->percentage), 1);
        out << e->label << std::string(label_width - e->label.size() + 2, ' ')
            << pct << std::string(15 - pct.size() + 2, ' ') << rank_text(*e)
            << '\n';
      }
      break;
    }
    case ReportFormat::Delimited: {
      for (const LabelShare* e : order) {
        out << escape_field(e->label) << '\t'
            << format_double(round_percentage(e->percentage), 1) << '\t'
            << rank_text(*e) << '\n';
      }
      break;
    }
    case ReportFormat::StructuredRecords: {
      for (const LabelShare* e : order) {
        nlohmann::json obj;
        obj["label"] = e->label;
        obj["percentage"] = round_percentage(e->percentage);
        if (e->rank) {
          obj["rank"] = *e->rank;
        } else {
          obj["rank"] = nullptr;
        }
        out << obj.dump() << '\n';
      }
      break;
    }
  }
  return out.str();
}

LabelDistribution parse_distribution(std::istream& in, ReportFormat format) {
  LabelDistribution dist;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    LabelShare entry;
    if (format == ReportFormat::Delimited) {
      std::size_t t1 = line.find('\t');
      std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                               : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) {
        throw std::runtime_error("distribution line " +
                                 std::to_string(line_no) +
                                 ": expected label<TAB>percentage<TAB>rank");
      }
      entry.label = unescape_field(line.substr(0, t1));
      entry.percentage = std::stod(line.substr(t1 + 1, t2 - t1 - 1));
      std::string rank = line.substr(t2 + 1);
      if (rank != "NA") entry.rank = std::stoi(rank);
    } else if (format == ReportFormat::StructuredRecords) {
      nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object() || !obj.contains("label") ||
          !obj.contains("percentage") || !obj.contains("rank")) {
        throw std::runtime_error("distribution line " +
                                 std::to_string(line_no) +
                                 ": malformed record");
      }
      entry.label = obj["label"].get<std::string>();
      entry.percentage = obj["percentage"].get<double>();
      if (!obj["rank"].is_null()) entry.rank = obj["rank"].get<int>();
    } else {
      throw std::invalid_argument("text tables are display-only");
    }
    dist.entries.push_back(std::move(entry));
  }
  return dist;
}

}  // namespace popmine
