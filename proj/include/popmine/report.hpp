#ifndef POPMINE_REPORT_HPP
#define POPMINE_REPORT_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "popmine/labeling.hpp"
#include "popmine/lda.hpp"

namespace popmine {

enum class MassMode { TokenMass, Uniform };

// Per-topic share of the corpus; weights sum to 1.
struct TopicMassVector {
  std::vector<double> weights;
  MassMode mode = MassMode::TokenMass;
};

// Token-mass mode: weight_k = sum_d theta[d][k] |d| / N. Uniform mode: 1/K.
TopicMassVector topic_mass(const TopicModel& model,
                           const std::vector<std::int64_t>& doc_lengths,
                           MassMode mode);
TopicMassVector topic_mass(const TopicModel& model, const Corpus& corpus,
                           MassMode mode);

struct LabelShare {
  std::string label;
  double percentage = 0.0;  // exact (unrounded) share of 100
  std::optional<int> rank;  // competition rank; empty = NA (zero weight)

  bool operator==(const LabelShare&) const = default;
};

// Label percentages with competition ranking ("1224" style); entries stay in
// taxonomy order.
struct LabelDistribution {
  std::vector<LabelShare> entries;

  bool operator==(const LabelDistribution&) const = default;
};

// Aggregates topic masses onto labels: excluded topics contribute nothing, a
// topic with m labels contributes weight/m to each, weights normalize over the
// included total. Unreviewed topics are an error unless lenient, which treats
// them as excluded.
LabelDistribution distribute(const TopicMassVector& masses,
                             const TopicLabeling& labeling,
                             const Taxonomy& taxonomy, bool lenient);

// Replaces the grouped labels by one label carrying their summed percentage;
// ranks are recomputed.
LabelDistribution combine(const LabelDistribution& distribution,
                          const std::vector<std::string>& group,
                          const std::string& new_name);

// Half-up rounding to one decimal, the report's display precision.
double round_percentage(double percentage);

enum class ReportFormat { TextTable, Delimited, StructuredRecords };

// Rows in descending percentage (stable, so ties and the trailing zero rows
// keep taxonomy order). Text tables use the column headers "Economic Issue",
// "Distribution(%)" and "Rank"; NA is rendered literally.
std::string render(const LabelDistribution& distribution, ReportFormat format);

// Parses the machine-readable formats (Delimited, StructuredRecords) back
// into a distribution with display-precision percentages.
LabelDistribution parse_distribution(std::istream& in, ReportFormat format);

}  // namespace popmine

#endif  // POPMINE_REPORT_HPP
