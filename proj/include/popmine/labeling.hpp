#ifndef POPMINE_LABELING_HPP
#define POPMINE_LABELING_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popmine/corpus.hpp"
#include "popmine/lda.hpp"

namespace popmine {

// Ordered label set used for topic coding.
class Taxonomy {
 public:
  explicit Taxonomy(std::vector<std::string> labels);

  // The ten built-in economic dimensions.
  static const Taxonomy& economic_dimensions();

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  int index_of(std::string_view label) const;
  std::uint64_t content_hash() const { return hash_; }

 private:
  std::vector<std::string> labels_;
  StringMap<int> index_;
  std::uint64_t hash_ = 0;
};

// One label per line, '#' comments, blank lines ignored.
Taxonomy load_taxonomy(std::istream& in);

// Label -> lowercase keyword list, kept in taxonomy order so suggestion ties
// resolve deterministically.
class KeywordRules {
 public:
  static KeywordRules make(
      const Taxonomy& taxonomy,
      std::vector<std::pair<std::string, std::vector<std::string>>> entries);

  // Keyword seeds for the built-in dimensions.
  static KeywordRules economic_seeds();

  const std::vector<std::pair<std::string, std::vector<std::string>>>& entries()
      const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
};

// "label<TAB>keyword[,keyword...]" per line, '#' comments.
KeywordRules load_rules(std::istream& in, const Taxonomy& taxonomy);

enum class TopicStatus { Unreviewed, Excluded, Labeled };

struct TopicDecision {
  TopicStatus status = TopicStatus::Unreviewed;
  std::string reason;               // Excluded only
  std::vector<std::string> labels;  // Labeled only; canonical taxonomy order

  bool operator==(const TopicDecision&) const = default;
};

// Review status per topic id; every id in [0, K) appears exactly once.
struct TopicLabeling {
  std::uint64_t taxonomy_hash = 0;
  std::vector<TopicDecision> topics;

  static TopicLabeling fresh(const Taxonomy& taxonomy, int num_topics);
  std::size_t num_unreviewed() const;
};

struct Suggestion {
  std::string label;
  int match_count = 0;
};

// Ranks labels by how many of the topic's top words appear in their keyword
// lists; zero-match labels are omitted, ties resolve in taxonomy order.
std::vector<Suggestion> suggest(
    const std::vector<std::pair<std::string, double>>& top_words,
    const KeywordRules& rules);

void save_labeling(std::ostream& out, const TopicLabeling& labeling);

// Validates the taxonomy hash header, that topic ids 0..K-1 appear exactly
// once, and that every label belongs to the taxonomy.
TopicLabeling load_labeling(std::istream& in, const Taxonomy& taxonomy,
                            int num_topics);

struct ReconcileResult {
  TopicLabeling merged;
  std::vector<int> conflicts;  // ascending topic ids
  double agreement_rate = 0.0;
};

// Topics where both coders decided identically merge as-is; disagreements
// become conflicts and reset to Unreviewed for human resolution.
ReconcileResult reconcile(const TopicLabeling& a, const TopicLabeling& b);

// Console review session over the unreviewed topics. Commands: comma-separated
// label indices, "x <reason>" to exclude, "s" to skip, "q" to save and quit.
// Every accepted decision is persisted to persist_path immediately (atomic
// rewrite); pass an empty path to skip persistence.
TopicLabeling interactive_label(const TopicModel& model,
                                const Vocabulary& vocabulary,
                                const Taxonomy& taxonomy,
                                const KeywordRules& rules,
                                TopicLabeling existing, std::istream& in,
                                std::ostream& out,
                                const std::filesystem::path& persist_path);

}  // namespace popmine

#endif  // POPMINE_LABELING_HPP
