#ifndef POPMINE_LDA_HPP
#define POPMINE_LDA_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "popmine/corpus.hpp"
#include "popmine/rng.hpp"

namespace popmine {

struct LdaConfig {
  int num_topics = 0;  // K, required >= 1
  // Symmetric per-topic document concentration. Non-positive selects the
  // default 5.0 / num_topics (total concentration 5.0).
  double alpha = 0.0;
  double beta = 0.01;  // symmetric topic-word concentration
  int sweeps = 1000;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.1;  // train/held-out split for select_k
  int particles = 10;             // R, held-out evaluation particles

  double resolved_alpha() const {
    return alpha > 0.0 ? alpha : 5.0 / num_topics;
  }
  void validate() const;  // throws std::invalid_argument
};

// Collapsed Gibbs sampler state: per-token topic assignments plus the count
// matrices they induce. The counts are always exactly the tallies of the
// assignments.
struct LdaState {
  int num_topics = 0;
  std::int32_t vocab_size = 0;
  std::vector<std::vector<std::int32_t>> assignments;  // per doc, per position
  std::vector<std::int32_t> doc_topic;   // D x K row-major
  std::vector<std::int32_t> word_topic;  // V x K row-major
  std::vector<std::int32_t> topic_total;  // K
  Rng rng;

  std::int32_t doc_topic_at(std::size_t d, int k) const {
    return doc_topic[d * static_cast<std::size_t>(num_topics) +
                     static_cast<std::size_t>(k)];
  }
  std::int32_t word_topic_at(std::int32_t w, int k) const {
    return word_topic[static_cast<std::size_t>(w) *
                          static_cast<std::size_t>(num_topics) +
                      static_cast<std::size_t>(k)];
  }
};

// Smoothed point estimates.
struct TopicModel {
  LdaConfig config;
  std::int64_t num_docs = 0;
  std::int32_t vocab_size = 0;
  std::vector<double> topic_word;  // K x V row-major, rows sum to 1
  std::vector<double> doc_topic;   // D x K row-major, rows sum to 1

  double phi(int k, std::int32_t w) const {
    return topic_word[static_cast<std::size_t>(k) *
                          static_cast<std::size_t>(vocab_size) +
                      static_cast<std::size_t>(w)];
  }
  double theta(std::size_t d, int k) const {
    return doc_topic[d * static_cast<std::size_t>(config.num_topics) +
                     static_cast<std::size_t>(k)];
  }
};

// Seeds the generator and assigns every token a uniformly random topic.
LdaState init_state(const Corpus& corpus, const LdaConfig& config);

// One full Gibbs pass: every token resampled once, in document order then
// position order, from the collapsed conditional with the token's own
// assignment excluded.
void sweep(LdaState& state, const Corpus& corpus, const LdaConfig& config);

// phi_kw = (n_kw + beta) / (n_k + V beta), theta_dk = (n_dk + alpha) /
// (|d| + K alpha).
TopicModel estimate(const LdaState& state, const LdaConfig& config);

struct FitResult {
  LdaState state;
  TopicModel model;
};

// init_state + config.sweeps passes + estimate. Deterministic given the seed.
FitResult fit(const Corpus& corpus, const LdaConfig& config);

// Top n (token, probability) pairs for one topic, descending probability,
// ties broken by ascending vocabulary index, n capped at V.
std::vector<std::pair<std::string, double>> top_words(
    const TopicModel& model, const Vocabulary& vocabulary, int topic, int n);

struct HeldOutEstimate {
  double total_loglik = 0.0;
  std::int64_t token_count = 0;
  int particles = 0;

  double per_token_loglik() const {
    return token_count == 0 ? 0.0
                            : total_loglik / static_cast<double>(token_count);
  }
};

// Left-to-right particle estimate of the held-out log-likelihood under the
// frozen training counts. For each position, p(w_n | w_<n) is the average
// over particles of sum_k theta_k phi_{k,w_n}, where theta uses the
// particle's partial counts with alpha smoothing and phi uses the training
// counts with beta smoothing; earlier positions are resampled before each
// step. Deterministic given the seed.
HeldOutEstimate left_to_right(const LdaState& state, const LdaConfig& config,
                              const std::vector<Document>& heldout,
                              int particles, std::uint64_t seed);

struct KScore {
  int num_topics = 0;
  HeldOutEstimate estimate;
};

struct SelectKResult {
  int chosen = 0;
  std::vector<KScore> table;
};

// Splits the corpus into train/held-out with a seeded shuffle, fits one model
// per grid entry on the training split, scores each on the same held-out
// split, and returns the argmax per-token log-likelihood (ties -> smallest K).
SelectKResult select_k(const Corpus& corpus, const std::vector<int>& k_grid,
                       const LdaConfig& config);

// Text container with config, vocabulary reference hash, per-document
// assignments and the topic-word counts.
void save_model(std::ostream& out, const LdaState& state,
                const LdaConfig& config, std::uint64_t vocab_hash);

struct LoadedModel {
  LdaState state;
  LdaConfig config;
  std::uint64_t vocab_hash = 0;
};

LoadedModel load_model(std::istream& in);

}  // namespace popmine

#endif  // POPMINE_LDA_HPP
