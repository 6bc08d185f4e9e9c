#include "popmine/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "popmine/io.hpp"

namespace popmine {

void LdaConfig::validate() const {
  if (num_topics < 1) throw std::invalid_argument("num_topics must be >= 1");
  if (resolved_alpha() <= 0.0) throw std::invalid_argument("alpha must be > 0");
  if (beta <= 0.0) throw std::invalid_argument("beta must be > 0");
  if (sweeps < 1) throw std::invalid_argument("sweeps must be >= 1");
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
    throw std::invalid_argument("holdout_fraction must be in (0, 1)");
  }
  if (particles < 1) throw std::invalid_argument("particles must be >= 1");
}

LdaState init_state(const Corpus& corpus, const LdaConfig& config) {
  config.validate();
  if (corpus.documents.empty()) throw std::invalid_argument("empty corpus");
  if (corpus.vocabulary.size() < 1) {
    throw std::invalid_argument("empty vocabulary");
  }

  LdaState state;
  state.num_topics = config.num_topics;
  state.vocab_size = corpus.vocabulary.size();
  state.rng = make_rng(config.seed);

  const std::size_t K = static_cast<std::size_t>(config.num_topics);
  const std::size_t D = corpus.documents.size();
  const std::size_t V = static_cast<std::size_t>(state.vocab_size);
  state.doc_topic.assign(D * K, 0);
  state.word_topic.assign(V * K, 0);
  state.topic_total.assign(K, 0);
  state.assignments.resize(D);

  for (std::size_t d = 0; d < D; ++d) {
    const Document& doc = corpus.documents[d];
    state.assignments[d].resize(doc.tokens.size());
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      auto k = static_cast<std::int32_t>(
          uniform_below(state.rng, static_cast<std::uint64_t>(K)));
      state.assignments[d][i] = k;
      ++state.doc_topic[d * K + static_cast<std::size_t>(k)];
      ++state.word_topic[static_cast<std::size_t>(doc.tokens[i]) * K +
                         static_cast<std::size_t>(k)];
      ++state.topic_total[static_cast<std::size_t>(k)];
    }
  }
  return state;
}

void sweep(LdaState& state, const Corpus& corpus, const LdaConfig& config) {
  const std::size_t K = static_cast<std::size_t>(state.num_topics);
  const double alpha = config.resolved_alpha();
  const double beta = config.beta;
  const double v_beta = static_cast<double>(state.vocab_size) * beta;

  // Denominator reciprocals change for at most two topics per token, so they
  // are maintained incrementally.
  std::vector<double> inv_total(K);
  for (std::size_t k = 0; k < K; ++k) {
    inv_total[k] = 1.0 / (static_cast<double>(state.topic_total[k]) + v_beta);
  }
  std::vector<double> weight(K);

  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const Document& doc = corpus.documents[d];
    std::int32_t* doc_counts = state.doc_topic.data() + d * K;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      const std::size_t w = static_cast<std::size_t>(doc.tokens[i]);
      std::int32_t* word_counts = state.word_topic.data() + w * K;
      const std::size_t old_k =
          static_cast<std::size_t>(state.assignments[d][i]);

      --doc_counts[old_k];
      --word_counts[old_k];
      --state.topic_total[old_k];
      inv_total[old_k] =
          1.0 / (static_cast<double>(state.topic_total[old_k]) + v_beta);

      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double p = (static_cast<double>(doc_counts[k]) + alpha) *
                   (static_cast<double>(word_counts[k]) + beta) * inv_total[k];
        weight[k] = p;
        total += p;
      }

      const std::size_t new_k = sample_categorical(state.rng, weight, total);
      state.assignments[d][i] = static_cast<std::int32_t>(new_k);
      ++doc_counts[new_k];
      ++word_counts[new_k];
      ++state.topic_total[new_k];
      inv_total[new_k] =
          1.0 / (static_cast<double>(state.topic_total[new_k]) + v_beta);
    }
  }
}

TopicModel estimate(const LdaState& state, const LdaConfig& config) {
  const std::size_t K = static_cast<std::size_t>(state.num_topics);
  const std::size_t V = static_cast<std::size_t>(state.vocab_size);
  const std::size_t D = state.assignments.size();
  const double alpha = config.resolved_alpha();
  const double beta = config.beta;
  const double v_beta = static_cast<double>(V) * beta;
  const double k_alpha = static_cast<double>(K) * alpha;

  TopicModel model;
  model.config = config;
  model.num_docs = static_cast<std::int64_t>(D);
  model.vocab_size = state.vocab_size;
  model.topic_word.resize(K * V);
  model.doc_topic.resize(D * K);

  for (std::size_t k = 0; k < K; ++k) {
    const double denom =
        static_cast<double>(state.topic_total[k]) + v_beta;
    for (std::size_t w = 0; w < V; ++w) {
      model.topic_word[k * V + w] =
          (static_cast<double>(state.word_topic[w * K + k]) + beta) / denom;
    }
  }
  for (std::size_t d = 0; d < D; ++d) {
    const double len = static_cast<double>(state.assignments[d].size());
    for (std::size_t k = 0; k < K; ++k) {
      model.doc_topic[d * K + k] =
          (static_cast<double>(state.doc_topic[d * K + k]) + alpha) /
          (len + k_alpha);
    }
  }
  return model;
}

FitResult fit(const Corpus& corpus, const LdaConfig& config) {
  LdaState state = init_state(corpus, config);
  for (int s = 0; s < config.sweeps; ++s) {
    sweep(state, corpus, config);
  }
  TopicModel model = estimate(state, config);
  return {std::move(state), std::move(model)};
}

std::vector<std::pair<std::string, double>> top_words(
    const TopicModel& model, const Vocabulary& vocabulary, int topic, int n) {
  if (topic < 0 || topic >= model.config.num_topics) {
    throw std::out_of_range("topic index " + std::to_string(topic) +
                            " out of range [0, " +
                            std::to_string(model.config.num_topics) + ")");
  }
  const std::int32_t V = model.vocab_size;
  std::vector<std::int32_t> order(static_cast<std::size_t>(V));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    double pa = model.phi(topic, a);
    double pb = model.phi(topic, b);
    if (pa != pb) return pa > pb;
    return a < b;
  });
  const std::size_t count =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(n, 0)),
                            static_cast<std::size_t>(V));
  std::vector<std::pair<std::string, double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.emplace_back(vocabulary.token(order[i]), model.phi(topic, order[i]));
  }
  return out;
}

HeldOutEstimate left_to_right(const LdaState& state, const LdaConfig& config,
                              const std::vector<Document>& heldout,
                              int particles, std::uint64_t seed) {
  if (heldout.empty()) {
    throw std::invalid_argument("held-out set is empty");
  }
  if (particles < 1) throw std::invalid_argument("particles must be >= 1");
  const std::size_t K = static_cast<std::size_t>(state.num_topics);
  const double alpha = config.resolved_alpha();
  const double k_alpha = static_cast<double>(K) * alpha;
  const double beta = config.beta;
  const double v_beta = static_cast<double>(state.vocab_size) * beta;
  const std::size_t R = static_cast<std::size_t>(particles);

  // Frozen training estimate of the topic-word distribution.
  std::vector<double> inv_total(K);
  for (std::size_t k = 0; k < K; ++k) {
    inv_total[k] = 1.0 / (static_cast<double>(state.topic_total[k]) + v_beta);
  }
  auto phi_hat = [&](std::size_t k, std::int32_t w) {
    return (static_cast<double>(state.word_topic_at(w, static_cast<int>(k))) +
            beta) *
           inv_total[k];
  };

  Rng rng = make_rng(seed);
  HeldOutEstimate result;
  result.particles = particles;

  std::vector<double> weight(K);
  for (const Document& doc : heldout) {
    const std::size_t len = doc.tokens.size();
    for (std::int32_t w : doc.tokens) {
      if (w < 0 || w >= state.vocab_size) {
        throw std::invalid_argument(
            "held-out document contains out-of-vocabulary index");
      }
    }
    std::vector<std::vector<std::int32_t>> z(R,
                                             std::vector<std::int32_t>(len));
    std::vector<std::vector<std::int32_t>> counts(
        R, std::vector<std::int32_t>(K, 0));

    for (std::size_t n = 0; n < len; ++n) {
      const std::int32_t w_n = doc.tokens[n];
      double predictive_sum = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        std::vector<std::int32_t>& zr = z[r];
        std::vector<std::int32_t>& cr = counts[r];
        // Refresh the earlier assignments left to right.
        for (std::size_t m = 0; m < n; ++m) {
          const std::size_t old_k = static_cast<std::size_t>(zr[m]);
          --cr[old_k];
          double total = 0.0;
          for (std::size_t k = 0; k < K; ++k) {
            double p = (static_cast<double>(cr[k]) + alpha) *
                       phi_hat(k, doc.tokens[m]);
            weight[k] = p;
            total += p;
          }
          const std::size_t new_k = sample_categorical(rng, weight, total);
          zr[m] = static_cast<std::int32_t>(new_k);
          ++cr[new_k];
        }
        // Predictive probability of the current token, then assign it.
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          double p =
              (static_cast<double>(cr[k]) + alpha) * phi_hat(k, w_n);
          weight[k] = p;
          total += p;
        }
        predictive_sum += total / (static_cast<double>(n) + k_alpha);
        const std::size_t new_k = sample_categorical(rng, weight, total);
        zr[n] = static_cast<std::int32_t>(new_k);
        ++cr[new_k];
      }
      result.total_loglik +=
          std::log(predictive_sum / static_cast<double>(R));
      ++result.token_count;
    }
  }
  return result;
}

SelectKResult select_k(const Corpus& corpus, const std::vector<int>& k_grid,
                       const LdaConfig& config) {
  if (k_grid.empty()) throw std::invalid_argument("k_grid must be non-empty");
  if (!std::is_sorted(k_grid.begin(), k_grid.end()) ||
      std::adjacent_find(k_grid.begin(), k_grid.end()) != k_grid.end()) {
    throw std::invalid_argument("k_grid must be strictly ascending");
  }
  for (int k : k_grid) {
    if (k < 1) throw std::invalid_argument("k_grid entries must be >= 1");
  }
  const std::size_t D = corpus.documents.size();
  if (D < 2) {
    throw std::invalid_argument("corpus too small to split for selection");
  }

  std::size_t heldout_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(D) * config.holdout_fraction));
  heldout_count = std::max<std::size_t>(1, heldout_count);
  if (heldout_count >= D) heldout_count = D - 1;

  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = make_rng(derive_seed(config.seed, 0));
  shuffle_in_place(shuffle_rng, order);

  std::vector<std::size_t> heldout_idx(order.begin(),
                                       order.begin() + heldout_count);
  std::vector<std::size_t> train_idx(order.begin() + heldout_count,
                                     order.end());
  std::sort(heldout_idx.begin(), heldout_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  Corpus train;
  train.vocabulary = corpus.vocabulary;
  for (std::size_t d : train_idx) {
    train.documents.push_back(corpus.documents[d]);
    train.total_tokens +=
        static_cast<std::int64_t>(corpus.documents[d].tokens.size());
  }
  std::vector<Document> heldout;
  for (std::size_t d : heldout_idx) {
    heldout.push_back(corpus.documents[d]);
  }

  const std::uint64_t eval_seed = derive_seed(config.seed, 1);
  SelectKResult result;
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    LdaConfig fit_config = config;
    fit_config.num_topics = k_grid[i];
    fit_config.seed = derive_seed(config.seed, 2 + i);
    FitResult fitted = fit(train, fit_config);
    HeldOutEstimate est = left_to_right(fitted.state, fit_config, heldout,
                                        config.particles, eval_seed);
    result.table.push_back({k_grid[i], est});
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i) {
    if (result.table[i].estimate.per_token_loglik() >
        result.table[best].estimate.per_token_loglik()) {
      best = i;
    }
  }
  result.chosen = result.table[best].num_topics;
  return result;
}

namespace {

std::string format_exact(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf);
}

void expect_keyword(std::istream& in, const char* keyword) {
  std::string word;
  if (!(in >> word) || word != keyword) {
    throw std::runtime_error(std::string("model file: expected '") + keyword +
                             "', got '" + word + "'");
  }
}

}  // namespace

void save_model(std::ostream& out, const LdaState& state,
                const LdaConfig& config, std::uint64_t vocab_hash) {
  const std::size_t K = static_cast<std::size_t>(state.num_topics);
  const std::size_t V = static_cast<std::size_t>(state.vocab_size);
  std::int64_t total = 0;
  for (const auto& doc : state.assignments) {
    total += static_cast<std::int64_t>(doc.size());
  }
  out << "popmine-model v1\n";
  out << "num_topics " << state.num_topics << '\n';
  out << "vocab_size " << state.vocab_size << '\n';
  out << "num_docs " << state.assignments.size() << '\n';
  out << "total_tokens " << total << '\n';
  out << "alpha " << format_exact(config.resolved_alpha()) << '\n';
  out << "beta " << format_exact(config.beta) << '\n';
  out << "sweeps " << config.sweeps << '\n';
  out << "seed " << config.seed << '\n';
  out << "vocab_hash " << hash_hex(vocab_hash) << '\n';
  for (std::size_t d = 0; d < state.assignments.size(); ++d) {
    const auto& doc = state.assignments[d];
    out << "doc " << d << ' ' << doc.size() << '\n';
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out << doc[i] << (i + 1 == doc.size() ? '\n' : ' ');
    }
    if (doc.empty()) out << '\n';
  }
  for (std::size_t k = 0; k < K; ++k) {
    out << "topic " << k << '\n';
    for (std::size_t w = 0; w < V; ++w) {
      out << state.word_topic[w * K + k] << (w + 1 == V ? '\n' : ' ');
    }
  }
  out << "end\n";
}

LoadedModel load_model(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "popmine-model" ||
      version != "v1") {
    throw std::runtime_error("not a popmine-model v1 file");
  }
  LoadedModel loaded;
  LdaState& state = loaded.state;
  std::int64_t num_docs = 0;
  std::int64_t total_tokens = 0;

  expect_keyword(in, "num_topics");
  in >> state.num_topics;
  expect_keyword(in, "vocab_size");
  in >> state.vocab_size;
  expect_keyword(in, "num_docs");
  in >> num_docs;
  expect_keyword(in, "total_tokens");
  in >> total_tokens;
  expect_keyword(in, "alpha");
  in >> loaded.config.alpha;
  expect_keyword(in, "beta");
  in >> loaded.config.beta;
  expect_keyword(in, "sweeps");
  in >> loaded.config.sweeps;
  expect_keyword(in, "seed");
  in >> loaded.config.seed;
  expect_keyword(in, "vocab_hash");
  std::string hash_text;
  in >> hash_text;
  if (!in || state.num_topics < 1 || state.vocab_size < 1 || num_docs < 0) {
    throw std::runtime_error("model file: malformed header");
  }
  try {
    loaded.vocab_hash = std::stoull(hash_text, nullptr, 16);
  } catch (const std::exception&) {
    throw std::runtime_error("model file: malformed vocabulary hash");
  }
  loaded.config.num_topics = state.num_topics;

  const std::size_t K = static_cast<std::size_t>(state.num_topics);
  const std::size_t V = static_cast<std::size_t>(state.vocab_size);
  state.doc_topic.assign(static_cast<std::size_t>(num_docs) * K, 0);
  state.word_topic.assign(V * K, 0);
  state.topic_total.assign(K, 0);
  state.assignments.resize(static_cast<std::size_t>(num_docs));
  state.rng = make_rng(loaded.config.seed);

  std::int64_t seen_tokens = 0;
  for (std::int64_t d = 0; d < num_docs; ++d) {
    expect_keyword(in, "doc");
    std::int64_t index = -1;
    std::size_t len = 0;
    in >> index >> len;
    if (!in || index != d) {
      throw std::runtime_error("model file: bad document record");
    }
    auto& doc = state.assignments[static_cast<std::size_t>(d)];
    doc.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      std::int32_t z = -1;
      in >> z;
      if (!in || z < 0 || z >= state.num_topics) {
        throw std::runtime_error("model file: assignment out of range");
      }
      doc[i] = z;
      ++state.doc_topic[static_cast<std::size_t>(d) * K +
                        static_cast<std::size_t>(z)];
      ++state.topic_total[static_cast<std::size_t>(z)];
    }
    seen_tokens += static_cast<std::int64_t>(len);
  }
  if (seen_tokens != total_tokens) {
    throw std::runtime_error("model file: token count mismatch");
  }

  std::vector<std::int64_t> row_sums(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    expect_keyword(in, "topic");
    std::size_t index = 0;
    in >> index;
    if (!in || index != k) {
      throw std::runtime_error("model file: bad topic record");
    }
    for (std::size_t w = 0; w < V; ++w) {
      std::int32_t c = -1;
      in >> c;
      if (!in || c < 0) {
        throw std::runtime_error("model file: negative topic-word count");
      }
      state.word_topic[w * K + k] = c;
      row_sums[k] += c;
    }
  }
  expect_keyword(in, "end");

  for (std::size_t k = 0; k < K; ++k) {
    if (row_sums[k] != state.topic_total[k]) {
      throw std::runtime_error(
          "model file: topic-word counts disagree with assignments");
    }
  }
  return loaded;
}

}  // namespace popmine
