// popmine: batch popularity-analysis pipeline over archived social-media
// posts. Subcommands stage their results as files in the output directory so
// every step is independently re-runnable:
//
//   filter    -> filtered.jsonl, filter_stats.json
//   sentiment -> positive.jsonl / negative.jsonl / neutral.jsonl
//   fit       -> model.txt, vocab.tsv
//   select-k  -> selectk.tsv
//   topics    -> topwords.tsv
//   label     -> labeling.tsv (interactive review session)
//   report    -> report.txt / report.tsv / report.jsonl
//   pipeline  -> filter + sentiment + fit + topics (+ report when labeled)
//
// Every stage writes a manifest with the resolved settings and input content
// hashes; outputs are deterministic for a fixed seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "popmine/corpus.hpp"
#include "popmine/io.hpp"
#include "popmine/labeling.hpp"
#include "popmine/lda.hpp"
#include "popmine/report.hpp"
#include "popmine/sentiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace popmine;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEmpty = 3;

struct Settings {
  std::string input;
  std::string format = "records";
  std::vector<std::string> queries;
  bool strict = false;
  std::string out = "out";
  std::string lexicon;
  std::string stopwords;
  std::string taxonomy;
  std::string rules;
  std::string labeling;
  int min_df = 1;
  int min_token_len = 2;
  bool strip_urls = true;
  int num_topics = 10;
  double alpha = 0.0;  // 0 = default 5/K
  double beta = 0.01;
  int sweeps = 1000;
  std::uint64_t seed = 1;
  double holdout = 0.1;
  int particles = 10;
  std::string grid = "2,5,10,20";
  int top_n = 10;
  std::string mass_mode = "token-mass";
  bool lenient = false;
  std::string combine_labels;  // "Label A+Label B"
  std::string combine_name;

  InputFormat input_format() const {
    if (format == "records") return InputFormat::Records;
    if (format == "delimited") return InputFormat::Delimited;
    throw CLI::ValidationError("--format must be records or delimited");
  }
  TokenRules token_rules() const {
    TokenRules rules;
    rules.min_token_len = min_token_len;
    rules.strip_urls = strip_urls;
    return rules;
  }
  LdaConfig lda_config() const {
    LdaConfig config;
    config.num_topics = num_topics;
    config.alpha = alpha;
    config.beta = beta;
    config.sweeps = sweeps;
    config.seed = seed;
    config.holdout_fraction = holdout;
    config.particles = particles;
    return config;
  }
  MassMode mass() const {
    if (mass_mode == "token-mass") return MassMode::TokenMass;
    if (mass_mode == "uniform") return MassMode::Uniform;
    throw CLI::ValidationError("--mass-mode must be token-mass or uniform");
  }
  fs::path out_path(const std::string& name) const {
    return fs::path(out) / name;
  }
  std::string labeling_path() const {
    return labeling.empty() ? out_path("labeling.tsv").string() : labeling;
  }
};

std::vector<int> parse_grid(const std::string& grid) {
  std::vector<int> out;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--grid entries must be integers, got '" +
                                 item + "'");
    }
  }
  return out;
}

std::ifstream open_or_usage(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw CLI::ValidationError(std::string(what) + " not readable: " + path);
  }
  return in;
}

// ---- manifests ----

// Resolved settings + input content hashes. Paths appear as basenames so two
// runs over the same data in different directories stay byte-identical.
json settings_echo(const Settings& s) {
  json echo;
  echo["format"] = s.format;
  echo["queries"] = s.queries;
  echo["strict"] = s.strict;
  echo["min_df"] = s.min_df;
  echo["min_token_len"] = s.min_token_len;
  echo["strip_urls"] = s.strip_urls;
  echo["k"] = s.num_topics;
  echo["alpha"] = s.alpha;
  echo["beta"] = s.beta;
  echo["sweeps"] = s.sweeps;
  echo["seed"] = s.seed;
  echo["holdout"] = s.holdout;
  echo["particles"] = s.particles;
  echo["grid"] = s.grid;
  echo["top_n"] = s.top_n;
  echo["mass_mode"] = s.mass_mode;
  echo["lenient"] = s.lenient;
  return echo;
}

void write_manifest(const Settings& s, const std::string& stage,
                    const std::vector<std::string>& input_paths) {
  json manifest;
  manifest["command"] = stage;
  manifest["config"] = settings_echo(s);
  manifest["seed"] = s.seed;
  json inputs = json::object();
  for (const std::string& path : input_paths) {
    inputs[fs::path(path).filename().string()] = hash_hex(hash_file(path));
  }
  manifest["inputs"] = inputs;
  write_file_atomic(s.out_path(stage + "_manifest.json"),
                    manifest.dump(2) + "\n");
}

// ---- shared stage helpers ----

std::vector<RawPost> read_posts(const std::string& path, InputFormat format,
                                bool strict) {
  std::ifstream in = open_or_usage(path, "input");
  IngestResult r = ingest(in, format, strict);
  if (r.skipped > 0) {
    std::cerr << "note: skipped " << r.skipped << " malformed record(s)\n";
  }
  return std::move(r.posts);
}

void write_posts_file(const fs::path& path, const std::vector<RawPost>& posts) {
  std::ostringstream out;
  write_posts(out, posts, InputFormat::Records);
  write_file_atomic(path, out.str());
}

StringSet resolve_stopwords(const Settings& s) {
  if (s.stopwords.empty()) return default_stopwords();
  std::ifstream in = open_or_usage(s.stopwords, "stopword file");
  return load_stopwords(in);
}

Taxonomy resolve_taxonomy(const Settings& s) {
  if (s.taxonomy.empty()) return Taxonomy::economic_dimensions();
  std::ifstream in = open_or_usage(s.taxonomy, "taxonomy file");
  return load_taxonomy(in);
}

KeywordRules resolve_rules(const Settings& s, const Taxonomy& taxonomy) {
  if (s.rules.empty()) {
    if (s.taxonomy.empty()) return KeywordRules::economic_seeds();
    return KeywordRules::make(taxonomy, {});  // custom taxonomy, no seeds
  }
  std::ifstream in = open_or_usage(s.rules, "rules file");
  return load_rules(in, taxonomy);
}

struct PreparedCorpus {
  Corpus corpus;
  std::size_t dropped_empty = 0;
};

PreparedCorpus prepare_corpus(const Settings& s,
                              const std::vector<RawPost>& posts) {
  TokenRules rules = s.token_rules();
  std::vector<std::vector<std::string>> docs;
  docs.reserve(posts.size());
  for (const RawPost& p : posts) docs.push_back(tokenize(p.text, rules));
  Vocabulary vocab = build_vocabulary(docs, s.min_df, resolve_stopwords(s));
  EncodeResult encoded = encode(posts, vocab, rules);
  return {std::move(encoded.corpus), encoded.dropped_empty};
}

// ---- stages ----

int run_filter(const Settings& s) {
  std::vector<RawPost> posts = read_posts(s.input, s.input_format(), s.strict);

  std::vector<QueryFilter> filters;
  for (const std::string& spec : s.queries) {
    try {
      filters.push_back(QueryFilter::parse(spec));
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError(e.what());
    }
  }

  std::vector<RawPost> matched;
  if (filters.empty()) {
    matched = std::move(posts);  // no filters: everything passes to dedup
  } else {
    for (RawPost& p : posts) {
      for (const QueryFilter& f : filters) {
        if (matches(p.text, f)) {
          matched.push_back(std::move(p));
          break;
        }
      }
    }
  }
  std::size_t input_count = filters.empty() ? matched.size() : posts.size();
  std::size_t matched_count = matched.size();

  DedupResult deduped = dedup(matched);
  write_posts_file(s.out_path("filtered.jsonl"), deduped.kept);

  json stats;
  stats["input"] = input_count;
  stats["matched"] = matched_count;
  stats["removed"] = {{"retweet", deduped.stats.retweets},
                      {"url", deduped.stats.urls},
                      {"duplicate", deduped.stats.duplicates}};
  stats["kept"] = deduped.kept.size();
  write_file_atomic(s.out_path("filter_stats.json"), stats.dump(2) + "\n");
  write_manifest(s, "filter", {s.input});

  std::cout << "filter: " << input_count << " in, " << matched_count
            << " matched, removed " << deduped.stats.retweets << " retweets / "
            << deduped.stats.urls << " urls / " << deduped.stats.duplicates
            << " duplicates, " << deduped.kept.size() << " kept\n";
  if (deduped.kept.empty()) {
    std::cerr << "warning: no posts kept\n";
    return kExitEmpty;
  }
  return kExitOk;
}

int run_sentiment(const Settings& s, const std::string& posts_path) {
  if (s.lexicon.empty()) {
    throw CLI::ValidationError("sentiment requires --lexicon");
  }
  std::ifstream lex_in = open_or_usage(s.lexicon, "lexicon");
  Lexicon lexicon = load_lexicon(lex_in);

  std::string path = posts_path.empty()
                         ? s.out_path("filtered.jsonl").string()
                         : posts_path;
  std::vector<RawPost> posts = read_posts(path, InputFormat::Records, false);
  PartitionResult parts = partition(posts, lexicon, s.token_rules());

  write_posts_file(s.out_path("positive.jsonl"), parts.positive);
  write_posts_file(s.out_path("negative.jsonl"), parts.negative);
  write_posts_file(s.out_path("neutral.jsonl"), parts.neutral);

  json stats;
  stats["positive"] = parts.positive.size();
  stats["negative"] = parts.negative.size();
  stats["neutral"] = parts.neutral.size();
  write_file_atomic(s.out_path("sentiment_stats.json"), stats.dump(2) + "\n");
  write_manifest(s, "sentiment", {path, s.lexicon});

  std::cout << "sentiment: " << parts.positive.size() << " / "
            << parts.negative.size() << " / " << parts.neutral.size()
            << " (positive / negative / neutral)\n";
  if (posts.empty()) return kExitEmpty;
  return kExitOk;
}

int run_fit(const Settings& s, const std::string& posts_path) {
  std::string path =
      posts_path.empty() ? s.out_path("positive.jsonl").string() : posts_path;
  std::vector<RawPost> posts = read_posts(path, InputFormat::Records, false);
  PreparedCorpus prepared = prepare_corpus(s, posts);
  if (prepared.corpus.documents.empty()) {
    std::cerr << "warning: no encodable documents\n";
    return kExitEmpty;
  }

  LdaConfig config = s.lda_config();
  FitResult fitted = fit(prepared.corpus, config);

  std::ostringstream vocab_out;
  prepared.corpus.vocabulary.save(vocab_out);
  write_file_atomic(s.out_path("vocab.tsv"), vocab_out.str());

  std::ostringstream model_out;
  save_model(model_out, fitted.state, config,
             prepared.corpus.vocabulary.content_hash());
  write_file_atomic(s.out_path("model.txt"), model_out.str());
  write_manifest(s, "fit", {path});

  std::cout << "fit: " << prepared.corpus.documents.size() << " documents ("
            << prepared.dropped_empty << " dropped empty), V="
            << prepared.corpus.vocabulary.size() << ", N="
            << prepared.corpus.total_tokens << ", K=" << config.num_topics
            << ", " << config.sweeps << " sweeps\n";
  return kExitOk;
}

int run_select_k(const Settings& s, const std::string& posts_path) {
  std::string path =
      posts_path.empty() ? s.out_path("positive.jsonl").string() : posts_path;
  std::vector<RawPost> posts = read_posts(path, InputFormat::Records, false);
  PreparedCorpus prepared = prepare_corpus(s, posts);
  if (prepared.corpus.documents.empty()) {
    std::cerr << "warning: no encodable documents\n";
    return kExitEmpty;
  }

  LdaConfig config = s.lda_config();
  SelectKResult result = select_k(prepared.corpus, parse_grid(s.grid), config);

  std::ostringstream out;
  out << "num_topics\ttotal_loglik\ttokens\tper_token\n";
  for (const KScore& row : result.table) {
    out << row.num_topics << '\t'
        << format_double(row.estimate.total_loglik, 6) << '\t'
        << row.estimate.token_count << '\t'
        << format_double(row.estimate.per_token_loglik(), 6) << '\n';
  }
  write_file_atomic(s.out_path("selectk.tsv"), out.str());
  write_manifest(s, "select-k", {path});

  std::cout << out.str();
  std::cout << "chosen: " << result.chosen << '\n';
  return kExitOk;
}

struct LoadedArtifacts {
  LoadedModel model;
  Vocabulary vocab;
};

LoadedArtifacts load_artifacts(const Settings& s) {
  std::ifstream vocab_in =
      open_or_usage(s.out_path("vocab.tsv").string(), "vocabulary");
  Vocabulary vocab = Vocabulary::load(vocab_in);
  std::ifstream model_in =
      open_or_usage(s.out_path("model.txt").string(), "model");
  LoadedModel model = load_model(model_in);
  if (model.vocab_hash != vocab.content_hash()) {
    throw std::runtime_error(
        "model was trained against a different vocabulary (hash mismatch)");
  }
  if (model.state.vocab_size != vocab.size()) {
    throw std::runtime_error("model/vocabulary size mismatch");
  }
  return {std::move(model), std::move(vocab)};
}

int run_topics(const Settings& s) {
  LoadedArtifacts art = load_artifacts(s);
  TopicModel model = estimate(art.model.state, art.model.config);

  std::ostringstream out;
  out << "topic_id\trank\ttoken\tprobability\n";
  for (int k = 0; k < model.config.num_topics; ++k) {
    auto words = top_words(model, art.vocab, k, s.top_n);
    for (std::size_t i = 0; i < words.size(); ++i) {
      out << k << '\t' << (i + 1) << '\t' << words[i].first << '\t'
          << format_double(words[i].second, 6) << '\n';
    }
  }
  write_file_atomic(s.out_path("topwords.tsv"), out.str());
  write_manifest(s, "topics",
                 {s.out_path("model.txt").string(),
                  s.out_path("vocab.tsv").string()});

  for (int k = 0; k < model.config.num_topics; ++k) {
    auto words = top_words(model, art.vocab, k, std::min(s.top_n, 5));
    std::cout << "topic " << k << ':';
    for (const auto& [token, prob] : words) std::cout << ' ' << token;
    std::cout << '\n';
  }
  return kExitOk;
}

int run_label(const Settings& s) {
  LoadedArtifacts art = load_artifacts(s);
  TopicModel model = estimate(art.model.state, art.model.config);
  Taxonomy taxonomy = resolve_taxonomy(s);
  KeywordRules rules = resolve_rules(s, taxonomy);

  std::string labeling_path = s.labeling_path();
  TopicLabeling existing =
      TopicLabeling::fresh(taxonomy, model.config.num_topics);
  if (fs::exists(labeling_path)) {
    std::ifstream in = open_or_usage(labeling_path, "labeling");
    existing = load_labeling(in, taxonomy, model.config.num_topics);
    std::cout << "resuming: " << existing.num_unreviewed()
              << " topics still unreviewed\n";
  }

  TopicLabeling result =
      interactive_label(model, art.vocab, taxonomy, rules, std::move(existing),
                        std::cin, std::cout, labeling_path);
  std::cout << "saved " << labeling_path << " ("
            << (result.topics.size() - result.num_unreviewed()) << "/"
            << result.topics.size() << " reviewed)\n";
  return kExitOk;
}

int run_report(const Settings& s) {
  LoadedArtifacts art = load_artifacts(s);
  TopicModel model = estimate(art.model.state, art.model.config);
  Taxonomy taxonomy = resolve_taxonomy(s);

  std::ifstream labeling_in = open_or_usage(s.labeling_path(), "labeling");
  TopicLabeling labeling =
      load_labeling(labeling_in, taxonomy, model.config.num_topics);

  std::vector<std::int64_t> lengths;
  for (const auto& doc : art.model.state.assignments) {
    lengths.push_back(static_cast<std::int64_t>(doc.size()));
  }
  TopicMassVector masses = topic_mass(model, lengths, s.mass());
  LabelDistribution dist = distribute(masses, labeling, taxonomy, s.lenient);

  write_file_atomic(s.out_path("report.txt"),
                    render(dist, ReportFormat::TextTable));
  write_file_atomic(s.out_path("report.tsv"),
                    render(dist, ReportFormat::Delimited));
  write_file_atomic(s.out_path("report.jsonl"),
                    render(dist, ReportFormat::StructuredRecords));

  if (!s.combine_labels.empty()) {
    std::vector<std::string> group;
    std::stringstream ss(s.combine_labels);
    std::string item;
    while (std::getline(ss, item, '+')) group.push_back(item);
    std::string name =
        s.combine_name.empty() ? "Combined" : s.combine_name;
    LabelDistribution combined = combine(dist, group, name);
    write_file_atomic(s.out_path("report_combined.txt"),
                      render(combined, ReportFormat::TextTable));
    write_file_atomic(s.out_path("report_combined.tsv"),
                      render(combined, ReportFormat::Delimited));
  }

  write_manifest(s, "report",
                 {s.out_path("model.txt").string(), s.labeling_path()});
  std::cout << render(dist, ReportFormat::TextTable);
  return kExitOk;
}

int run_pipeline(const Settings& s) {
  int rc = run_filter(s);
  if (rc != kExitOk) return rc;
  rc = run_sentiment(s, "");
  if (rc != kExitOk) return rc;
  rc = run_fit(s, "");
  if (rc != kExitOk) return rc;
  rc = run_topics(s);
  if (rc != kExitOk) return rc;
  if (fs::exists(s.labeling_path())) {
    rc = run_report(s);
  } else {
    std::cout << "pipeline: no labeling file yet; run 'popmine label' then "
                 "'popmine report'\n";
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"popularity analysis over archived social-media posts"};
  app.require_subcommand(1);
  Settings s;

  app.set_config("--config", "", "key = value configuration file")
      ->envname("POPMINE_CONFIG");
  app.add_option("--input", s.input, "raw posts file");
  app.add_option("--format", s.format, "input format: records|delimited")
      ->capture_default_str();
  app.add_option("--query", s.queries,
                 "collection query kind:term (mention, hashtag, keyword, "
                 "conjunction:a+b); repeatable");
  app.add_flag("--strict", s.strict, "abort on the first malformed record");
  app.add_option("--out", s.out, "output directory")->capture_default_str();
  app.add_option("--lexicon", s.lexicon, "polarity lexicon file");
  app.add_option("--stopwords", s.stopwords,
                 "stopword file (default: bundled English list)");
  app.add_option("--taxonomy", s.taxonomy,
                 "label taxonomy file (default: built-in dimensions)");
  app.add_option("--rules", s.rules, "label keyword rules file");
  app.add_option("--labeling", s.labeling,
                 "labeling file (default: <out>/labeling.tsv)");
  app.add_option("--min-df", s.min_df, "vocabulary document-frequency floor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--min-token-len", s.min_token_len, "shortest kept token")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--strip-urls", s.strip_urls, "remove URLs while tokenizing")
      ->capture_default_str();
  app.add_option("--k", s.num_topics, "number of topics")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--alpha", s.alpha,
                 "per-topic document concentration (0 = 5/K)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--beta", s.beta, "topic-word concentration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--sweeps", s.sweeps, "Gibbs passes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", s.seed, "random seed")->capture_default_str();
  app.add_option("--holdout", s.holdout, "held-out fraction for select-k")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--particles", s.particles,
                 "held-out evaluation particles")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--grid", s.grid, "comma-separated K grid for select-k")
      ->capture_default_str();
  app.add_option("--top-n", s.top_n, "words listed per topic")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--mass-mode", s.mass_mode,
                 "topic weighting: token-mass|uniform")
      ->capture_default_str();
  app.add_flag("--lenient", s.lenient,
               "treat unreviewed topics as excluded in reports");
  app.add_option("--combine", s.combine_labels,
                 "report: also combine labels, e.g. 'Jobs & Income+Minimum "
                 "Wage'");
  app.add_option("--combine-name", s.combine_name,
                 "name for the combined label");

  std::string posts_override;

  CLI::App* filter_cmd =
      app.add_subcommand("filter", "apply queries and dedup the corpus");
  CLI::App* sentiment_cmd = app.add_subcommand(
      "sentiment", "partition posts by lexicon sentiment");
  sentiment_cmd->add_option("--posts", posts_override,
                            "posts file (default: <out>/filtered.jsonl)");
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit the topic model");
  fit_cmd->add_option("--posts", posts_override,
                      "posts file (default: <out>/positive.jsonl)");
  CLI::App* selectk_cmd = app.add_subcommand(
      "select-k", "choose the topic count by held-out likelihood");
  selectk_cmd->add_option("--posts", posts_override,
                          "posts file (default: <out>/positive.jsonl)");
  CLI::App* topics_cmd =
      app.add_subcommand("topics", "write the top-words report");
  CLI::App* label_cmd =
      app.add_subcommand("label", "review topics interactively");
  CLI::App* report_cmd =
      app.add_subcommand("report", "ranked label distribution");
  CLI::App* pipeline_cmd =
      app.add_subcommand("pipeline", "run filter through report");
  for (CLI::App* sub : {filter_cmd, sentiment_cmd, fit_cmd, selectk_cmd,
                        topics_cmd, label_cmd, report_cmd, pipeline_cmd}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    fs::create_directories(s.out);
    if (filter_cmd->parsed()) return run_filter(s);
    if (sentiment_cmd->parsed()) return run_sentiment(s, posts_override);
    if (fit_cmd->parsed()) return run_fit(s, posts_override);
    if (selectk_cmd->parsed()) return run_select_k(s, posts_override);
    if (topics_cmd->parsed()) return run_topics(s);
    if (label_cmd->parsed()) return run_label(s);
    if (report_cmd->parsed()) return run_report(s);
    if (pipeline_cmd->parsed()) return run_pipeline(s);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
