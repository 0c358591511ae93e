#include "noktalama/cli.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "noktalama/corpus.hpp"
#include "noktalama/error.hpp"
#include "noktalama/evaluation.hpp"
#include "noktalama/protocol.hpp"

namespace noktalama {

std::string correct_paragraph(std::string_view paragraph, const Vocab& vocab,
                              const TaggerBackend& backend, std::size_t window,
                              const RenderPolicy& policy, ReconstructMode mode) {
  const InferencePlan plan = prepare_inference(paragraph, vocab, window);
  if (plan.document.tokens.empty()) return "";
  std::vector<std::vector<Token>> batch;
  for (const TokenRange& r : plan.windows) {
    const auto b = plan.document.tokens.begin();
    batch.emplace_back(b + static_cast<std::ptrdiff_t>(r.begin),
                       b + static_cast<std::ptrdiff_t>(r.end));
  }
  const Prediction merged = merge_window_predictions(plan, backend.predict_batch(batch));
  std::vector<Token> tokens = plan.document.tokens;
  for (Token& t : tokens) {
    if (t.vocab_id == vocab.unk_id()) t.surface = plan.document.units[t.word_index].text;
  }
  RenderPolicy p = policy;
  p.continuation_prefix = vocab.continuation_prefix();
  return reconstruct(tokens, merged.punct, merged.caps, p, mode);
}

namespace cli {

namespace {

/// Options shared by the subcommands, each mirroring a config key.
struct SharedOptions {
  std::map<std::string, std::string> values;  // config key -> flag value
  bool strict = false;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    bound.emplace_back(app->add_option(flag, values[key + "@" + app->get_name()], help), key);
  }

  void apply(Config& config) const {
    for (const auto& [opt, key] : bound) {
      if (opt->count() == 0) continue;
      config.set(key, opt->as<std::string>());
    }
    if (strict) config.strict = true;
  }
};

struct Invocation {
  std::string input;
  std::string output;
  std::string json_path;
  std::string confusion_csv;
  std::string listen = "stdio";
  std::string config_path;
  std::size_t n = 1000;
  std::string text;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

Vocab require_vocab(const Config& config) {
  if (config.vocab_path.empty()) throw ConfigError("vocab", "no vocabulary given (--vocab)");
  return load_vocab(config.vocab_path);
}

std::unique_ptr<TaggerBackend> make_backend(const Config& config,
                                            const std::vector<LabeledSegment>* gold) {
  switch (config.backend) {
    case BackendKind::Baseline: {
      if (config.model_path.empty()) {
        throw ConfigError("model_path", "the baseline backend needs --model-path");
      }
      auto model = std::make_unique<BaselineModel>(BaselineModel::load(config.model_path));
      model->set_max_length(std::max(model->max_length(), config.max_len));
      return model;
    }
    case BackendKind::External: {
      if (config.endpoint.empty()) {
        throw ConfigError("endpoint", "the external backend needs --endpoint");
      }
      ClientOptions options;
      options.timeout = config.timeout;
      return std::make_unique<ExternalBackend>(Endpoint::parse(config.endpoint), options,
                                               config.max_len);
    }
    case BackendKind::Oracle:
      if (!gold) throw ConfigError("backend", "the oracle backend only replays evaluation data");
      return std::make_unique<OracleBackend>(*gold);
  }
  throw ConfigError("backend", "unsupported");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << content;
  if (!f) throw IoError("failed writing " + path);
}

std::size_t worker_count(const Config& config, std::size_t jobs) {
  std::size_t n = config.workers;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min({n, jobs, std::size_t{16}}));
}

/// Labels and windows documents on a bounded pool; output keeps input order.
std::vector<LabeledSegment> label_and_segment(const std::vector<Document>& docs,
                                              const Vocab& vocab, const Config& config) {
  std::vector<std::vector<LabeledSegment>> per_doc(docs.size());
  std::vector<std::exception_ptr> errors(docs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        per_doc[i] = segment(label_document(docs[i], vocab), config.content_budget());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = worker_count(config, docs.size());
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<LabeledSegment> out;
  for (auto& segs : per_doc) {
    for (auto& s : segs) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Document> read_corpus(const Invocation& inv, const Config& config) {
  if (inv.input.empty()) throw UsageError("--input is required");
  return ingest(inv.input, config.format, config.column);
}

int cmd_prepare(const Invocation& inv, const Config& config, std::ostream& out) {
  if (inv.output.empty()) throw UsageError("--output is required");
  const Vocab vocab = require_vocab(config);
  std::vector<Document> docs = read_corpus(inv, config);
  const std::size_t total = docs.size();
  const Splits<Document> splits = split_dataset(std::move(docs), config.split);
  std::filesystem::create_directories(inv.output);
  const std::array<const std::vector<Document>*, 3> parts = {&splits.train, &splits.test,
                                                             &splits.valid};
  nlohmann::ordered_json summary;
  summary["documents"] = total;
  std::ostringstream table;
  table << "split        documents   segments\n";
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto segments = label_and_segment(*parts[s], vocab, config);
    const auto path = std::filesystem::path(inv.output) / (std::string(kSplitNames[s]) + ".jsonl");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    write_segments_jsonl(f, segments);
    if (!f) throw IoError("failed writing " + path.string());
    std::string name(kSplitNames[s]);
    table << name << std::string(13 - name.size(), ' ') << std::setw(9) << parts[s]->size()
          << "  " << std::setw(9) << segments.size() << '\n';
    summary[name] = {{"documents", parts[s]->size()}, {"segments", segments.size()}};
  }
  out << table.str();
  out << "docs: " << splits.train.size() << "/" << splits.test.size() << "/"
      << splits.valid.size() << " (train/test/validation)\n";
  if (!inv.json_path.empty()) write_file(inv.json_path, summary.dump() + "\n");
  return kExitOk;
}

int cmd_stats(const Invocation& inv, const Config& config, std::ostream& out) {
  const Vocab vocab = require_vocab(config);
  const Splits<Document> splits = split_dataset(read_corpus(inv, config), config.split);
  std::vector<std::pair<std::string, std::vector<LabeledSegment>>> labeled;
  labeled.emplace_back(kSplitNames[0], label_and_segment(splits.train, vocab, config));
  labeled.emplace_back(kSplitNames[1], label_and_segment(splits.test, vocab, config));
  labeled.emplace_back(kSplitNames[2], label_and_segment(splits.valid, vocab, config));
  const DistributionTable table = distribution(labeled);
  table.print(out);
  if (!inv.json_path.empty()) write_file(inv.json_path, table.to_json() + "\n");
  return kExitOk;
}

int cmd_train_baseline(const Invocation& inv, const Config& config, std::ostream& out) {
  if (inv.input.empty()) throw UsageError("--input is required");
  if (config.model_path.empty()) throw ConfigError("model_path", "--model-path is required");
  const Vocab vocab = require_vocab(config);
  const auto segments = read_segments_jsonl(inv.input, vocab);
  BaselineModel model = BaselineModel::train(segments, config.alpha);
  model.set_max_length(config.max_len);
  model.save(config.model_path);
  out << "trained baseline on " << segments.size() << " segments: " << model.unigrams().size()
      << " unigram and " << model.trigrams().size() << " trigram contexts; majority "
      << to_string(model.majority_punct()) << "/" << to_string(model.majority_cap()) << '\n';
  if (!inv.json_path.empty()) {
    nlohmann::ordered_json j;
    j["segments"] = segments.size();
    j["unigrams"] = model.unigrams().size();
    j["trigrams"] = model.trigrams().size();
    j["model_path"] = config.model_path;
    write_file(inv.json_path, j.dump() + "\n");
  }
  return kExitOk;
}

int cmd_evaluate(const Invocation& inv, const Config& config, std::ostream& out) {
  if (inv.input.empty()) throw UsageError("--input is required");
  const Vocab vocab = require_vocab(config);
  const auto segments = read_segments_jsonl(inv.input, vocab);
  const auto backend = make_backend(config, &segments);
  const EvalResult result = evaluate(*backend, segments);
  nlohmann::ordered_json j;
  j["model_name"] = backend->model_name();
  j["segments"] = segments.size();
  for (const auto* report : {&result.punct, &result.caps}) {
    if (!*report) continue;
    (*report)->print(out);
    out << '\n';
    j[(*report)->task] = nlohmann::ordered_json::parse((*report)->to_json());
    if (!inv.confusion_csv.empty()) {
      write_file(inv.confusion_csv + "_" + (*report)->task + ".csv",
                 (*report)->confusion.to_csv());
    }
  }
  if (!inv.json_path.empty()) write_file(inv.json_path, j.dump() + "\n");
  return kExitOk;
}

int cmd_bench(const Invocation& inv, const Config& config, std::ostream& out) {
  if (inv.input.empty()) throw UsageError("--input is required");
  if (inv.n == 0) throw UsageError("-n must be at least 1");
  const Vocab vocab = require_vocab(config);
  const auto segments = read_segments_jsonl(inv.input, vocab);
  const auto backend = make_backend(config, &segments);
  std::vector<std::vector<Token>> examples;
  for (const auto& s : segments) examples.push_back(s.tokens);
  const BenchReport report = bench(*backend, examples, inv.n);
  report.print(out);
  if (!inv.json_path.empty()) write_file(inv.json_path, report.to_json() + "\n");
  return kExitOk;
}

int cmd_correct(const Invocation& inv, const Config& config, std::istream& in,
                std::ostream& out) {
  const Vocab vocab = require_vocab(config);
  std::string text;
  if (!inv.text.empty()) {
    text = inv.text;
  } else if (!inv.input.empty() && inv.input != "-") {
    std::ifstream f(inv.input, std::ios::binary);
    if (!f) throw IoError("cannot open " + inv.input);
    std::stringstream buf;
    buf << f.rdbuf();
    text = buf.str();
  } else {
    std::stringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  if (!is_valid_utf8(text)) decode_utf8(text);
  if (text.empty()) return kExitOk;
  const auto backend = make_backend(config, nullptr);
  const ReconstructMode mode = config.strict ? ReconstructMode::Strict : ReconstructMode::Lenient;
  // Buffer everything so a failure leaves stdout empty.
  std::string result;
  std::istringstream lines(text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    if (!first) result += '\n';
    first = false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    result += correct_paragraph(line, vocab, *backend, config.content_budget(), config.render,
                                mode);
  }
  if (!text.empty() && text.back() == '\n') result += '\n';
  out << result;
  return kExitOk;
}

int cmd_serve(const Invocation& inv, const Config& config, std::ostream& err) {
  const Vocab vocab = require_vocab(config);
  if (config.backend == BackendKind::External) {
    throw ConfigError("backend", "serve needs a local backend");
  }
  const auto backend = make_backend(config, nullptr);
  if (inv.listen == "stdio") {
    serve_stream(STDIN_FILENO, STDOUT_FILENO, *backend, &vocab);
    return kExitOk;
  }
  const Endpoint ep = Endpoint::parse(inv.listen);
  if (ep.kind != Endpoint::Kind::Tcp || (ep.host != "127.0.0.1" && ep.host != "localhost")) {
    throw ConfigError("listen", "expected stdio or 127.0.0.1:<port>");
  }
  LoopbackServer server(*backend, &vocab, ep.port);
  err << "serving " << backend->model_name() << " on " << server.endpoint().to_string() << '\n';
  server.wait();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Turkish punctuation and capitalization restoration toolkit", "noktalama"};
  app.require_subcommand(1);
  Invocation inv;
  SharedOptions shared;

  auto* prepare = app.add_subcommand("prepare", "Label a corpus and write split JSONL files");
  auto* correct = app.add_subcommand("correct", "Restore punctuation and casing of text");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a backend on labeled JSONL");
  auto* stats = app.add_subcommand("stats", "Punctuation mark distribution per split");
  auto* train = app.add_subcommand("train-baseline", "Train the trigram baseline tagger");
  auto* bench_cmd = app.add_subcommand("bench", "Time single-stream predictions");
  auto* serve = app.add_subcommand("serve", "Answer wire-protocol requests with a local backend");

  for (CLI::App* sub : {prepare, correct, evaluate_cmd, stats, train, bench_cmd, serve}) {
    sub->add_option("--config", inv.config_path, "Config file (key = value lines)");
    shared.add(sub, "--vocab", "vocab", "WordPiece vocabulary, one token per line");
    shared.add(sub, "--max-len", "max_len", "Model input limit in tokens");
    shared.add(sub, "--reserved-specials", "reserved_specials",
               "Slots reserved for delimiter tokens");
    shared.add(sub, "--seed", "seed", "Split shuffle seed");
    shared.add(sub, "--train-frac", "train_frac", "Training share");
    shared.add(sub, "--test-frac", "test_frac", "Test share");
    shared.add(sub, "--valid-frac", "valid_frac", "Validation share");
    shared.add(sub, "--backend", "backend", "baseline, external or oracle");
    shared.add(sub, "--endpoint", "endpoint", "host:port or exec:<command>");
    shared.add(sub, "--model-path", "model_path", "Baseline model JSON");
    shared.add(sub, "--timeout-ms", "timeout_ms", "External backend timeout");
    shared.add(sub, "--format", "format", "Corpus format: csv or jsonl");
    shared.add(sub, "--column", "column", "Corpus text column");
    shared.add(sub, "--alpha", "alpha", "Baseline smoothing");
    shared.add(sub, "--workers", "workers", "Worker threads for prepare");
    sub->add_flag("--strict", shared.strict, "Reject dangling continuation tokens");
    sub->add_option("--json", inv.json_path, "Also write machine-readable JSON here");
  }
  for (CLI::App* sub : {prepare, evaluate_cmd, stats, train, bench_cmd}) {
    sub->add_option("--input", inv.input, "Input file");
  }
  correct->add_option("--input", inv.input, "Text file ('-' or absent: stdin)");
  correct->add_option("text", inv.text, "Text to correct");
  prepare->add_option("--output", inv.output, "Output directory");
  evaluate_cmd->add_option("--confusion-csv", inv.confusion_csv,
                           "Write <prefix>_punct.csv and <prefix>_caps.csv");
  bench_cmd->add_option("-n", inv.n, "Number of timed examples");
  serve->add_option("--listen", inv.listen, "stdio or 127.0.0.1:<port>");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Config config;
  try {
    if (inv.config_path.empty()) {
      if (const char* env = std::getenv("NOKTALAMA_CONFIG"); env && *env) inv.config_path = env;
    }
    if (!inv.config_path.empty()) load_config_file(inv.config_path, config);
    shared.apply(config);
    config.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(inv, config, out);
    if (correct->parsed()) return cmd_correct(inv, config, in, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(inv, config, out);
    if (stats->parsed()) return cmd_stats(inv, config, out);
    if (train->parsed()) return cmd_train_baseline(inv, config, out);
    if (bench_cmd->parsed()) return cmd_bench(inv, config, out);
    if (serve->parsed()) return cmd_serve(inv, config, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cli
}  // namespace noktalama
