// Command-line front end: synth, paraphrase, train, eval, ablate.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "parafit/error.hpp"
#include "parafit/harness.hpp"
#include "parafit/http_rewriter.hpp"
#include "parafit/io.hpp"
#include "parafit/paragen.hpp"
#include "parafit/rng.hpp"
#include "parafit/synth.hpp"
#include "parafit/trainer.hpp"

namespace fs = std::filesystem;
using namespace parafit;

namespace {

struct ParaphraseArgs {
  std::string in, lexicon, out, rewriter_url;
  std::uint64_t seed = 0;
  int timeout_ms = 30000;
  int retries = 3;
  int concurrency = 4;
};

int run_paraphrase(const ParaphraseArgs& a) {
  const LoadedCorpus corpus = load_corpus(a.in);
  for (const auto& w : corpus.warnings) spdlog::warn("{}: {}", a.in, w);
  std::vector<CaptionRecord> records;
  for (const auto& r : corpus.records) records.push_back({r.id, {}, r.caption});

  std::unique_ptr<Rewriter> rewriter;
  if (!a.rewriter_url.empty()) {
    HttpRewriterOptions opts;
    opts.url = a.rewriter_url;
    opts.timeout = std::chrono::milliseconds(a.timeout_ms);
    opts.retries = a.retries;
    rewriter = std::make_unique<HttpRewriter>(opts);
  } else {
    if (a.lexicon.empty()) throw Error(ErrorKind::kInvalidArgument, "--lexicon is required for the rule rewriter");
    rewriter = std::make_unique<RuleRewriter>(Lexicon::load(a.lexicon));
  }
  const GenerationResult gen = generate_quadruples(records, *rewriter, a.seed, a.concurrency);
  std::vector<CorpusRecord> out;
  for (const auto& q : gen.examples) out.push_back({q.item_id, q.caption, q.paraphrase1, q.paraphrase2});
  save_corpus(a.out, out);
  spdlog::info("paraphrase: wrote {} records, skipped {}", out.size(), gen.skipped.size());
  return 0;
}

std::vector<QuadrupleExample> load_training_set(const std::string& corpus_path, const std::string& emb_path) {
  const LoadedCorpus corpus = load_corpus(corpus_path);
  for (const auto& w : corpus.warnings) spdlog::warn("{}: {}", corpus_path, w);
  auto examples = join_corpus(corpus.records, load_embeddings(emb_path));
  const auto violations = validate_corpus(examples);
  if (!violations.empty()) {
    for (const auto& v : violations) spdlog::error("corpus: {}", v.message);
    throw Error(ErrorKind::kInvalidArgument, fmt::format("corpus has {} violations", violations.size()));
  }
  return examples;
}

EncoderParams initial_params(const RunConfig& rc, const std::vector<QuadrupleExample>& examples) {
  if (examples.empty()) throw Error(ErrorKind::kInvalidArgument, "empty training corpus");
  return init_params(rc.init_seed, rc.vocab_size, rc.hidden_dim,
                     static_cast<std::uint32_t>(examples.front().image_embedding.dim()));
}

struct TrainArgs {
  std::string corpus, embeddings, config, out, history;
};

int run_train(const TrainArgs& a) {
  const RunConfig rc = load_run_config(a.config);
  kernels::set_threads(rc.threads);
  const auto examples = load_training_set(a.corpus, a.embeddings);
  TrainResult result = train(examples, rc.train, initial_params(rc, examples));
  if (!a.history.empty()) write_file_atomic(a.history, serialize_history(result.history));
  if (result.history.aborted) {
    throw Error(ErrorKind::kDiverged, "training aborted: " + result.history.abort_reason);
  }
  save_checkpoint(a.out, result.params);
  spdlog::info("train: {} steps, final loss {:.6f}", result.history.steps.size(),
               result.history.steps.empty() ? 0.0 : result.history.steps.back().loss.total);
  return 0;
}

void check_image_dim(const EvalData& data, std::uint32_t dim, const std::string& what) {
  if (!data.images.empty() && data.images.front().second.dim() != dim) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("{} produces {}-d embeddings but the images are {}-d", what,
                                                         dim, data.images.front().second.dim()));
  }
}

struct EvalArgs {
  std::string checkpoint, suite = "all", data, out, table;
  int threads = 0;
};

int run_eval(const EvalArgs& a) {
  const std::string ckpt_bytes = read_file(a.checkpoint);
  const HashedBowEncoder encoder(parse_checkpoint(ckpt_bytes));
  const EvalData data = load_eval_data(a.data);
  check_image_dim(data, encoder.params().dim, "checkpoint " + a.checkpoint);
  EvalOptions opts;
  opts.suites = static_cast<unsigned>(parse_suite(a.suite));
  opts.strict = a.suite != "all";
  if (a.threads > 0) {
    kernels::set_threads(a.threads);
    opts.exec = kernels::Exec::kParallel;
  }
  EvalReport report = evaluate(encoder, data, opts);
  report.metadata.emplace_back("checkpoint_hash", fmt::format("{:016x}", fnv1a64(ckpt_bytes)));
  report.metadata.emplace_back("suite", a.suite);
  report.metadata.emplace_back("data", fs::path(a.data).filename().string());
  write_file_atomic(a.out, report_to_json(report));
  if (!a.table.empty()) write_file_atomic(a.table, report_to_table(report));
  std::fputs(report_to_table(report).c_str(), stdout);
  return 0;
}

struct AblateArgs {
  std::string corpus, embeddings, config, out, data;
};

int run_ablate(const AblateArgs& a) {
  const RunConfig rc = load_run_config(a.config);
  kernels::set_threads(rc.threads);
  const auto examples = load_training_set(a.corpus, a.embeddings);
  EvalData eval;
  EvalOptions opts;
  if (!a.data.empty()) {
    eval = load_eval_data(a.data);
    if (!examples.empty()) {
      check_image_dim(eval, static_cast<std::uint32_t>(examples.front().image_embedding.dim()), "the training images");
    }
  } else {
    // In-sample paraphrase agreement over the training items.
    for (const auto& q : examples) {
      eval.images.emplace_back(q.item_id, q.image_embedding);
      eval.para_pairs.push_back({q.paraphrase1, q.paraphrase2});
    }
    opts.suites = static_cast<unsigned>(Suite::kPara);
  }
  const auto rows = LossConfig::ablation_rows(rc.train.loss.temperature());
  const auto results = run_ablation(examples, rc.train, initial_params(rc, examples), eval, rows, opts);
  write_file_atomic(a.out, ablation_to_json(results));
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::fputs(fmt::format("{:<16} {}", r.loss.label(), r.report ? report_to_table(*r.report) : "error: " + r.error + "\n").c_str(), stdout);
    failed += r.report ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

struct SynthArgs {
  std::size_t items = 2000;
  std::size_t heldout = 0;
  std::uint32_t dim = 32;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  SynthOptions opt;
  opt.items = a.items;
  opt.heldout = a.heldout ? a.heldout : a.items / 5;
  opt.dim = a.dim;
  opt.seed = a.seed;
  write_synth_corpus(a.out, make_synth_corpus(opt));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paraphrase-robust contrastive fine-tuning toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  ParaphraseArgs pa;
  auto* para = app.add_subcommand("paraphrase", "Generate two-step paraphrases for a caption corpus");
  para->add_option("--in", pa.in, "Input corpus (JSON lines)")->required()->check(CLI::ExistingFile);
  para->add_option("--lexicon", pa.lexicon, "Synonym lexicon")->check(CLI::ExistingFile);
  para->add_option("--seed", pa.seed, "Seed for the rule rewriter");
  para->add_option("--out", pa.out, "Output corpus")->required();
  para->add_option("--rewriter-url", pa.rewriter_url, "Use an external HTTP rewriter instead of the rule engine");
  para->add_option("--timeout-ms", pa.timeout_ms, "External rewriter timeout");
  para->add_option("--retries", pa.retries, "External rewriter retries");
  para->add_option("--concurrency", pa.concurrency, "Concurrent rewriter requests");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train the text encoder");
  tr->add_option("--corpus", ta.corpus)->required()->check(CLI::ExistingFile);
  tr->add_option("--embeddings", ta.embeddings)->required()->check(CLI::ExistingFile);
  tr->add_option("--config", ta.config)->required()->check(CLI::ExistingFile);
  tr->add_option("--out", ta.out, "Checkpoint path")->required();
  tr->add_option("--history", ta.history, "Per-step history (JSON lines)");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ea.checkpoint)->required();
  ev->add_option("--suite", ea.suite)->check(CLI::IsMember({"para", "sts", "vg", "retrieval", "classify", "all"}));
  ev->add_option("--data", ea.data, "Evaluation data directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--out", ea.out, "Report (JSON)")->required();
  ev->add_option("--table", ea.table, "Also write the plain-text table here");
  ev->add_option("--threads", ea.threads, "Parallel evaluation with this many threads");

  AblateArgs aa;
  auto* ab = app.add_subcommand("ablate", "Train and evaluate every ablation loss configuration");
  ab->add_option("--corpus", aa.corpus)->required()->check(CLI::ExistingFile);
  ab->add_option("--embeddings", aa.embeddings)->required()->check(CLI::ExistingFile);
  ab->add_option("--config", aa.config)->required()->check(CLI::ExistingFile);
  ab->add_option("--out", aa.out)->required();
  ab->add_option("--data", aa.data, "Evaluation data directory (default: in-sample paraphrase pairs)")
      ->check(CLI::ExistingDirectory);

  SynthArgs sa;
  auto* sy = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  sy->add_option("--items", sa.items)->check(CLI::Range(2, 10000000));
  sy->add_option("--heldout", sa.heldout, "Held-out items (default items/5)");
  sy->add_option("--dim", sa.dim)->check(CLI::Range(2, 4096));
  sy->add_option("--seed", sa.seed);
  sy->add_option("--out", sa.out)->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("parafit"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (*para) return run_paraphrase(pa);
    if (*tr) return run_train(ta);
    if (*ev) return run_eval(ea);
    if (*ab) return run_ablate(aa);
    if (*sy) return run_synth(sa);
  } catch (const Error& e) {
    spdlog::error("{} ({})", e.what(), to_string(e.kind()));
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
