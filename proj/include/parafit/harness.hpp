#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parafit/encoder.hpp"
#include "parafit/io.hpp"
#include "parafit/kernels.hpp"
#include "parafit/loss.hpp"
#include "parafit/metrics.hpp"
#include "parafit/retrieval.hpp"
#include "parafit/trainer.hpp"

namespace parafit {

// --- individual protocols ---

struct ParaPair {
  std::string original;
  std::string paraphrase;
};

struct ParaRetrievalResult {
  double average_overlap = 0.0;
  double jaccard = 0.0;
  std::size_t support = 0;  // pairs evaluated
  std::size_t skipped = 0;  // pairs with a degenerate encoding
};

// Mean over pairs of AO@k and JS@k between the top-k image lists of the
// original and the paraphrased query.
ParaRetrievalResult eval_paraphrased_retrieval(const TextEncoder& encoder, const EmbeddingIndex& images,
                                               std::span<const ParaPair> pairs, std::size_t k = 10,
                                               kernels::Exec exec = kernels::Exec::kSerial);

struct StsPair {
  std::string a;
  std::string b;
  double gold = 0.0;
};

// Spearman between cosine(encode(a), encode(b)) and the gold scores.
double eval_sts(const TextEncoder& encoder, std::span<const StsPair> pairs);

struct VgCase {
  EmbeddingVector image;
  std::string positive;
  std::string negative;
};

struct AccuracyResult {
  double accuracy = 0.0;
  std::size_t support = 0;
  std::size_t skipped = 0;
};

AccuracyResult eval_vg(const TextEncoder& encoder, std::span<const VgCase> cases);

struct CaptionEntry {
  ItemId item_id = 0;
  std::string text;
};

struct CrossRetrievalResult {
  double text_recall = 0.0;   // image -> captions
  double image_recall = 0.0;  // caption -> images
  std::size_t text_support = 0;
  std::size_t image_support = 0;
};

// Captions are indexed by their position in `captions`; an image's gold set
// is every caption carrying its id. Images without captions are not queried.
CrossRetrievalResult eval_cross_retrieval(const TextEncoder& encoder, const EmbeddingIndex& images,
                                          std::span<const CaptionEntry> captions, std::size_t k = 5,
                                          kernels::Exec exec = kernels::Exec::kSerial);

struct ClassPrompt {
  ItemId class_id = 0;
  std::string text;
};

AccuracyResult eval_classification(const TextEncoder& encoder, std::span<const ClassPrompt> classes,
                                   std::span<const ClassificationCase> cases);

// --- evaluation data sets (directory layout, see load_eval_data) ---

struct StsTask {
  std::string name;
  std::vector<StsPair> pairs;
};

struct VgRecord {
  ItemId image = 0;
  std::string positive;
  std::string negative;
};

struct ClassifyRecord {
  ItemId image = 0;
  ItemId gold_class = 0;
};

struct EvalData {
  std::vector<IdEmbedding> images;
  std::vector<ParaPair> para_pairs;
  std::vector<StsTask> sts;
  std::vector<VgRecord> vg_r;
  std::vector<VgRecord> vg_a;
  std::vector<ClassPrompt> classes;
  std::vector<ClassifyRecord> classify;
  std::vector<CaptionEntry> captions;
};

// Files: images.pemb, para_pairs.jsonl {"original","paraphrase"},
// sts.jsonl {"task","a","b","score"}, vg_r.jsonl / vg_a.jsonl
// {"id","positive","negative"}, classes.jsonl {"class","text"},
// classify.jsonl {"id","class"}, captions.jsonl {"id","text"}.
// Every file except images.pemb is optional.
EvalData load_eval_data(const std::string& dir);
void save_eval_data(const std::string& dir, const EvalData& data);

enum class Suite : unsigned {
  kPara = 1u << 0,
  kSts = 1u << 1,
  kVg = 1u << 2,
  kRetrieval = 1u << 3,
  kClassify = 1u << 4,
  kAll = 0x1fu,
};

// "para", "sts", "vg", "retrieval", "classify", "all".
Suite parse_suite(std::string_view name);

struct EvalOptions {
  unsigned suites = static_cast<unsigned>(Suite::kAll);
  // Requested suites whose data is missing are an error unless they came from "all".
  bool strict = false;
  std::size_t para_k = 10;
  std::size_t recall_k = 5;
  kernels::Exec exec = kernels::Exec::kSerial;
};

struct EvalReport {
  std::vector<MetricValue> metrics;
  std::vector<std::pair<std::string, std::string>> metadata;

  std::optional<double> value(std::string_view name) const;
};

// Metric names: para/AO@k, para/JS@k, vg-r/acc, vg-a/acc, sts/<task>,
// sts/avg (mean of the per-task values), classify/acc, text-retrieval/R@k,
// image-retrieval/R@k.
EvalReport evaluate(const TextEncoder& encoder, const EvalData& data, const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
// Plain-text table in the column order: paraphrased retrieval, VG-R, VG-A,
// STS, classification, text retrieval, image retrieval.
std::string report_to_table(const EvalReport& report);

// --- ablation ---

struct AblationRow {
  LossConfig loss;
  std::optional<EvalReport> report;
  std::string error;
  std::size_t steps = 0;
  double first_loss = 0.0;
  double final_loss = 0.0;
};

// Trains one encoder per loss configuration from the same init and seed and
// evaluates each. A failing row records its error; the rest still run.
std::vector<AblationRow> run_ablation(std::span<const QuadrupleExample> dataset, const TrainConfig& base,
                                      const EncoderParams& init, const EvalData& eval_data,
                                      std::span<const LossConfig> configs, const EvalOptions& options = {});

std::string ablation_to_json(std::span<const AblationRow> rows);

// 64-bit FNV-1a of the config's canonical text, as hex; with
// include_loss == false the loss terms are left out, so ablation rows share it.
std::string config_hash(const TrainConfig& config, bool include_loss = true);

}  // namespace parafit
