#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parafit/datamodel.hpp"
#include "parafit/encoder.hpp"
#include "parafit/paragen.hpp"
#include "parafit/trainer.hpp"

namespace parafit {

// --- Corpus: JSON lines {"id", "caption", "paraphrase1"?, "paraphrase2"?} ---

struct CorpusRecord {
  ItemId id = 0;
  std::string caption;
  std::optional<std::string> paraphrase1;
  std::optional<std::string> paraphrase2;

  bool operator==(const CorpusRecord&) const = default;
};

struct LoadedCorpus {
  std::vector<CorpusRecord> records;
  std::vector<std::string> warnings;  // e.g. empty texts; ids and syntax are hard errors
};

// Errors: kIo (cannot open), kMalformedInput (message names the 1-based line),
// kDuplicateId.
LoadedCorpus load_corpus(const std::string& path);
std::string serialize_corpus(const std::vector<CorpusRecord>& records);
void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records);

// --- Embeddings: "PEMB", u32 count, u32 dim, then (u32 id, dim x f32) records,
// all little-endian ---

using IdEmbedding = std::pair<ItemId, EmbeddingVector>;

inline constexpr double kFileUnitTolerance = 1e-4;

// Errors: kBadMagic, kTruncatedPayload, kCountMismatch (trailing records),
// kNonUnitRow, kIo.
std::vector<IdEmbedding> load_embeddings(const std::string& path);
std::vector<IdEmbedding> parse_embeddings(const std::string& bytes);
std::string serialize_embeddings(const std::vector<IdEmbedding>& entries);
void save_embeddings(const std::string& path, const std::vector<IdEmbedding>& entries);

// --- Checkpoint: "PENC", u32 V, u32 H, u32 D, token_table then projection as
// row-major f32, all little-endian ---

std::string serialize_checkpoint(const EncoderParams& params);
EncoderParams parse_checkpoint(const std::string& bytes);
EncoderParams load_checkpoint(const std::string& path);
void save_checkpoint(const std::string& path, const EncoderParams& params);

// --- Run config: "key = value" lines, '#' comments ---
//
//   preset         large-batch-finetune (applied before every other key)
//   epochs         int >= 0
//   batch_size     int >= 1
//   learning_rate  weight_decay  beta1  beta2  epsilon   reals
//   seed           shuffle seed
//   loss_terms     ["L1''","L2","L3"] or L1'',L2,L3
//   temperature    real > 0
//   symmetric      true | false
//   vocab_size  hidden_dim  init_seed   encoder shape and init
//   parallel       true | false
//   threads        OpenMP thread count, 0 = runtime default
//
// Unknown keys are errors.
struct RunConfig {
  TrainConfig train;
  std::uint32_t vocab_size = 4096;
  std::uint32_t hidden_dim = 64;
  std::uint64_t init_seed = 0;
  int threads = 0;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& config);

// One JSON object per step: {"step", "lr", <term names>..., "total", "rows"}.
std::string serialize_history(const TrainHistory& history);

std::string read_file(const std::string& path);
// Writes to a sibling temp file and renames over `path`, so a failed write
// never leaves a partial file behind.
void write_file_atomic(const std::string& path, const std::string& bytes);

// Joins a corpus carrying both paraphrase fields with embeddings by id.
// Throws kInvalidArgument for records without an embedding or paraphrases.
std::vector<QuadrupleExample> join_corpus(const std::vector<CorpusRecord>& corpus,
                                          const std::vector<IdEmbedding>& embeddings);

}  // namespace parafit
