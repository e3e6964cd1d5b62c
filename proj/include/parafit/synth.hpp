#pragma once

// Seeded desk-scale corpus. Every item is a combination of four concept
// slots (size, color, material, object), each slot value being a synonym
// group. An item's image embedding is the normalized sum of random
// per-concept directions plus per-item jitter; its caption renders the
// canonical words with web-style noise (product codes, file names,
// punctuation runs, random casing). The last `heldout` items are kept out of
// the training corpus and drive the evaluation sets.

#include <cstdint>
#include <string>
#include <vector>

#include "parafit/harness.hpp"
#include "parafit/io.hpp"
#include "parafit/paragen.hpp"

namespace parafit {

struct SynthOptions {
  std::size_t items = 2000;
  std::size_t heldout = 400;
  std::uint32_t dim = 32;
  std::uint64_t seed = 0;
  double jitter = 0.5;
  std::size_t sts_pairs = 200;
};

struct SynthItem {
  ItemId id = 0;
  std::uint32_t slot[4] = {0, 0, 0, 0};
  std::vector<double> latent;  // unit, image before jitter
};

struct SynthCorpus {
  Lexicon lexicon;
  std::vector<SynthItem> items;
  std::vector<CaptionRecord> train;  // raw captions of the training items
  std::vector<CaptionRecord> heldout;
  EvalData eval;
};

// Concept slots, each a list of synonym groups; the first member of a group
// is the canonical word used in captions.
const std::vector<std::vector<std::vector<std::string>>>& synth_concepts();
Lexicon synth_lexicon();

SynthCorpus make_synth_corpus(const SynthOptions& options);

// Writes corpus.jsonl (training captions), lexicon.txt, train.cfg (desk
// defaults) and the eval data files (see load_eval_data) into `dir`.
void write_synth_corpus(const std::string& dir, const SynthCorpus& corpus);

}  // namespace parafit
