#pragma once

#include "parafit/paragen.hpp"
#include "parafit/synth.hpp"

namespace testing_util {

struct SynthRun {
  parafit::SynthCorpus corpus;
  std::vector<parafit::QuadrupleExample> train;
};

inline SynthRun synth_run(std::size_t items, std::size_t heldout, std::uint32_t dim, std::uint64_t seed) {
  parafit::SynthOptions o;
  o.items = items;
  o.heldout = heldout;
  o.dim = dim;
  o.seed = seed;
  o.sts_pairs = std::min<std::size_t>(o.sts_pairs, heldout);
  SynthRun run{parafit::make_synth_corpus(o), {}};
  parafit::RuleRewriter rules(run.corpus.lexicon);
  run.train = parafit::generate_quadruples(run.corpus.train, rules, seed).examples;
  return run;
}

}  // namespace testing_util
