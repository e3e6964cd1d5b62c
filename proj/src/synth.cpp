#include "parafit/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fmt/format.h>

#include "parafit/error.hpp"
#include "parafit/rng.hpp"

namespace parafit {

const std::vector<std::vector<std::vector<std::string>>>& synth_concepts() {
  static const std::vector<std::vector<std::vector<std::string>>> kConcepts = {
      // size
      {{"small", "little", "tiny"},
       {"large", "big", "huge"},
       {"tall", "high", "lofty"},
       {"short", "low", "squat"},
       {"wide", "broad", "roomy"},
       {"narrow", "slim", "thin"}},
      // color
      {{"red", "crimson", "scarlet"},
       {"blue", "azure", "navy"},
       {"green", "emerald", "olive"},
       {"yellow", "golden", "amber"},
       {"black", "ebony", "jet"},
       {"white", "ivory", "snowy"},
       {"pink", "rose", "blush"},
       {"purple", "violet", "lilac"},
       {"orange", "tangerine", "apricot"},
       {"brown", "tan", "chestnut"},
       {"gray", "grey", "silver"}},
      // material
      {{"wooden", "timber", "oak"},
       {"metal", "steel", "iron"},
       {"plastic", "acrylic", "vinyl"},
       {"glass", "crystal", "glazed"},
       {"leather", "suede", "hide"},
       {"cotton", "linen", "fabric"},
       {"ceramic", "porcelain", "clay"},
       {"woolen", "wool", "knit"}},
      // object
      {{"mug", "cup", "beaker"},
       {"shoe", "sneaker", "trainer"},
       {"jacket", "coat", "parka"},
       {"chair", "seat", "stool"},
       {"lamp", "light", "lantern"},
       {"bag", "tote", "satchel"},
       {"table", "desk", "counter"},
       {"bottle", "flask", "jug"},
       {"hat", "cap", "beanie"},
       {"clock", "timer", "watch"},
       {"vase", "urn", "pot"},
       {"sofa", "couch", "settee"},
       {"bowl", "dish", "basin"},
       {"shirt", "tee", "top"},
       {"blanket", "throw", "quilt"},
       {"pillow", "cushion", "bolster"},
       {"box", "crate", "case"},
       {"rug", "carpet", "mat"},
       {"scarf", "shawl", "wrap"},
       {"candle", "taper", "wick"}},
  };
  return kConcepts;
}

Lexicon synth_lexicon() {
  std::vector<std::vector<std::string>> groups;
  for (const auto& slot : synth_concepts()) {
    for (const auto& g : slot) groups.push_back(g);
  }
  return Lexicon(std::move(groups));
}

namespace {

constexpr int kSlots = 4;
constexpr int kObjectSlot = 3;
constexpr int kColorSlot = 1;

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  const auto n = normalize(v);
  return {n.values().begin(), n.values().end()};
}

std::string canonical(const std::uint32_t slot[kSlots]) {
  const auto& c = synth_concepts();
  std::string out;
  for (int s = 0; s < kSlots; ++s) {
    if (s) out += ' ';
    out += c[s][slot[s]][0];
  }
  return out;
}

std::string random_case(Rng& rng, const std::string& word) {
  std::string w = word;
  switch (rng.below(3)) {
    case 0: break;
    case 1: w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0]))); break;
    default:
      for (char& ch : w) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return w;
}

std::string noise_token(Rng& rng) {
  switch (rng.below(6)) {
    case 0: return fmt::format("SKU-{:05}", rng.below(100000));
    case 1: return fmt::format("#{:06}", rng.below(1000000));
    case 2: return fmt::format("img-{:04}.jpg", rng.below(10000));
    case 3: return fmt::format("IMG{:04}.png", rng.below(10000));
    case 4: {
      static const char* kRuns[] = {"!!!", "***", "--", "???", "..."};
      return kRuns[rng.below(5)];
    }
    default: return "\xe2\x80\x94";  // em dash
  }
}

std::string noisy_caption(Rng& rng, const std::uint32_t slot[kSlots]) {
  const auto& c = synth_concepts();
  std::vector<std::string> words;
  for (int s = 0; s < kSlots; ++s) words.push_back(random_case(rng, c[s][slot[s]][0]));
  const std::size_t extra = 1 + rng.below(3);
  for (std::size_t i = 0; i < extra; ++i) {
    const std::size_t pos = 1 + rng.below(words.size());
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), noise_token(rng));
  }
  // Occasional trailing exclamation run glued onto the last word.
  if (rng.below(3) == 0) words.back() += "!!";
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

SynthCorpus make_synth_corpus(const SynthOptions& opt) {
  if (opt.items < 2 || opt.heldout >= opt.items) {
    throw Error(ErrorKind::kInvalidArgument, "synth: need items >= 2 and heldout < items");
  }
  if (opt.dim < 2) throw Error(ErrorKind::kInvalidArgument, "synth: dim must be >= 2");
  const auto& concepts = synth_concepts();
  Rng rng(opt.seed);

  std::vector<std::vector<std::vector<double>>> directions(kSlots);
  for (int s = 0; s < kSlots; ++s) {
    for (std::size_t g = 0; g < concepts[s].size(); ++g) directions[s].push_back(random_unit(rng, opt.dim));
  }

  SynthCorpus out;
  out.lexicon = synth_lexicon();
  for (std::size_t i = 0; i < opt.items; ++i) {
    SynthItem item;
    item.id = static_cast<ItemId>(i);
    std::vector<double> sum(opt.dim, 0.0);
    for (int s = 0; s < kSlots; ++s) {
      item.slot[s] = static_cast<std::uint32_t>(rng.below(concepts[s].size()));
      for (std::size_t d = 0; d < opt.dim; ++d) sum[d] += directions[s][item.slot[s]][d];
    }
    const auto latent = normalize(sum);
    item.latent.assign(latent.values().begin(), latent.values().end());
    const auto jitter = random_unit(rng, opt.dim);
    std::vector<double> img(opt.dim);
    for (std::size_t d = 0; d < opt.dim; ++d) img[d] = item.latent[d] + opt.jitter * jitter[d];
    // Round through float so the in-memory vectors equal what the file stores.
    auto unit = normalize(img);
    std::vector<double> stored(unit.values().begin(), unit.values().end());
    for (double& x : stored) x = static_cast<float>(x);

    CaptionRecord rec{item.id, EmbeddingVector::unchecked(std::move(stored)), noisy_caption(rng, item.slot)};
    out.eval.images.emplace_back(rec.item_id, rec.image_embedding);
    (i < opt.items - opt.heldout ? out.train : out.heldout).push_back(std::move(rec));
    out.items.push_back(std::move(item));
  }

  // Evaluation sets over the held-out items.
  RuleRewriter rewriter(out.lexicon);
  const GenerationResult gen = generate_quadruples(out.heldout, rewriter, mix_seed(opt.seed, 0x5eed), 1);
  const auto& held = gen.examples;
  for (const auto& q : held) out.eval.para_pairs.push_back({q.paraphrase1, q.paraphrase2});

  const auto& items = out.items;
  StsTask plain{"synth-plain", {}}, para{"synth-para", {}};
  for (std::size_t p = 0; p < opt.sts_pairs && held.size() >= 2; ++p) {
    const std::size_t a = rng.below(held.size());
    std::size_t b = rng.below(held.size() - 1);
    if (b >= a) ++b;
    const double gold = dot(items[held[a].item_id].latent, items[held[b].item_id].latent);
    plain.pairs.push_back({held[a].paraphrase1, held[b].paraphrase1, gold});
    para.pairs.push_back({held[a].paraphrase2, held[b].paraphrase1, gold});
  }
  if (!plain.pairs.empty()) {
    out.eval.sts.push_back(std::move(plain));
    out.eval.sts.push_back(std::move(para));
  }

  for (const auto& q : held) {
    const SynthItem& it = items[q.item_id];
    std::uint32_t swapped[kSlots];
    // Object swap for the relation-style set, color swap for the attribute set.
    std::copy(std::begin(it.slot), std::end(it.slot), swapped);
    swapped[kObjectSlot] = static_cast<std::uint32_t>(
        (it.slot[kObjectSlot] + 1 + rng.below(concepts[kObjectSlot].size() - 1)) % concepts[kObjectSlot].size());
    out.eval.vg_r.push_back({q.item_id, canonical(it.slot), canonical(swapped)});
    std::copy(std::begin(it.slot), std::end(it.slot), swapped);
    swapped[kColorSlot] = static_cast<std::uint32_t>(
        (it.slot[kColorSlot] + 1 + rng.below(concepts[kColorSlot].size() - 1)) % concepts[kColorSlot].size());
    out.eval.vg_a.push_back({q.item_id, canonical(it.slot), canonical(swapped)});

    out.eval.classify.push_back({q.item_id, it.slot[kObjectSlot]});
    out.eval.captions.push_back({q.item_id, q.paraphrase1});
  }
  for (std::size_t g = 0; g < concepts[kObjectSlot].size(); ++g) {
    out.eval.classes.push_back({static_cast<ItemId>(g), concepts[kObjectSlot][g][0]});
  }
  return out;
}

void write_synth_corpus(const std::string& dir, const SynthCorpus& corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<CorpusRecord> records;
  for (const auto& r : corpus.train) records.push_back({r.item_id, r.caption, std::nullopt, std::nullopt});
  save_corpus((fs::path(dir) / "corpus.jsonl").string(), records);

  std::string lex = "# synonym groups, one per line\n";
  for (const auto& g : corpus.lexicon.groups()) {
    for (std::size_t i = 0; i < g.size(); ++i) lex += (i ? "," : "") + g[i];
    lex += '\n';
  }
  write_file_atomic((fs::path(dir) / "lexicon.txt").string(), lex);
  write_file_atomic((fs::path(dir) / "train.cfg").string(), serialize_run_config(RunConfig{}));
  save_eval_data(dir, corpus.eval);
}

}  // namespace parafit
