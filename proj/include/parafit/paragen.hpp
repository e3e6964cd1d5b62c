#pragma once

// Two-step paraphrase generation: caption -> plain paraphrase (step 1),
// then paraphrase -> lexically diverse paraphrase (step 2).

#include <cstdint>
#include <istream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "parafit/datamodel.hpp"

namespace parafit {

enum class PromptStep { kStep1, kStep2 };

struct RewriterPrompt {
  PromptStep step = PromptStep::kStep1;
  std::string rendered_text;
  // The text substituted into the template; kept so local rewriters do not
  // have to parse it back out of rendered_text.
  std::string source_text;
};

// Both throw Error(kInvalidArgument) if the text is empty after trimming.
RewriterPrompt build_prompt_step1(std::string_view caption);
RewriterPrompt build_prompt_step2(std::string_view text);

enum class NoiseRule {
  kPunctuationRun,  // >= 2 consecutive punctuation characters, or a token of only punctuation
  kProductCode,     // [letters digits - #] token, length >= 5, at least one digit
  kFileExtension,   // token suffix "." + 2-4 letters
};

class Lexicon {
 public:
  Lexicon() = default;
  // Throws Error(kInvalidArgument) if a word is in two groups or a group has
  // fewer than two members.
  explicit Lexicon(std::vector<std::vector<std::string>> groups,
                   std::vector<NoiseRule> noise = default_noise_rules());

  static std::vector<NoiseRule> default_noise_rules() {
    return {NoiseRule::kPunctuationRun, NoiseRule::kProductCode, NoiseRule::kFileExtension};
  }

  // One comma-separated group per line; '#' starts a comment line.
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::string& path);

  const std::vector<std::vector<std::string>>& groups() const noexcept { return groups_; }
  const std::vector<NoiseRule>& noise_rules() const noexcept { return noise_; }

  // Group index of a lowercase word, or -1.
  std::ptrdiff_t group_of(std::string_view word) const;

 private:
  std::vector<std::vector<std::string>> groups_;
  std::vector<NoiseRule> noise_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string denoise_caption(std::string_view caption, const Lexicon& lexicon);
std::string diversify_paraphrase(std::string_view text, const Lexicon& lexicon, std::uint64_t seed);

class Rewriter {
 public:
  virtual ~Rewriter() = default;
  // Throws on failure. `seed` is derived per record; remote rewriters may ignore it.
  virtual std::string rewrite(const RewriterPrompt& prompt, std::uint64_t seed) = 0;
  // Whether rewrite() may be called from several threads at once.
  virtual bool concurrent() const { return false; }
};

// Step 1 -> denoise_caption, step 2 -> diversify_paraphrase.
class RuleRewriter final : public Rewriter {
 public:
  explicit RuleRewriter(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  std::string rewrite(const RewriterPrompt& prompt, std::uint64_t seed) override;
  bool concurrent() const override { return true; }
  const Lexicon& lexicon() const noexcept { return lexicon_; }

 private:
  Lexicon lexicon_;
};

struct CaptionRecord {
  ItemId item_id = 0;
  EmbeddingVector image_embedding;
  std::string caption;
};

struct SkippedRecord {
  ItemId item_id;
  std::string reason;
};

struct GenerationResult {
  std::vector<QuadrupleExample> examples;
  std::vector<SkippedRecord> skipped;
};

// paraphrase1 = rewrite(step1(caption)); paraphrase2 = rewrite(step2(paraphrase1)).
// Output keeps input order. Failing records are skipped and logged.
GenerationResult generate_quadruples(std::span<const CaptionRecord> corpus, Rewriter& rewriter,
                                     std::uint64_t seed, int concurrency = 4);

}  // namespace parafit
