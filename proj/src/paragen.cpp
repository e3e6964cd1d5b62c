#include "parafit/paragen.hpp"

#include <algorithm>
#include <atomic>
#include <fmt/format.h>
#include <fstream>
#include <optional>
#include <spdlog/spdlog.h>
#include <sstream>
#include <thread>

#include "parafit/error.hpp"
#include "parafit/rng.hpp"

namespace parafit {

namespace {

std::string require_text(std::string_view text, const char* what) {
  if (trim(text).empty()) throw Error(ErrorKind::kInvalidArgument, fmt::format("{} must be non-empty", what));
  return std::string(text);
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// One UTF-8 code point: its byte length and whether it counts as punctuation
// (ASCII punctuation or the General Punctuation block).
struct Glyph {
  std::size_t length;
  bool punct;
};

Glyph glyph_at(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return {1, c > 0x20 && c < 0x7f && !is_ascii_alnum(static_cast<char>(c))};
  std::size_t len = (c >= 0xf0) ? 4 : (c >= 0xe0) ? 3 : (c >= 0xc0) ? 2 : 1;
  len = std::min(len, s.size() - i);
  std::uint32_t cp = 0;
  if (len == 3) {
    cp = ((c & 0x0fu) << 12) | ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 6) |
         (static_cast<unsigned char>(s[i + 2]) & 0x3fu);
  }
  return {len, cp >= 0x2000 && cp <= 0x206f};
}

std::string strip_punctuation_runs(std::string_view token) {
  std::string out;
  std::size_t i = 0;
  while (i < token.size()) {
    const Glyph g = glyph_at(token, i);
    if (!g.punct) {
      out.append(token.substr(i, g.length));
      i += g.length;
      continue;
    }
    std::size_t j = i, run = 0;
    while (j < token.size()) {
      const Glyph h = glyph_at(token, j);
      if (!h.punct) break;
      j += h.length;
      ++run;
    }
    if (run < 2) out.append(token.substr(i, j - i));
    i = j;
  }
  return out;
}

bool only_punctuation(std::string_view token) {
  for (std::size_t i = 0; i < token.size();) {
    const Glyph g = glyph_at(token, i);
    if (!g.punct) return false;
    i += g.length;
  }
  return true;
}

std::string strip_file_extension(const std::string& token) {
  const auto dot = token.rfind('.');
  if (dot == std::string::npos) return token;
  const std::size_t ext = token.size() - dot - 1;
  if (ext < 2 || ext > 4) return token;
  for (std::size_t i = dot + 1; i < token.size(); ++i) {
    if (token[i] < 'a' || token[i] > 'z') return token;
  }
  return token.substr(0, dot);
}

bool is_product_code(std::string_view token) {
  if (token.size() < 5) return false;
  bool digit = false;
  for (char c : token) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (!(c >= 'a' && c <= 'z') && c != '-' && c != '#') {
      return false;
    }
  }
  return digit;
}

}  // namespace

RewriterPrompt build_prompt_step1(std::string_view caption) {
  const std::string text = require_text(caption, "caption");
  return {PromptStep::kStep1,
          "Paraphrase the given caption \"" + text + "\" concisely while preserving the meaning.", text};
}

RewriterPrompt build_prompt_step2(std::string_view text) {
  const std::string t = require_text(text, "text");
  return {PromptStep::kStep2,
          "Paraphrase the given text \"" + t +
              "\" concisely while preserving the meaning and avoiding use of existing words.",
          t};
}

Lexicon::Lexicon(std::vector<std::vector<std::string>> groups, std::vector<NoiseRule> noise)
    : groups_(std::move(groups)), noise_(std::move(noise)) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].size() < 2) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("synonym group {} has fewer than 2 members", g));
    }
    for (auto& w : groups_[g]) {
      w = lowercase(trim(w));
      if (!index_.emplace(w, g).second) {
        throw Error(ErrorKind::kInvalidArgument, fmt::format("word '{}' appears in two synonym groups", w));
      }
    }
  }
}

Lexicon Lexicon::parse(std::istream& in) {
  std::vector<std::vector<std::string>> groups;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> group;
    std::stringstream ss(t);
    std::string word;
    while (std::getline(ss, word, ',')) {
      word = trim(word);
      if (!word.empty()) group.push_back(word);
    }
    groups.push_back(std::move(group));
  }
  return Lexicon(std::move(groups));
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open lexicon " + path);
  return parse(in);
}

std::ptrdiff_t Lexicon::group_of(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::string denoise_caption(std::string_view caption, const Lexicon& lexicon) {
  require_text(caption, "caption");
  const auto has = [&](NoiseRule r) {
    const auto& rules = lexicon.noise_rules();
    return std::find(rules.begin(), rules.end(), r) != rules.end();
  };
  const std::string lowered = lowercase(caption);
  std::vector<std::string> kept;
  for (std::string token : split_whitespace(lowered)) {
    if (has(NoiseRule::kPunctuationRun)) {
      token = strip_punctuation_runs(token);
      if (only_punctuation(token)) continue;
    }
    if (has(NoiseRule::kFileExtension)) token = strip_file_extension(token);
    if (has(NoiseRule::kProductCode) && is_product_code(token)) continue;
    if (token.empty()) continue;
    kept.push_back(std::move(token));
  }
  if (kept.empty()) return join(split_whitespace(lowered));
  return join(kept);
}

std::string diversify_paraphrase(std::string_view text, const Lexicon& lexicon, std::uint64_t seed) {
  require_text(text, "text");
  Rng rng(seed);
  std::vector<std::string> words;
  std::size_t b = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ' ') {
      words.emplace_back(text.substr(b, i - b));
      b = i + 1;
    }
  }
  for (auto& w : words) {
    const std::string key = lowercase(w);
    const auto g = lexicon.group_of(key);
    if (g < 0) continue;
    const auto& members = lexicon.groups()[static_cast<std::size_t>(g)];
    const auto own = static_cast<std::size_t>(std::find(members.begin(), members.end(), key) - members.begin());
    std::size_t pick = rng.below(members.size() - 1);
    if (pick >= own) ++pick;
    w = members[pick];
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

std::string RuleRewriter::rewrite(const RewriterPrompt& prompt, std::uint64_t seed) {
  if (prompt.step == PromptStep::kStep1) return denoise_caption(prompt.source_text, lexicon_);
  return diversify_paraphrase(prompt.source_text, lexicon_, seed);
}

GenerationResult generate_quadruples(std::span<const CaptionRecord> corpus, Rewriter& rewriter,
                                     std::uint64_t seed, int concurrency) {
  struct Slot {
    std::optional<QuadrupleExample> example;
    std::string error;
  };
  std::vector<Slot> slots(corpus.size());

  const auto run_one = [&](std::size_t i) {
    const CaptionRecord& rec = corpus[i];
    const std::uint64_t record_seed = mix_seed(seed, rec.item_id);
    try {
      std::string p1 = rewriter.rewrite(build_prompt_step1(rec.caption), record_seed);
      if (trim(p1).empty()) throw Error(ErrorKind::kRewriteFailed, "step 1 returned empty text");
      std::string p2 = rewriter.rewrite(build_prompt_step2(p1), record_seed);
      if (trim(p2).empty()) throw Error(ErrorKind::kRewriteFailed, "step 2 returned empty text");
      slots[i].example = QuadrupleExample{rec.item_id, rec.image_embedding, rec.caption, std::move(p1), std::move(p2)};
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  };

  const std::size_t workers =
      rewriter.concurrent() ? std::min<std::size_t>(std::max(concurrency, 1), corpus.size()) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < corpus.size(); i = next++) run_one(i);
      });
    }
  }

  GenerationResult result;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].example) {
      result.examples.push_back(std::move(*slots[i].example));
    } else {
      spdlog::warn("paraphrase: skipping record {}: {}", corpus[i].item_id, slots[i].error);
      result.skipped.push_back({corpus[i].item_id, slots[i].error});
    }
  }
  return result;
}

}  // namespace parafit
