#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "parafit/datamodel.hpp"

namespace parafit {

struct EncoderParams {
  std::uint32_t vocab = 0;   // V, hash buckets; bucket 0 is reserved for "no words"
  std::uint32_t hidden = 0;  // H
  std::uint32_t dim = 0;     // D
  Matrix token_table;        // V x H
  Matrix projection;         // H x D

  bool operator==(const EncoderParams&) const = default;
};

// Throws Error(kInvalidArgument) if shapes disagree with (vocab, hidden, dim)
// or any entry is non-finite.
void validate_params(const EncoderParams& params);

struct TokenSequence {
  std::vector<std::uint32_t> ids;
};

// Lowercases, splits on runs of non-alphanumeric ASCII (bytes >= 0x80 are
// word characters), then emits every word followed by every adjacent word
// bigram ("w1 w2"). Each string maps to 1 + fnv1a64(s) % (V - 1). Text with
// no words yields the single id 0. Requires V >= 2.
TokenSequence tokenize(std::string_view text, std::uint32_t vocab);

// Entries uniform in [-0.05, 0.05], rounded to float so checkpoints
// round-trip exactly.
EncoderParams init_params(std::uint64_t seed, std::uint32_t vocab, std::uint32_t hidden, std::uint32_t dim);

struct EncoderActivation {
  std::vector<double> pooled;     // H, mean of token rows
  std::vector<double> projected;  // D, pooled * projection
  double norm = 0.0;              // |projected|
};

EncoderActivation encode_forward(const EncoderParams& params, const TokenSequence& tokens);

// Throws Error(kDegenerateVector) when the projected vector is zero.
EmbeddingVector encode_text(const EncoderParams& params, const TokenSequence& tokens);

// Gradient of dot(upstream, encode_text(params, tokens)). Only the distinct
// token rows that appear in the sequence are listed, in first-occurrence order.
struct SparseEncoderGrad {
  std::vector<std::uint32_t> rows;
  Matrix row_grads;   // rows.size() x H
  Matrix projection;  // H x D
};

SparseEncoderGrad encode_text_grad(const EncoderParams& params, const TokenSequence& tokens,
                                   std::span<const double> upstream);

struct EncoderGrad {
  Matrix token_table;
  Matrix projection;

  static EncoderGrad zeros_like(const EncoderParams& params) {
    return {Matrix(params.vocab, params.hidden), Matrix(params.hidden, params.dim)};
  }
  void add(const SparseEncoderGrad& g);
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual EmbeddingVector encode(std::string_view text) const = 0;
};

class HashedBowEncoder final : public TextEncoder {
 public:
  explicit HashedBowEncoder(EncoderParams params);
  EmbeddingVector encode(std::string_view text) const override;
  const EncoderParams& params() const noexcept { return params_; }

 private:
  EncoderParams params_;
};

}  // namespace parafit
