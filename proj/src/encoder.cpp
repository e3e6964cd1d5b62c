#include "parafit/encoder.hpp"

#include <cmath>
#include <fmt/format.h>
#include <string>
#include <unordered_map>

#include "parafit/error.hpp"
#include "parafit/rng.hpp"

namespace parafit {

void validate_params(const EncoderParams& p) {
  if (p.vocab < 1 || p.hidden < 1 || p.dim < 1) throw Error(ErrorKind::kInvalidArgument, "encoder shape must be positive");
  if (p.token_table.rows != p.vocab || p.token_table.cols != p.hidden || p.projection.rows != p.hidden ||
      p.projection.cols != p.dim) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("encoder matrices do not match V={} H={} D={}", p.vocab, p.hidden, p.dim));
  }
  for (const Matrix* m : {&p.token_table, &p.projection}) {
    for (double x : m->data) {
      if (!std::isfinite(x)) throw Error(ErrorKind::kInvalidArgument, "encoder parameter is non-finite");
    }
  }
}

TokenSequence tokenize(std::string_view text, std::uint32_t vocab) {
  if (vocab < 2) throw Error(ErrorKind::kInvalidArgument, "tokenize: vocab must be >= 2");
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    const bool word_char = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || u >= 0x80;
    if (c >= 'A' && c <= 'Z') {
      current += static_cast<char>(c - 'A' + 'a');
    } else if (word_char) {
      current += c;
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));

  TokenSequence out;
  if (words.empty()) {
    out.ids.push_back(0);
    return out;
  }
  const auto bucket = [vocab](std::string_view s) {
    return static_cast<std::uint32_t>(1 + fnv1a64(s) % (vocab - 1));
  };
  out.ids.reserve(2 * words.size() - 1);
  for (const auto& w : words) out.ids.push_back(bucket(w));
  for (std::size_t i = 0; i + 1 < words.size(); ++i) out.ids.push_back(bucket(words[i] + " " + words[i + 1]));
  return out;
}

EncoderParams init_params(std::uint64_t seed, std::uint32_t vocab, std::uint32_t hidden, std::uint32_t dim) {
  if (vocab < 1 || hidden < 1 || dim < 1) throw Error(ErrorKind::kInvalidArgument, "init_params: shapes must be >= 1");
  EncoderParams p{vocab, hidden, dim, Matrix(vocab, hidden), Matrix(hidden, dim)};
  Rng rng(seed);
  for (double& x : p.token_table.data) x = static_cast<float>(rng.uniform(-0.05, 0.05));
  for (double& x : p.projection.data) x = static_cast<float>(rng.uniform(-0.05, 0.05));
  return p;
}

EncoderActivation encode_forward(const EncoderParams& p, const TokenSequence& tokens) {
  if (tokens.ids.empty()) throw Error(ErrorKind::kInvalidArgument, "encode: empty token sequence");
  EncoderActivation act;
  act.pooled.assign(p.hidden, 0.0);
  for (std::uint32_t id : tokens.ids) {
    if (id >= p.vocab) throw Error(ErrorKind::kInvalidArgument, fmt::format("token id {} out of range", id));
    auto row = p.token_table.row(id);
    for (std::size_t h = 0; h < p.hidden; ++h) act.pooled[h] += row[h];
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.ids.size());
  for (double& x : act.pooled) x *= inv_n;

  act.projected.assign(p.dim, 0.0);
  for (std::size_t h = 0; h < p.hidden; ++h) {
    const double w = act.pooled[h];
    auto row = p.projection.row(h);
    for (std::size_t d = 0; d < p.dim; ++d) act.projected[d] += w * row[d];
  }
  act.norm = l2_norm(act.projected);
  return act;
}

EmbeddingVector encode_text(const EncoderParams& params, const TokenSequence& tokens) {
  return normalize(encode_forward(params, tokens).projected);
}

SparseEncoderGrad encode_text_grad(const EncoderParams& p, const TokenSequence& tokens,
                                   std::span<const double> upstream) {
  if (upstream.size() != p.dim) throw Error(ErrorKind::kInvalidArgument, "encode_text_grad: upstream has wrong dim");
  const EncoderActivation act = encode_forward(p, tokens);
  if (!(act.norm > 0.0) || !std::isfinite(act.norm)) {
    throw Error(ErrorKind::kDegenerateVector, "degenerate vector: zero pre-norm encoding");
  }

  // y = z / |z|  =>  dL/dz = (u - (u.y) y) / |z|
  std::vector<double> y(p.dim), grad_z(p.dim);
  for (std::size_t d = 0; d < p.dim; ++d) y[d] = act.projected[d] / act.norm;
  const double uy = dot(upstream, y);
  for (std::size_t d = 0; d < p.dim; ++d) grad_z[d] = (upstream[d] - uy * y[d]) / act.norm;

  SparseEncoderGrad g;
  g.projection = Matrix(p.hidden, p.dim);
  std::vector<double> grad_pooled(p.hidden, 0.0);
  for (std::size_t h = 0; h < p.hidden; ++h) {
    auto prow = p.projection.row(h);
    auto grow = g.projection.row(h);
    for (std::size_t d = 0; d < p.dim; ++d) grow[d] = act.pooled[h] * grad_z[d];
    grad_pooled[h] = dot(prow, grad_z);
  }

  std::unordered_map<std::uint32_t, std::size_t> counts;
  for (std::uint32_t id : tokens.ids) {
    if (counts[id]++ == 0) g.rows.push_back(id);
  }
  g.row_grads = Matrix(g.rows.size(), p.hidden);
  const double inv_n = 1.0 / static_cast<double>(tokens.ids.size());
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    const double scale = static_cast<double>(counts[g.rows[r]]) * inv_n;
    auto dst = g.row_grads.row(r);
    for (std::size_t h = 0; h < p.hidden; ++h) dst[h] = scale * grad_pooled[h];
  }
  return g;
}

void EncoderGrad::add(const SparseEncoderGrad& g) {
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    auto dst = token_table.row(g.rows[r]);
    auto src = g.row_grads.row(r);
    for (std::size_t h = 0; h < dst.size(); ++h) dst[h] += src[h];
  }
  for (std::size_t i = 0; i < projection.data.size(); ++i) projection.data[i] += g.projection.data[i];
}

HashedBowEncoder::HashedBowEncoder(EncoderParams params) : params_(std::move(params)) { validate_params(params_); }

EmbeddingVector HashedBowEncoder::encode(std::string_view text) const {
  return encode_text(params_, tokenize(text, params_.vocab));
}

}  // namespace parafit
