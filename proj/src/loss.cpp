#include "parafit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "parafit/error.hpp"

namespace parafit {

std::string_view term_name(LossTerm t) {
  switch (t) {
    case LossTerm::kL1Caption: return "L1";
    case LossTerm::kL1Para1: return "L1'";
    case LossTerm::kL1Para2: return "L1''";
    case LossTerm::kL2: return "L2";
    case LossTerm::kL3: return "L3";
  }
  return "?";
}

LossTerm parse_term(std::string_view name) {
  for (LossTerm t : kAllTerms) {
    if (term_name(t) == name) return t;
  }
  throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown loss term '{}'", name));
}

LossConfig::LossConfig(std::vector<LossTerm> terms, double temperature, bool symmetric)
    : mask_(0), temperature_(temperature), symmetric_(symmetric) {
  if (terms.empty()) throw Error(ErrorKind::kInvalidArgument, "loss config needs at least one term");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kInvalidArgument, "loss temperature must be > 0");
  }
  for (LossTerm t : terms) mask_ |= 1u << static_cast<int>(t);
}

LossConfig LossConfig::paraphrase_robust(double temperature) {
  return LossConfig({LossTerm::kL1Para2, LossTerm::kL2, LossTerm::kL3}, temperature);
}

std::vector<LossConfig> LossConfig::ablation_rows(double temperature) {
  using T = LossTerm;
  const std::vector<std::vector<T>> rows = {
      {T::kL1Caption},
      {T::kL2, T::kL3},
      {T::kL1Caption, T::kL1Para1},
      {T::kL1Caption, T::kL1Para1, T::kL1Para2},
      {T::kL1Caption, T::kL2},
      {T::kL1Para1, T::kL2},
      {T::kL1Caption, T::kL2, T::kL3},
      {T::kL1Para2, T::kL2, T::kL3},
  };
  std::vector<LossConfig> out;
  for (const auto& r : rows) out.emplace_back(r, temperature);
  return out;
}

std::vector<LossTerm> LossConfig::terms() const {
  std::vector<LossTerm> out;
  for (LossTerm t : kAllTerms) {
    if (has(t)) out.push_back(t);
  }
  return out;
}

std::string LossConfig::label() const {
  std::string out;
  for (LossTerm t : terms()) {
    if (!out.empty()) out += '+';
    out += term_name(t);
  }
  return out;
}

std::optional<double> LossBreakdown::value(LossTerm t) const {
  for (const auto& [term, v] : terms) {
    if (term == t) return v;
  }
  return std::nullopt;
}

namespace {

void check_inputs(const Matrix& a, const Matrix& b, const InfoNceOptions& opts) {
  if (a.rows == 0) throw Error(ErrorKind::kInvalidArgument, "info_nce: empty batch");
  if (a.rows != b.rows || a.cols != b.cols) throw Error(ErrorKind::kInvalidArgument, "info_nce: shape mismatch");
  if (!(opts.temperature > 0.0)) throw Error(ErrorKind::kInvalidArgument, "info_nce: temperature must be > 0");
  for (const Matrix* m : {&a, &b}) {
    for (std::size_t i = 0; i < m->rows; ++i) {
      const double n = l2_norm(m->row(i));
      if (!std::isfinite(n) || std::abs(n - 1.0) > kLossUnitTolerance) {
        throw Error(ErrorKind::kInvalidArgument, fmt::format("info_nce: row {} has norm {}", i, n));
      }
    }
  }
}

Matrix logits(const Matrix& a, const Matrix& b, const InfoNceOptions& opts) {
  Matrix s = kernels::gram(a, b, opts.exec);
  for (double& x : s.data) x /= opts.temperature;
  return s;
}

// Row-wise softmax of s (or of s^T when `columns`), written into probs in s's
// layout; returns sum over rows of (logsumexp - diagonal).
double softmax_ce(const Matrix& s, bool columns, Matrix* probs) {
  const std::size_t n = s.rows;
  const auto at = [&](std::size_t i, std::size_t j) { return columns ? s.at(j, i) : s.at(i, j); };
  double ce = 0.0;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = std::exp(at(i, j) - mx);
      sum += e[j];
    }
    ce += (mx + std::log(sum)) - at(i, i);
    if (probs) {
      for (std::size_t j = 0; j < n; ++j) {
        (columns ? probs->at(j, i) : probs->at(i, j)) = e[j] / sum;
      }
    }
  }
  return ce;
}

}  // namespace

double info_nce(const Matrix& a, const Matrix& b, const InfoNceOptions& opts) {
  check_inputs(a, b, opts);
  const Matrix s = logits(a, b, opts);
  const double n = static_cast<double>(a.rows);
  const double forward = softmax_ce(s, false, nullptr) / n;
  if (!opts.symmetric) return forward;
  const double backward = softmax_ce(s, true, nullptr) / n;
  return 0.5 * (forward + backward);
}

InfoNceResult info_nce_grad(const Matrix& a, const Matrix& b, const InfoNceOptions& opts) {
  check_inputs(a, b, opts);
  const Matrix s = logits(a, b, opts);
  const std::size_t n = a.rows;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double w = opts.symmetric ? 0.5 : 1.0;

  // dLoss/dS
  Matrix g(n, n);
  Matrix probs(n, n);
  const double forward = softmax_ce(s, false, &probs) * inv_n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g.at(i, j) = w * inv_n * (probs.at(i, j) - (i == j ? 1.0 : 0.0));
  }
  double loss = forward;
  if (opts.symmetric) {
    const double backward = softmax_ce(s, true, &probs) * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) g.at(i, j) += w * inv_n * (probs.at(i, j) - (i == j ? 1.0 : 0.0));
    }
    loss = 0.5 * (forward + backward);
  }
  for (double& x : g.data) x /= opts.temperature;

  InfoNceResult r;
  r.loss = loss;
  if (opts.exec == kernels::Exec::kParallel) {
    kernels::matmul_omp(g, b, r.grad_a);
    kernels::matmul_tn_omp(g, a, r.grad_b);
  } else {
    kernels::matmul_serial(g, b, r.grad_a);
    kernels::matmul_tn_serial(g, a, r.grad_b);
  }
  return r;
}

namespace {

struct TermOperands {
  const Matrix* left;
  const Matrix* right;
};

TermOperands operands(const Batch& batch, LossTerm t) {
  switch (t) {
    case LossTerm::kL1Caption: return {&batch.images, &batch.captions};
    case LossTerm::kL1Para1: return {&batch.images, &batch.para1};
    case LossTerm::kL1Para2: return {&batch.images, &batch.para2};
    case LossTerm::kL2: return {&batch.captions, &batch.para1};
    case LossTerm::kL3: return {&batch.para1, &batch.para2};
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown loss term");
}

template <typename Fn>
auto with_term_context(LossTerm t, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("loss term {}: {}", term_name(t), e.what()));
  }
}

void add_into(Matrix& dst, const Matrix& src) {
  if (dst.rows != src.rows || dst.cols != src.cols) dst = Matrix(src.rows, src.cols);
  for (std::size_t i = 0; i < src.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

LossBreakdown total_loss(const Batch& batch, const LossConfig& config, kernels::Exec exec) {
  const InfoNceOptions opts{config.temperature(), config.symmetric(), exec};
  LossBreakdown out;
  for (LossTerm t : config.terms()) {
    const auto [l, r] = operands(batch, t);
    const double v = with_term_context(t, [&] { return info_nce(*l, *r, opts); });
    out.terms.emplace_back(t, v);
    out.total += v;
  }
  return out;
}

TotalLossGrad total_loss_grad(const Batch& batch, const LossConfig& config, kernels::Exec exec) {
  const InfoNceOptions opts{config.temperature(), config.symmetric(), exec};
  TotalLossGrad out;
  const auto text_slot = [&](const Matrix* m) -> Matrix* {
    if (m == &batch.captions) return &out.grad_captions;
    if (m == &batch.para1) return &out.grad_para1;
    if (m == &batch.para2) return &out.grad_para2;
    return nullptr;
  };
  for (LossTerm t : config.terms()) {
    const auto [l, r] = operands(batch, t);
    InfoNceResult res = with_term_context(t, [&] { return info_nce_grad(*l, *r, opts); });
    out.breakdown.terms.emplace_back(t, res.loss);
    out.breakdown.total += res.loss;
    if (Matrix* dst = text_slot(l)) add_into(*dst, res.grad_a);
    if (Matrix* dst = text_slot(r)) add_into(*dst, res.grad_b);
  }
  return out;
}

}  // namespace parafit
