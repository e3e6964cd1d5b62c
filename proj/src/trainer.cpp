#include "parafit/trainer.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <numeric>
#include <optional>
#include <spdlog/spdlog.h>

#include "parafit/error.hpp"
#include "parafit/rng.hpp"

namespace parafit {

TrainConfig TrainConfig::large_batch_finetune() {
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 3072;
  c.adam.learning_rate = 5e-7;
  c.adam.weight_decay = 0.001;
  return c;
}

void validate_train_config(const TrainConfig& c) {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidArgument, "train config: " + m); };
  if (c.epochs < 0) fail("epochs must be >= 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (!(c.adam.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(c.adam.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (!(c.adam.epsilon > 0.0)) fail("epsilon must be > 0");
}

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr) {
  if (total_steps < 1) throw Error(ErrorKind::kInvalidArgument, "cosine_lr: total_steps must be >= 1");
  if (step > total_steps) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("cosine_lr: step {} > total {}", step, total_steps));
  }
  if (step == total_steps) return 0.0;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void adamw_step(std::span<double> params, std::span<const double> grads, MomentState& state,
                std::size_t step_index, double lr, const AdamWOptions& opts) {
  if (step_index < 1) throw Error(ErrorKind::kInvalidArgument, "adamw_step: step_index must be >= 1");
  if (params.size() != grads.size()) throw Error(ErrorKind::kInvalidArgument, "adamw_step: shape mismatch");
  for (double g : grads) {
    if (!std::isfinite(g)) throw Error(ErrorKind::kDiverged, "diverged: non-finite gradient");
  }
  if (state.m.size() != params.size()) state.m.assign(params.size(), 0.0);
  if (state.v.size() != params.size()) state.v.assign(params.size(), 0.0);

  const double t = static_cast<double>(step_index);
  const double bc1 = 1.0 - std::pow(opts.beta1, t);
  const double bc2 = 1.0 - std::pow(opts.beta2, t);
  const double decay = lr * opts.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = opts.beta1 * state.m[i] + (1.0 - opts.beta1) * g;
    state.v[i] = opts.beta2 * state.v[i] + (1.0 - opts.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + opts.epsilon);
    params[i] -= decay * params[i];
  }
}

void adamw_step(EncoderParams& params, const EncoderGrad& grads, EncoderAdamState& state,
                std::size_t step_index, double lr, const AdamWOptions& opts) {
  for (const Matrix* g : {&grads.token_table, &grads.projection}) {
    for (double x : g->data) {
      if (!std::isfinite(x)) throw Error(ErrorKind::kDiverged, "diverged: non-finite gradient");
    }
  }
  adamw_step(params.token_table.data, grads.token_table.data, state.token_table, step_index, lr, opts);
  adamw_step(params.projection.data, grads.projection.data, state.projection, step_index, lr, opts);
}

std::size_t steps_per_epoch(std::size_t dataset_size, std::size_t batch_size) {
  return batch_size == 0 ? 0 : dataset_size / batch_size;
}

namespace {

enum Level { kCaption = 0, kPara1 = 1, kPara2 = 2 };

struct Needs {
  bool level[3] = {false, false, false};
};

Needs levels_needed(const LossConfig& loss) {
  Needs n;
  n.level[kCaption] = loss.has(LossTerm::kL1Caption) || loss.has(LossTerm::kL2);
  n.level[kPara1] = loss.has(LossTerm::kL1Para1) || loss.has(LossTerm::kL2) || loss.has(LossTerm::kL3);
  n.level[kPara2] = loss.has(LossTerm::kL1Para2) || loss.has(LossTerm::kL3);
  return n;
}

const std::string& text_at(const QuadrupleExample& ex, int level) {
  return level == kCaption ? ex.caption : level == kPara1 ? ex.paraphrase1 : ex.paraphrase2;
}

}  // namespace

BatchGradient batch_loss_grad(const EncoderParams& params, std::span<const QuadrupleExample* const> members,
                              const LossConfig& loss, kernels::Exec exec) {
  const Needs needs = levels_needed(loss);
  const std::size_t n = members.size();

  std::vector<TokenSequence> tokens(n * 3);
  std::vector<std::optional<EmbeddingVector>> enc(n * 3);
  kernels::for_each_index(n, exec, [&](std::size_t r) {
    for (int l = 0; l < 3; ++l) {
      if (!needs.level[l]) continue;
      tokens[r * 3 + l] = tokenize(text_at(*members[r], l), params.vocab);
      try {
        enc[r * 3 + l] = encode_text(params, tokens[r * 3 + l]);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateVector) throw;
      }
    }
  });

  BatchGradient out;
  out.grads = EncoderGrad::zeros_like(params);
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < n; ++r) {
    bool ok = true;
    for (int l = 0; l < 3; ++l) ok = ok && (!needs.level[l] || enc[r * 3 + l].has_value());
    (ok ? kept : out.skipped).push_back(r);
  }
  out.rows = kept.size();
  if (kept.empty()) return out;

  const std::size_t dim = params.dim;
  Batch batch;
  batch.images = Matrix(kept.size(), dim);
  Matrix* level_matrix[3] = {&batch.captions, &batch.para1, &batch.para2};
  for (int l = 0; l < 3; ++l) {
    if (needs.level[l]) *level_matrix[l] = Matrix(kept.size(), dim);
  }
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const QuadrupleExample& ex = *members[kept[k]];
    if (ex.image_embedding.dim() != dim) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("item {} image embedding has dim {}, encoder dim is {}",
                                                           ex.item_id, ex.image_embedding.dim(), dim));
    }
    std::copy(ex.image_embedding.values().begin(), ex.image_embedding.values().end(), batch.images.row(k).begin());
    for (int l = 0; l < 3; ++l) {
      if (!needs.level[l]) continue;
      auto v = enc[kept[k] * 3 + l]->values();
      std::copy(v.begin(), v.end(), level_matrix[l]->row(k).begin());
    }
  }

  TotalLossGrad lg = total_loss_grad(batch, loss, exec);
  out.loss = std::move(lg.breakdown);
  const Matrix* level_grad[3] = {&lg.grad_captions, &lg.grad_para1, &lg.grad_para2};

  std::vector<SparseEncoderGrad> partial(kept.size() * 3);
  kernels::for_each_index(kept.size(), exec, [&](std::size_t k) {
    for (int l = 0; l < 3; ++l) {
      if (level_grad[l]->rows == 0) continue;
      partial[k * 3 + l] = encode_text_grad(params, tokens[kept[k] * 3 + l], level_grad[l]->row(k));
    }
  });
  for (const auto& g : partial) {
    if (g.projection.rows != 0) out.grads.add(g);
  }
  return out;
}

BatchGradient batch_loss_grad(const EncoderParams& params, std::span<const QuadrupleExample> batch,
                              const LossConfig& loss, kernels::Exec exec) {
  std::vector<const QuadrupleExample*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return batch_loss_grad(params, ptrs, loss, exec);
}

TrainResult train(std::span<const QuadrupleExample> dataset, const TrainConfig& config, EncoderParams init) {
  validate_train_config(config);
  validate_params(init);
  if (config.batch_size == 1) spdlog::warn("train: batch_size 1 leaves no in-batch negatives");

  TrainResult result{std::move(init), {}};
  EncoderParams& params = result.params;
  TrainHistory& history = result.history;

  const std::size_t per_epoch = steps_per_epoch(dataset.size(), config.batch_size);
  const std::size_t total = per_epoch * static_cast<std::size_t>(config.epochs);
  history.total_steps = total;
  if (total == 0) return result;

  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::vector<const QuadrupleExample*> members(config.batch_size);
  EncoderAdamState adam;
  std::size_t step = 0;
  std::size_t updates = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      for (std::size_t r = 0; r < config.batch_size; ++r) members[r] = &dataset[order[b * config.batch_size + r]];
      BatchGradient bg = batch_loss_grad(params, members, config.loss, config.exec);
      for (std::size_t r : bg.skipped) {
        spdlog::warn("train: skipping item {} (degenerate encoding)", members[r]->item_id);
        history.skipped.push_back(members[r]->item_id);
      }
      if (bg.rows == 0) continue;

      const double lr = cosine_lr(step, total, config.adam.learning_rate);
      try {
        adamw_step(params, bg.grads, adam, updates + 1, lr, config.adam);
        ++updates;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDiverged) throw;
        spdlog::error("train: aborting at step {}: {}", step, e.what());
        history.aborted = true;
        history.abort_reason = e.what();
        return result;
      }
      history.steps.push_back({step, lr, std::move(bg.loss), bg.rows});
    }
  }
  return result;
}

}  // namespace parafit
