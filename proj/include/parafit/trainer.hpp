#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "parafit/datamodel.hpp"
#include "parafit/encoder.hpp"
#include "parafit/kernels.hpp"
#include "parafit/loss.hpp"

namespace parafit {

struct AdamWOptions {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 3;
  std::size_t batch_size = 64;
  AdamWOptions adam;
  std::uint64_t seed = 0;
  LossConfig loss;
  kernels::Exec exec = kernels::Exec::kSerial;

  // Fine-tuning values reported for the full-scale CLIP runs: one epoch,
  // lr 5e-7, batch 3072, weight decay 0.001. Not useful for a from-scratch
  // desk-scale encoder.
  static TrainConfig large_batch_finetune();
};

// Throws Error(kInvalidArgument) on an out-of-range field.
void validate_train_config(const TrainConfig& config);

// base_lr * (1 + cos(pi * step / total_steps)) / 2.
double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr);

struct MomentState {
  std::vector<double> m;
  std::vector<double> v;
};

// One bias-corrected Adam step at rate `lr`, followed by the decoupled decay
// p -= lr * weight_decay * p. step_index counts from 1. Throws
// Error(kDiverged) on a non-finite gradient, leaving params untouched.
void adamw_step(std::span<double> params, std::span<const double> grads, MomentState& state,
                std::size_t step_index, double lr, const AdamWOptions& opts);

struct EncoderAdamState {
  MomentState token_table;
  MomentState projection;
};

void adamw_step(EncoderParams& params, const EncoderGrad& grads, EncoderAdamState& state,
                std::size_t step_index, double lr, const AdamWOptions& opts);

struct StepRecord {
  std::size_t step = 0;  // 0-based global step
  double lr = 0.0;
  LossBreakdown loss;
  std::size_t rows = 0;  // examples that survived encoding
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::size_t total_steps = 0;
  std::vector<ItemId> skipped;  // degenerate encodings, in encounter order
  bool aborted = false;
  std::string abort_reason;
};

struct TrainResult {
  EncoderParams params;
  TrainHistory history;
};

// Loss and encoder gradient for one batch: encode the texts the loss needs,
// evaluate the configured terms against the frozen image rows, and
// backpropagate through the encoder. Per-example backward passes may run in
// parallel; they are summed in (row, text level) order.
struct BatchGradient {
  LossBreakdown loss;
  EncoderGrad grads;
  std::vector<std::size_t> skipped;  // positions in `batch` with a degenerate encoding
  std::size_t rows = 0;
};

BatchGradient batch_loss_grad(const EncoderParams& params, std::span<const QuadrupleExample* const> batch,
                              const LossConfig& loss, kernels::Exec exec = kernels::Exec::kSerial);
BatchGradient batch_loss_grad(const EncoderParams& params, std::span<const QuadrupleExample> batch,
                              const LossConfig& loss, kernels::Exec exec = kernels::Exec::kSerial);

std::size_t steps_per_epoch(std::size_t dataset_size, std::size_t batch_size);

// Mini-batch training of the text encoder. Each epoch shuffles with the
// seeded generator and drops the final short batch. Image embeddings are
// read-only inputs. Divergence stops training and returns the last good
// parameters with history.aborted set.
TrainResult train(std::span<const QuadrupleExample> dataset, const TrainConfig& config, EncoderParams init);

}  // namespace parafit
