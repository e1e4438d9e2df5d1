// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "seqrec/batch.hpp"
#include "seqrec/model.hpp"

namespace seqrec {

template <class T>
struct NllResult {
  Var<T> loss;  // summed negative log-likelihood
  std::size_t events = 0;
  double sum() const { return static_cast<double>(loss.value().item()); }
  double mean() const { return sum() / static_cast<double>(events); }
};

/// −Σ log softmax(o_t)[target_t] over the unmasked entries. logits[t] is
/// [rows × N_O]; targets[t] and masks[t] hold one entry per row. Throws
/// DegenerateBatchError when every mask entry is zero.
template <class T>
NllResult<T> nll_loss(std::span<const Var<T>> logits, std::span<const std::vector<ItemIndex>> targets,
                      std::span<const std::vector<std::uint8_t>> masks);

/// Next-item loss of an unrolled batch: logits[t] is scored against the item
/// at t+1 under the mask at t+1.
template <class T>
NllResult<T> sequence_nll(std::span<const Var<T>> logits, const Batch& batch);

struct LrSchedule {
  double start_lr = 0.01;
  double end_lr = 0.001;
  double power = 0.5;
  std::uint64_t decay_steps = 50000;

  void validate() const;
};

/// Polynomial decay, clamped to end_lr from decay_steps on.
double lr_at(std::uint64_t step, const LrSchedule& s);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  AdamConfig config;
  std::vector<Tensor<T>> m, v;
  std::uint64_t t = 0;
};

template <class T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params, AdamConfig config = {});

/// One bias-corrected Adam step; gradients are zeroed afterwards. A
/// non-finite gradient raises TrainingError naming the parameter and leaves
/// every parameter untouched.
template <class T>
void adam_update(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr);

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <class T>
double clip_global_norm(std::span<Parameter<T>* const> params, double max_norm);

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t embedding_dim = 100;
  std::size_t hidden_dim = 100;
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  LrSchedule schedule;
  AdamConfig adam;
  double clip_norm = 5.0;  // 0 disables clipping

  void validate() const;
};

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss_sum = 0.0;
  double loss_mean = 0.0;
  std::size_t events = 0;
  double wall_seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  /// Called after every epoch with the 0-based epoch index.
  std::function<void(std::size_t)> on_epoch;
};

/// Full-unroll BPTT over padded batches. Epoch e shuffles with seed
/// cfg.seed + e; the optimiser step counter runs across epochs.
template <class T>
std::vector<StepRecord> train(SequenceModel<T>& model, std::span<const Sequence> sequences, const TrainConfig& cfg,
                              const TrainHooks& hooks = {});

}  // namespace seqrec
