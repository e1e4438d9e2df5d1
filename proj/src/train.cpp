// SPDX-License-Identifier: Apache-2.0
#include "seqrec/train.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace seqrec {

template <class T>
NllResult<T> nll_loss(std::span<const Var<T>> logits, std::span<const std::vector<ItemIndex>> targets,
                      std::span<const std::vector<std::uint8_t>> masks) {
  if (logits.size() != targets.size() || logits.size() != masks.size()) {
    throw DimensionError(fmt::format("nll_loss: {} logit steps, {} target steps, {} mask steps", logits.size(),
                                     targets.size(), masks.size()));
  }
  NllResult<T> out;
  std::optional<Var<T>> total;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    std::size_t active = 0;
    for (auto m : masks[t]) active += m != 0;
    if (active == 0) continue;
    out.events += active;
    Var<T> step = softmax_nll(logits[t], std::span<const ItemIndex>(targets[t]),
                              std::span<const std::uint8_t>(masks[t]));
    total = total ? *total + step : step;
  }
  if (!total) throw DegenerateBatchError("batch has no unmasked prediction targets");
  out.loss = *total;
  return out;
}

template <class T>
NllResult<T> sequence_nll(std::span<const Var<T>> logits, const Batch& batch) {
  if (batch.steps < 2 || logits.size() != batch.steps - 1) {
    if (batch.steps < 2) throw DegenerateBatchError("batch has no unmasked prediction targets");
    throw DimensionError(fmt::format("sequence_nll: {} logit steps for a {}-step batch", logits.size(), batch.steps));
  }
  std::vector<std::vector<ItemIndex>> targets;
  std::vector<std::vector<std::uint8_t>> masks;
  for (std::size_t t = 1; t < batch.steps; ++t) {
    targets.push_back(batch.column(t));
    masks.push_back(batch.mask_column(t));
  }
  return nll_loss<T>(logits, targets, masks);
}

void LrSchedule::validate() const {
  if (!(end_lr > 0.0) || !(start_lr >= end_lr)) {
    throw ConfigError(fmt::format("learning rates must satisfy start >= end > 0, got {} and {}", start_lr, end_lr));
  }
  if (!(power > 0.0)) throw ConfigError("decay power must be positive");
  if (decay_steps == 0) throw ConfigError("decay steps must be positive");
}

double lr_at(std::uint64_t step, const LrSchedule& s) {
  if (step >= s.decay_steps) return s.end_lr;
  if (step == 0) return s.start_lr;
  const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(s.decay_steps);
  return s.end_lr + (s.start_lr - s.end_lr) * std::pow(frac, s.power);
}

template <class T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params, AdamConfig config) {
  AdamState<T> s;
  s.config = config;
  for (auto* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

template <class T>
void adam_update(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr) {
  if (state.m.size() != params.size()) throw UsageError("adam state does not match parameter list");
  for (auto* p : params) {
    if (!p->grad.all_finite()) throw TrainingError("non-finite gradient in parameter " + p->name);
  }
  state.t += 1;
  const double b1 = state.config.beta1, b2 = state.config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    auto& grad = params[k]->grad;
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double step = lr * (mi / c1) / (std::sqrt(vi / c2) + state.config.eps);
      value[i] = static_cast<T>(value[i] - step);
    }
    params[k]->zero_grad();
  }
}

template <class T>
double clip_global_norm(std::span<Parameter<T>* const> params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params)
    for (auto g : p->grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* p : params)
      for (auto& g : p->grad.values()) g = static_cast<T>(g * scale);
  }
  return norm;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (embedding_dim == 0 || hidden_dim == 0) throw ConfigError("embedding and hidden sizes must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip norm must be non-negative");
  schedule.validate();
}

template <class T>
std::vector<StepRecord> train(SequenceModel<T>& model, std::span<const Sequence> sequences, const TrainConfig& cfg,
                              const TrainHooks& hooks) {
  cfg.validate();
  if (sequences.empty()) throw ConfigError("training set is empty");
  auto params = model.parameters();
  auto adam = make_adam_state<T>(params, cfg.adam);
  std::vector<StepRecord> log;
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(sequences, cfg.batch_size, cfg.seed + epoch, true);
    for (const auto& batch : batches) {
      if (batch.steps < 2) continue;
      StepRecord rec;
      {
        Tape<T> tape;
        const auto logits = model.unroll(tape, batch);
        const auto nll = sequence_nll<T>(logits, batch);
        rec.loss_sum = nll.sum();
        rec.events = nll.events;
        rec.loss_mean = nll.mean();
        if (!std::isfinite(rec.loss_sum)) throw TrainingError(fmt::format("non-finite loss at step {}", step));
        tape.backward(nll.loss);
      }
      if (cfg.clip_norm > 0.0) clip_global_norm<T>(params, cfg.clip_norm);
      rec.step = step;
      rec.epoch = epoch;
      rec.lr = lr_at(step, cfg.schedule);
      adam_update<T>(params, adam, rec.lr);
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      ++step;
    }
    if (hooks.on_epoch) hooks.on_epoch(epoch);
  }
  return log;
}

#define SEQREC_INSTANTIATE_TRAIN(T)                                                                              \
  template NllResult<T> nll_loss(std::span<const Var<T>>, std::span<const std::vector<ItemIndex>>,               \
                                 std::span<const std::vector<std::uint8_t>>);                                    \
  template NllResult<T> sequence_nll(std::span<const Var<T>>, const Batch&);                                     \
  template AdamState<T> make_adam_state(std::span<Parameter<T>* const>, AdamConfig);                             \
  template void adam_update(std::span<Parameter<T>* const>, AdamState<T>&, double);                              \
  template double clip_global_norm(std::span<Parameter<T>* const>, double);                                      \
  template std::vector<StepRecord> train(SequenceModel<T>&, std::span<const Sequence>, const TrainConfig&,       \
                                         const TrainHooks&);

SEQREC_INSTANTIATE_TRAIN(float)
SEQREC_INSTANTIATE_TRAIN(double)

}  // namespace seqrec
