// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "finsep/mixgen.hpp"
#include "finsep/separator.hpp"

namespace finsep::train {

struct TrainConfig {
  double learning_rate = 1e-4;
  int64_t epochs = 200;
  int64_t batch_size = 4;
  uint64_t seed = 0;
  std::string arch = "tasnet";
  std::string loss = "si_snr";          // "si_snr" | "l1"
  int64_t checkpoint_every = 1;         // epochs between state checkpoints
  mixgen::KRange k_range;
  double alpha_f = 0.1;

  void validate() const;
};

struct LossRow {
  int64_t step = 0;
  int64_t epoch = 0;
  double loss = 0.0;
  double loss_fish = 0.0;
  double loss_background = 0.0;
  double wall_ms = 0.0;
};

// Bias-corrected Adam. One state instance per model.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Updates every parameter in the store from the gradients map; call once
  // per optimization step.
  void step(numcore::ParamStore& params,
            const std::vector<std::pair<std::string, numcore::Tensor>>& grads);

  // Moments keyed like the parameter store; exposed for checkpointing.
  std::vector<std::pair<std::string, numcore::Tensor>>& m() { return m_; }
  std::vector<std::pair<std::string, numcore::Tensor>>& v() { return v_; }
  int64_t t() const { return t_; }
  void restore(std::vector<std::pair<std::string, numcore::Tensor>> m,
               std::vector<std::pair<std::string, numcore::Tensor>> v, int64_t t);

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::pair<std::string, numcore::Tensor>> m_, v_;
};

// Single-tensor Adam update, shared by the class above.
void adam_step(numcore::Tensor& param, const numcore::Tensor& grad, numcore::Tensor& m,
               numcore::Tensor& v, int64_t t, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Supplies the sample for (epoch, item). The default stream re-mixes every
// fish chunk with a seeded random background each epoch.
using SampleFn = std::function<mixgen::MixtureSample(int64_t epoch, int64_t item)>;

SampleFn make_epoch_stream(std::vector<mixgen::Frame> fish_chunks,
                           std::vector<mixgen::Frame> bg_chunks, uint64_t seed,
                           mixgen::KRange k_range, double alpha_f);

struct TrainState {
  int64_t next_epoch = 0;
  int64_t global_step = 0;
  std::vector<LossRow> history;  // rows appended this run
};

struct TrainHooks {
  // Return true to stop after the current step (used by smoke tests).
  std::function<bool(const TrainState&, const LossRow&)> after_step;
};

// Supervised loop: per step draw a batch, build the forward graph, sum the
// per-channel losses against (s0, s1), backprop, Adam-update. Deterministic
// given (seed, cfg). Throws on a non-finite loss, naming the step and batch
// keys. When out_dir is set, writes f64 state checkpoints at the cadence
// plus a log.csv.
TrainState train(GraphSeparator& model, const SampleFn& data, int64_t items_per_epoch,
                 const TrainConfig& cfg, const std::optional<std::string>& out_dir = {},
                 const TrainHooks& hooks = {});

// Resumable variant: continues from a state checkpoint produced by train().
TrainState train_resume(GraphSeparator& model, const SampleFn& data,
                        int64_t items_per_epoch, const TrainConfig& cfg,
                        const std::string& state_path,
                        const std::optional<std::string>& out_dir = {},
                        const TrainHooks& hooks = {});

// Latest state checkpoint in a directory (files named state_epochNNNN.fckpt),
// empty if none.
std::string find_latest_state(const std::string& dir);

}  // namespace finsep::train
