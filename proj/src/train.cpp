// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "finsep/errors.hpp"
#include "finsep/loss.hpp"
#include "finsep/ops.hpp"

namespace finsep::train {

using numcore::Checkpoint;
using numcore::Tensor;
using numcore::Var;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (loss != "si_snr" && loss != "l1")
    throw std::invalid_argument("train: loss must be si_snr|l1");
  if (checkpoint_every < 1) throw std::invalid_argument("train: checkpoint_every must be >= 1");
  if (k_range.lo < 0.0 || k_range.hi < k_range.lo)
    throw std::invalid_argument("train: need 0 <= k_min <= k_max");
  if (!(alpha_f > 0.0)) throw std::invalid_argument("train: alpha_f must be > 0");
}

void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, int64_t t, double lr,
               double beta1, double beta2, double eps) {
  if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
    throw std::invalid_argument("adam_step: shape mismatch");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (int64_t i = 0; i < param.numel(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void Adam::step(numcore::ParamStore& params,
                const std::vector<std::pair<std::string, Tensor>>& grads) {
  if (m_.empty()) {
    for (const auto& [name, t] : params.items()) {
      m_.emplace_back(name, Tensor::zeros(t.shape()));
      v_.emplace_back(name, Tensor::zeros(t.shape()));
    }
  }
  if (grads.size() != params.size()) throw std::invalid_argument("adam: gradient list mismatch");
  ++t_;
  for (size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].first != params.items()[i].first)
      throw std::invalid_argument("adam: gradient order mismatch");
    adam_step(params.items()[i].second, grads[i].second, m_[i].second, v_[i].second, t_, lr_,
              beta1_, beta2_, eps_);
  }
}

void Adam::restore(std::vector<std::pair<std::string, Tensor>> m,
                   std::vector<std::pair<std::string, Tensor>> v, int64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

SampleFn make_epoch_stream(std::vector<mixgen::Frame> fish_chunks,
                           std::vector<mixgen::Frame> bg_chunks, uint64_t seed,
                           mixgen::KRange k_range, double alpha_f) {
  return [fish = std::move(fish_chunks), bg = std::move(bg_chunks), seed, k_range,
          alpha_f](int64_t epoch, int64_t item) {
    return mixgen::epoch_sample(epoch, item, fish, bg, seed, k_range, alpha_f);
  };
}

namespace {

std::string state_path(const std::string& dir, int64_t epoch) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "state_epoch%04lld.fckpt", static_cast<long long>(epoch));
  return dir + "/" + buf;
}

void save_state(GraphSeparator& model, Adam& adam, int64_t next_epoch, int64_t global_step,
                const std::string& dir) {
  Checkpoint c = model.to_checkpoint("f64");
  c.set_meta("trainer.next_epoch", std::to_string(next_epoch));
  c.set_meta("trainer.global_step", std::to_string(global_step));
  c.set_meta("trainer.adam_t", std::to_string(adam.t()));
  for (const auto& [name, t] : adam.m())
    c.arrays.push_back({"opt.m." + name, "f64", t.shape(), t.vec()});
  for (const auto& [name, t] : adam.v())
    c.arrays.push_back({"opt.v." + name, "f64", t.shape(), t.vec()});
  numcore::save_checkpoint(c, state_path(dir, next_epoch));
}

struct LogFile {
  std::ofstream out;

  explicit LogFile(const std::string& dir) {
    const std::string path = dir + "/log.csv";
    const bool fresh = !std::filesystem::exists(path);
    out.open(path, std::ios::app);
    if (!out) throw IoError("cannot write " + path);
    if (fresh) out << "step,epoch,loss,loss_fish,loss_background,wall_ms\n";
  }

  void write(const LossRow& r) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g,%.17g,%.3f\n",
                  static_cast<long long>(r.step), static_cast<long long>(r.epoch), r.loss,
                  r.loss_fish, r.loss_background, r.wall_ms);
    out << buf;
    out.flush();
  }
};

TrainState run_loop(GraphSeparator& model, const SampleFn& data, int64_t items_per_epoch,
                    const TrainConfig& cfg, const std::optional<std::string>& out_dir,
                    const TrainHooks& hooks, Adam& adam, int64_t start_epoch,
                    int64_t start_step) {
  cfg.validate();
  if (items_per_epoch < 1) throw std::invalid_argument("train: items_per_epoch must be >= 1");

  TrainState state;
  state.next_epoch = start_epoch;
  state.global_step = start_step;

  std::optional<LogFile> log;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    log.emplace(*out_dir);
  }

  const bool use_si_snr = cfg.loss == "si_snr";
  bool stop = false;
  const auto t0 = std::chrono::steady_clock::now();

  for (int64_t epoch = start_epoch; epoch < cfg.epochs && !stop; ++epoch) {
    for (int64_t batch_start = 0; batch_start < items_per_epoch && !stop;
         batch_start += cfg.batch_size) {
      const int64_t batch_end = std::min(items_per_epoch, batch_start + cfg.batch_size);
      const int64_t n_items = batch_end - batch_start;

      numcore::Tape tape;
      const numcore::VarMap vars = model.params().leaves(tape, true);
      Var sum_fish, sum_bg;
      for (int64_t item = batch_start; item < batch_end; ++item) {
        const mixgen::MixtureSample sample = data(epoch, item);
        const Tensor mix = Tensor::from_vector(sample.mixture);
        auto [est_fish, est_bg] = model.build_graph(tape, vars, mix);
        Var lf = use_si_snr ? si_snr_loss(est_fish, Tensor::from_vector(sample.source_fish))
                            : l1_loss(est_fish, Tensor::from_vector(sample.source_fish));
        Var lb = use_si_snr
                     ? si_snr_loss(est_bg, Tensor::from_vector(sample.source_background))
                     : l1_loss(est_bg, Tensor::from_vector(sample.source_background));
        sum_fish = sum_fish.valid() ? numcore::add(sum_fish, lf) : lf;
        sum_bg = sum_bg.valid() ? numcore::add(sum_bg, lb) : lb;
      }
      const double inv_n = 1.0 / static_cast<double>(n_items);
      Var mean_fish = numcore::scale(sum_fish, inv_n);
      Var mean_bg = numcore::scale(sum_bg, inv_n);
      Var loss = numcore::add(mean_fish, mean_bg);

      const double loss_v = tape.val(loss)[0];
      if (!std::isfinite(loss_v))
        throw std::runtime_error(
            "train: non-finite loss at step " + std::to_string(state.global_step) + " (epoch " +
            std::to_string(epoch) + ", items [" + std::to_string(batch_start) + ", " +
            std::to_string(batch_end) + "), seed " + std::to_string(cfg.seed) + ")");

      tape.backward(loss);
      std::vector<std::pair<std::string, Tensor>> grads;
      grads.reserve(model.params().size());
      for (const auto& [name, t] : model.params().items())
        grads.emplace_back(name, tape.grad(vars.at(name)));
      adam.step(model.params(), grads);

      for (const auto& [name, t] : model.params().items())
        if (!numcore::all_finite(t))
          throw std::runtime_error("train: non-finite parameter " + name + " after step " +
                                   std::to_string(state.global_step));

      LossRow row;
      row.step = state.global_step;
      row.epoch = epoch;
      row.loss = loss_v;
      row.loss_fish = tape.val(mean_fish)[0];
      row.loss_background = tape.val(mean_bg)[0];
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
      state.history.push_back(row);
      if (log) log->write(row);
      ++state.global_step;

      if (hooks.after_step && hooks.after_step(state, row)) stop = true;
    }
    state.next_epoch = stop ? state.next_epoch : epoch + 1;
    if (out_dir && !stop) {
      const bool cadence = (epoch + 1) % cfg.checkpoint_every == 0;
      if (cadence || epoch + 1 == cfg.epochs)
        save_state(model, adam, state.next_epoch, state.global_step, *out_dir);
    }
  }

  // nothing ran (epochs == start_epoch) or an early stop: still leave a state file
  if (out_dir && (cfg.epochs == start_epoch || stop))
    save_state(model, adam, state.next_epoch, state.global_step, *out_dir);
  return state;
}

}  // namespace

TrainState train(GraphSeparator& model, const SampleFn& data, int64_t items_per_epoch,
                 const TrainConfig& cfg, const std::optional<std::string>& out_dir,
                 const TrainHooks& hooks) {
  Adam adam(cfg.learning_rate);
  return run_loop(model, data, items_per_epoch, cfg, out_dir, hooks, adam, 0, 0);
}

TrainState train_resume(GraphSeparator& model, const SampleFn& data, int64_t items_per_epoch,
                        const TrainConfig& cfg, const std::string& state_path_in,
                        const std::optional<std::string>& out_dir, const TrainHooks& hooks) {
  const Checkpoint c = numcore::load_checkpoint(state_path_in);
  if (c.arch != model.arch())
    throw IoError("corrupt checkpoint: state architecture " + c.arch + " does not match " +
                  model.arch());
  std::vector<std::pair<std::string, Tensor>> m, v;
  for (auto& [name, t] : model.params().items()) {
    const numcore::CheckpointArray* a = c.find(name);
    const numcore::CheckpointArray* am = c.find("opt.m." + name);
    const numcore::CheckpointArray* av = c.find("opt.v." + name);
    if (!a || !am || !av || a->shape != t.shape())
      throw IoError("corrupt checkpoint: training state misses " + name);
    t = Tensor(a->shape, a->data);
    m.emplace_back(name, Tensor(am->shape, am->data));
    v.emplace_back(name, Tensor(av->shape, av->data));
  }
  Adam adam(cfg.learning_rate);
  adam.restore(std::move(m), std::move(v), std::stoll(c.meta_at("trainer.adam_t")));
  const int64_t next_epoch = std::stoll(c.meta_at("trainer.next_epoch"));
  const int64_t global_step = std::stoll(c.meta_at("trainer.global_step"));
  return run_loop(model, data, items_per_epoch, cfg, out_dir, hooks, adam, next_epoch,
                  global_step);
}

std::string find_latest_state(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) return "";
  std::string best;
  int64_t best_epoch = -1;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    long long epoch = -1;
    if (std::sscanf(name.c_str(), "state_epoch%lld.fckpt", &epoch) == 1 && epoch > best_epoch) {
      best_epoch = epoch;
      best = entry.path().string();
    }
  }
  return best;
}

}  // namespace finsep::train
