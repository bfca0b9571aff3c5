// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/demucs.hpp"

#include <cmath>
#include <stdexcept>

#include "finsep/errors.hpp"
#include "finsep/ops.hpp"

namespace finsep::demucs {

using numcore::BiLstmParams;
using numcore::Conv1dOpts;
using numcore::LstmDirParams;
using numcore::Tape;
using numcore::Tensor;
using numcore::Var;
using numcore::VarMap;

void DemucsConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("demucs: depth must be >= 1");
  if (channels < 1) throw std::invalid_argument("demucs: channels must be >= 1");
  if (kernel < 1 || stride < 1 || stride > kernel)
    throw std::invalid_argument("demucs: need 1 <= stride <= kernel");
  if (context < 1 || context % 2 == 0)
    throw std::invalid_argument("demucs: context kernel must be odd");
  if (audio_channels != 1) throw std::invalid_argument("demucs: this build is mono");
  if (n_sources != 2) throw std::invalid_argument("demucs: this build separates two sources");
  if (lstm_layers < 1) throw std::invalid_argument("demucs: needs at least one LSTM layer");
}

int64_t valid_length(int64_t L, const DemucsConfig& cfg) {
  if (L < 1) throw std::invalid_argument("valid_length: length must be >= 1");
  int64_t l = L;
  for (int64_t i = 0; i < cfg.depth; ++i) {
    const int64_t num = l - cfg.kernel;
    l = num <= 0 ? 1 : (num + cfg.stride - 1) / cfg.stride + 1;  // ceil
  }
  for (int64_t i = 0; i < cfg.depth; ++i) l = (l - 1) * cfg.stride + cfg.kernel;
  return l;
}

namespace {
std::string enc_name(int64_t i) { return "encoder" + std::to_string(i); }
std::string dec_name(int64_t i) { return "decoder" + std::to_string(i); }
}  // namespace

DemucsModel::DemucsModel(DemucsConfig cfg, uint64_t seed) : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  Rng rng(seed);
  const int64_t H = cfg_.lstm_hidden();

  auto conv_param = [&](const std::string& name, int64_t co, int64_t ci, int64_t k) {
    Tensor w({co, ci, k});
    numcore::init_uniform_fan_in(w, ci * k, rng);
    params_.add(name + ".weight", std::move(w));
    Tensor b({co});
    numcore::init_uniform_fan_in(b, ci * k, rng);
    params_.add(name + ".bias", std::move(b));
  };
  auto tconv_param = [&](const std::string& name, int64_t ci, int64_t co, int64_t k) {
    Tensor w({ci, co, k});
    numcore::init_uniform_fan_in(w, ci * k, rng);
    params_.add(name + ".weight", std::move(w));
    Tensor b({co});
    numcore::init_uniform_fan_in(b, ci * k, rng);
    params_.add(name + ".bias", std::move(b));
  };

  for (int64_t i = 1; i <= cfg_.depth; ++i) {
    const int64_t ci = i == 1 ? cfg_.audio_channels : cfg_.layer_channels(i - 1);
    const int64_t co = cfg_.layer_channels(i);
    conv_param(enc_name(i) + ".conv", co, ci, cfg_.kernel);
    conv_param(enc_name(i) + ".expand", 2 * co, co, 1);
  }

  for (int64_t l = 0; l < cfg_.lstm_layers; ++l) {
    const int64_t in_size = l == 0 ? H : 2 * H;
    for (int d = 0; d < 2; ++d) {
      const std::string pre = "lstm.l" + std::to_string(l) + (d == 0 ? ".f" : ".b");
      Tensor wih({4 * H, in_size});
      numcore::init_uniform_fan_in(wih, in_size, rng);
      params_.add(pre + ".w_ih", std::move(wih));
      Tensor whh({4 * H, H});
      numcore::init_uniform_fan_in(whh, H, rng);
      params_.add(pre + ".w_hh", std::move(whh));
      Tensor bih = Tensor::zeros({4 * H});
      for (int64_t i = 0; i < H; ++i) bih[H + i] = 1.0;  // forget-gate bias
      params_.add(pre + ".b_ih", std::move(bih));
      params_.add(pre + ".b_hh", Tensor::zeros({4 * H}));
    }
  }
  Tensor lin({H, 2 * H});
  numcore::init_uniform_fan_in(lin, 2 * H, rng);
  params_.add("bottleneck.weight", std::move(lin));
  params_.add("bottleneck.bias", Tensor::zeros({H}));

  for (int64_t i = cfg_.depth; i >= 1; --i) {
    const int64_t ci = cfg_.layer_channels(i);
    const int64_t co = i > 1 ? cfg_.layer_channels(i - 1) : cfg_.n_sources * cfg_.audio_channels;
    conv_param(dec_name(i) + ".conv", 2 * ci, ci, cfg_.context);
    tconv_param(dec_name(i) + ".tconv", ci, co, cfg_.kernel);
  }
}

DemucsModel::Encoded DemucsModel::encode_graph(Tape& tape, const VarMap& vars, Var x) const {
  const Tensor& xv = tape.val(x);
  if (xv.rank() != 3 || xv.dim(0) != 1 || xv.dim(1) != cfg_.audio_channels)
    throw std::invalid_argument("demucs: encoder input must be [1, audio_channels, L]");

  Encoded enc;
  Var cur = x;
  int64_t len = xv.dim(2);
  for (int64_t i = 1; i <= cfg_.depth; ++i) {
    if (len < cfg_.kernel) throw std::runtime_error("demucs: input too short for encoder depth");
    Conv1dOpts opts;
    opts.stride = cfg_.stride;
    cur = numcore::conv1d(cur, vars.at(enc_name(i) + ".conv.weight"),
                          vars.at(enc_name(i) + ".conv.bias"), opts);
    cur = numcore::relu(cur);
    cur = numcore::conv1d(cur, vars.at(enc_name(i) + ".expand.weight"),
                          vars.at(enc_name(i) + ".expand.bias"));
    cur = numcore::glu(cur);
    enc.skips.push_back(cur);
    len = tape.val(cur).dim(2);
  }
  enc.latent = cur;
  return enc;
}

Var DemucsModel::bottleneck_graph(Tape& tape, const VarMap& vars, Var latent) const {
  const Tensor& lv = tape.val(latent);
  const int64_t H = cfg_.lstm_hidden();
  if (lv.rank() != 3 || lv.dim(1) != H)
    throw std::invalid_argument("demucs: bottleneck input channels must equal the LSTM hidden size");

  BiLstmParams lstm;
  lstm.hidden = H;
  for (int64_t l = 0; l < cfg_.lstm_layers; ++l) {
    std::array<LstmDirParams, 2> layer;
    for (int d = 0; d < 2; ++d) {
      const std::string pre = "lstm.l" + std::to_string(l) + (d == 0 ? ".f" : ".b");
      layer[static_cast<size_t>(d)] = {vars.at(pre + ".w_ih"), vars.at(pre + ".w_hh"),
                                       vars.at(pre + ".b_ih"), vars.at(pre + ".b_hh")};
    }
    lstm.layers.push_back(layer);
  }
  Var y = numcore::bilstm(latent, lstm);
  return numcore::linear(y, vars.at("bottleneck.weight"), vars.at("bottleneck.bias"));
}

Var DemucsModel::decode_graph(Tape& tape, const VarMap& vars, Var latent,
                              const std::vector<Var>& skips) const {
  if (static_cast<int64_t>(skips.size()) != cfg_.depth)
    throw std::invalid_argument("demucs: need one skip per encoder layer");
  Var cur = latent;
  for (int64_t i = cfg_.depth; i >= 1; --i) {
    Var skip = skips[static_cast<size_t>(i - 1)];
    if (!tape.val(skip).same_shape(tape.val(cur)))
      throw std::invalid_argument("demucs: skip shape mismatch at decoder level " +
                                  std::to_string(i));
    cur = numcore::add(cur, skip);
    Conv1dOpts copts;
    copts.padding = (cfg_.context - 1) / 2;
    cur = numcore::conv1d(cur, vars.at(dec_name(i) + ".conv.weight"),
                          vars.at(dec_name(i) + ".conv.bias"), copts);
    cur = numcore::glu(cur);
    cur = numcore::conv1d_transpose(cur, vars.at(dec_name(i) + ".tconv.weight"),
                                    vars.at(dec_name(i) + ".tconv.bias"), cfg_.stride);
    if (i > 1) cur = numcore::relu(cur);  // final layer stays signed
  }
  return cur;
}

std::pair<Var, Var> DemucsModel::build_graph(Tape& tape, const VarMap& vars,
                                             const Tensor& mixture_chunk) const {
  if (mixture_chunk.rank() != 1 || mixture_chunk.numel() < 1)
    throw std::invalid_argument("demucs: mixture chunk must be a nonempty vector");
  const int64_t T = mixture_chunk.numel();
  const int64_t Lp = valid_length(T, cfg_);

  Tensor x({1, cfg_.audio_channels, Lp});
  for (int64_t i = 0; i < T; ++i) x[i] = mixture_chunk[i];
  Var xv = tape.leaf(std::move(x), false);

  Encoded enc = encode_graph(tape, vars, xv);
  Var mid = bottleneck_graph(tape, vars, enc.latent);
  Var out = decode_graph(tape, vars, mid, enc.skips);

  std::vector<Var> srcs;
  for (int64_t s = 0; s < cfg_.n_sources; ++s) {
    Var y = numcore::slice_channels(out, s * cfg_.audio_channels, cfg_.audio_channels);
    y = numcore::slice_time(y, 0, T);
    srcs.push_back(numcore::reshape(y, {T}));
  }
  return {srcs[0], srcs[1]};
}

void DemucsModel::zero_biases() {
  for (auto& [name, t] : params_.items()) {
    const bool is_bias = name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
    const bool is_lstm_bias = name.find(".b_ih") != std::string::npos ||
                              name.find(".b_hh") != std::string::npos;
    if (is_bias || is_lstm_bias)
      for (double& v : t.vec()) v = 0.0;
  }
}

numcore::Checkpoint DemucsModel::to_checkpoint(const std::string& dtype) const {
  numcore::Checkpoint c;
  c.arch = arch_;
  c.set_meta("seed", std::to_string(seed_));
  c.set_meta("sample_rate", std::to_string(sample_rate));
  c.set_meta("depth", std::to_string(cfg_.depth));
  c.set_meta("channels", std::to_string(cfg_.channels));
  c.set_meta("kernel", std::to_string(cfg_.kernel));
  c.set_meta("stride", std::to_string(cfg_.stride));
  c.set_meta("context", std::to_string(cfg_.context));
  c.set_meta("audio_channels", std::to_string(cfg_.audio_channels));
  c.set_meta("n_sources", std::to_string(cfg_.n_sources));
  c.set_meta("lstm_layers", std::to_string(cfg_.lstm_layers));
  for (const auto& [name, t] : params_.items())
    c.arrays.push_back({name, dtype, t.shape(), t.vec()});
  return c;
}

std::unique_ptr<DemucsModel> from_checkpoint(const numcore::Checkpoint& c) {
  if (c.arch != "demucs") throw IoError("corrupt checkpoint: architecture is not demucs");
  DemucsConfig cfg;
  cfg.depth = std::stoll(c.meta_at("depth"));
  cfg.channels = std::stoll(c.meta_at("channels"));
  cfg.kernel = std::stoll(c.meta_at("kernel"));
  cfg.stride = std::stoll(c.meta_at("stride"));
  cfg.context = std::stoll(c.meta_at("context"));
  cfg.audio_channels = std::stoll(c.meta_at("audio_channels"));
  cfg.n_sources = std::stoll(c.meta_at("n_sources"));
  cfg.lstm_layers = std::stoll(c.meta_at("lstm_layers"));
  auto model = std::make_unique<DemucsModel>(cfg, std::stoull(c.meta_at("seed")));
  model->sample_rate = std::stoi(c.meta_at("sample_rate"));
  for (auto& [name, t] : model->params().items()) {
    const numcore::CheckpointArray* a = c.find(name);
    if (!a || a->shape != t.shape())
      throw IoError("corrupt checkpoint: parameter " + name + " missing or mis-shaped");
    t = Tensor(a->shape, a->data);
  }
  return model;
}

EncodedTensors encode(const Tensor& x, const DemucsModel& m) {
  Tape tape;
  VarMap vars = m.params().leaves(tape, false);
  auto enc = m.encode_graph(tape, vars, tape.leaf(x, false));
  EncodedTensors out;
  out.latent = tape.val(enc.latent);
  for (Var s : enc.skips) out.skips.push_back(tape.val(s));
  return out;
}

Tensor bottleneck(const Tensor& latent, const DemucsModel& m) {
  Tape tape;
  VarMap vars = m.params().leaves(tape, false);
  return tape.val(m.bottleneck_graph(tape, vars, tape.leaf(latent, false)));
}

Tensor decode(const Tensor& latent, const std::vector<Tensor>& skips, const DemucsModel& m) {
  Tape tape;
  VarMap vars = m.params().leaves(tape, false);
  std::vector<Var> skip_vars;
  for (const Tensor& s : skips) skip_vars.push_back(tape.leaf(s, false));
  return tape.val(m.decode_graph(tape, vars, tape.leaf(latent, false), skip_vars));
}

std::pair<audio::Waveform, audio::Waveform> forward(const audio::Waveform& mixture,
                                                    const DemucsModel& m,
                                                    const audio::ChunkSpec& spec) {
  return separate_waveform(m, mixture, spec);
}

}  // namespace finsep::demucs
