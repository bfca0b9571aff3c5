// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/tasnet.hpp"

#include <cmath>
#include <stdexcept>

#include "finsep/errors.hpp"
#include "finsep/ops.hpp"

namespace finsep::tasnet {

using numcore::Conv1dOpts;
using numcore::Tape;
using numcore::Tensor;
using numcore::Var;
using numcore::VarMap;

void TasNetConfig::validate() const {
  if (frame_len < 2 || frame_len % 2 != 0)
    throw std::invalid_argument("tasnet: frame_len must be even and >= 2");
  if (basis_size < 1 || bottleneck < 1 || block_channels < 1)
    throw std::invalid_argument("tasnet: channel counts must be positive");
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("tasnet: kernel must be odd (length-preserving blocks)");
  if (blocks_per_repeat < 1 || repeats < 1)
    throw std::invalid_argument("tasnet: needs at least one block");
  if (n_sources != 2) throw std::invalid_argument("tasnet: this build separates two sources");
  if (mask_nonlinearity != "sigmoid")
    throw std::invalid_argument("tasnet: mask nonlinearity must be sigmoid");
  if (norm != "gln" && norm != "none")
    throw std::invalid_argument("tasnet: norm must be gln|none");
}

int64_t receptive_field(const TasNetConfig& cfg) {
  int64_t span = 1;
  for (int64_t r = 0; r < cfg.repeats; ++r)
    for (int64_t x = 0; x < cfg.blocks_per_repeat; ++x)
      span += (cfg.kernel - 1) * (int64_t{1} << x);
  return span;
}

namespace {

std::string block_prefix(int64_t r, int64_t x) {
  return "tcn.block" + std::to_string(r) + "_" + std::to_string(x) + ".";
}

}  // namespace

TasNetModel::TasNetModel(TasNetConfig cfg, uint64_t seed) : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  Rng rng(seed);
  const int64_t L = cfg_.frame_len, M = cfg_.basis_size, B = cfg_.bottleneck;
  const int64_t H = cfg_.block_channels, P = cfg_.kernel;

  auto conv_param = [&](const std::string& name, int64_t co, int64_t ci, int64_t k) {
    Tensor w({co, ci, k});
    numcore::init_uniform_fan_in(w, ci * k, rng);
    params_.add(name + ".weight", std::move(w));
    Tensor b({co});
    numcore::init_uniform_fan_in(b, ci * k, rng);
    params_.add(name + ".bias", std::move(b));
  };
  auto norm_param = [&](const std::string& name, int64_t c) {
    params_.add(name + ".gain", Tensor::full({c}, 1.0));
    params_.add(name + ".bias", Tensor::zeros({c}));
  };
  auto prelu_param = [&](const std::string& name) {
    params_.add(name + ".slope", Tensor::full({1}, 0.25));
  };

  // encoder/decoder bases carry no bias so silence maps to silence
  Tensor enc({M, 1, L});
  numcore::init_uniform_fan_in(enc, L, rng);
  params_.add("encoder.weight", std::move(enc));
  Tensor dec({M, 1, L});
  numcore::init_uniform_fan_in(dec, M * L, rng);
  params_.add("decoder.weight", std::move(dec));

  const bool gln = cfg_.norm == "gln";
  if (gln) norm_param("tcn.norm_in", M);
  conv_param("tcn.conv_in", B, M, 1);
  for (int64_t r = 0; r < cfg_.repeats; ++r)
    for (int64_t x = 0; x < cfg_.blocks_per_repeat; ++x) {
      const std::string pre = block_prefix(r, x);
      conv_param(pre + "conv1", H, B, 1);
      prelu_param(pre + "prelu1");
      if (gln) norm_param(pre + "norm1", H);
      // depthwise: groups = H, one input channel per group
      Tensor dw({H, 1, P});
      numcore::init_uniform_fan_in(dw, P, rng);
      params_.add(pre + "dconv.weight", std::move(dw));
      Tensor db({H});
      numcore::init_uniform_fan_in(db, P, rng);
      params_.add(pre + "dconv.bias", std::move(db));
      prelu_param(pre + "prelu2");
      if (gln) norm_param(pre + "norm2", H);
      conv_param(pre + "skip", B, H, 1);
      conv_param(pre + "res", B, H, 1);
    }
  prelu_param("mask.prelu");
  conv_param("mask.conv", cfg_.n_sources * M, B, 1);
}

Var TasNetModel::mask_logits(Tape& tape, const VarMap& vars, Var z) const {
  (void)tape;
  const bool gln = cfg_.norm == "gln";
  auto p = [&](const std::string& name) -> Var { return vars.at(name); };

  Var cur = z;
  if (gln) cur = numcore::global_layer_norm(cur, p("tcn.norm_in.gain"), p("tcn.norm_in.bias"));
  cur = numcore::conv1d(cur, p("tcn.conv_in.weight"), p("tcn.conv_in.bias"));

  Var skip_sum;
  for (int64_t r = 0; r < cfg_.repeats; ++r)
    for (int64_t x = 0; x < cfg_.blocks_per_repeat; ++x) {
      const std::string pre = block_prefix(r, x);
      Var h = numcore::conv1d(cur, p(pre + "conv1.weight"), p(pre + "conv1.bias"));
      h = numcore::prelu(h, p(pre + "prelu1.slope"));
      if (gln) h = numcore::global_layer_norm(h, p(pre + "norm1.gain"), p(pre + "norm1.bias"));
      Conv1dOpts opts;
      opts.dilation = int64_t{1} << x;
      opts.groups = cfg_.block_channels;
      opts.padding = opts.dilation * (cfg_.kernel - 1) / 2;
      h = numcore::conv1d(h, p(pre + "dconv.weight"), p(pre + "dconv.bias"), opts);
      h = numcore::prelu(h, p(pre + "prelu2.slope"));
      if (gln) h = numcore::global_layer_norm(h, p(pre + "norm2.gain"), p(pre + "norm2.bias"));
      Var sk = numcore::conv1d(h, p(pre + "skip.weight"), p(pre + "skip.bias"));
      skip_sum = skip_sum.valid() ? numcore::add(skip_sum, sk) : sk;
      Var res = numcore::conv1d(h, p(pre + "res.weight"), p(pre + "res.bias"));
      cur = numcore::add(cur, res);
    }

  Var u = numcore::prelu(skip_sum, p("mask.prelu.slope"));
  return numcore::conv1d(u, p("mask.conv.weight"), p("mask.conv.bias"));
}

std::pair<Var, Var> TasNetModel::build_graph(Tape& tape, const VarMap& vars,
                                             const Tensor& mixture_chunk) const {
  if (mixture_chunk.rank() != 1 || mixture_chunk.numel() < 1)
    throw std::invalid_argument("tasnet: mixture chunk must be a nonempty vector");
  const int64_t T = mixture_chunk.numel();
  const int64_t L = cfg_.frame_len, M = cfg_.basis_size;
  const int64_t stride = cfg_.stride();

  // pad so encoder frames tile the chunk exactly
  int64_t padded = L;
  if (T > L) padded = L + ((T - L + stride - 1) / stride) * stride;
  Tensor x({1, 1, padded});
  for (int64_t i = 0; i < T; ++i) x[i] = mixture_chunk[i];
  Var xv = tape.leaf(std::move(x), false);

  Conv1dOpts enc_opts;
  enc_opts.stride = stride;
  Var z = numcore::relu(numcore::conv1d(xv, vars.at("encoder.weight"), std::nullopt, enc_opts));
  Var logits = mask_logits(tape, vars, z);
  Var masks = numcore::sigmoid(logits);

  std::vector<Var> outs;
  for (int64_t s = 0; s < cfg_.n_sources; ++s) {
    Var m = numcore::slice_channels(masks, s * M, M);
    Var b = numcore::mul(z, m);
    Var y = numcore::conv1d_transpose(b, vars.at("decoder.weight"), std::nullopt, stride);
    y = numcore::slice_time(y, 0, T);
    outs.push_back(numcore::reshape(y, {T}));
  }
  return {outs[0], outs[1]};
}

numcore::Checkpoint TasNetModel::to_checkpoint(const std::string& dtype) const {
  numcore::Checkpoint c;
  c.arch = arch_;
  c.set_meta("seed", std::to_string(seed_));
  c.set_meta("sample_rate", std::to_string(sample_rate));
  c.set_meta("frame_len", std::to_string(cfg_.frame_len));
  c.set_meta("basis_size", std::to_string(cfg_.basis_size));
  c.set_meta("bottleneck", std::to_string(cfg_.bottleneck));
  c.set_meta("block_channels", std::to_string(cfg_.block_channels));
  c.set_meta("kernel", std::to_string(cfg_.kernel));
  c.set_meta("blocks_per_repeat", std::to_string(cfg_.blocks_per_repeat));
  c.set_meta("repeats", std::to_string(cfg_.repeats));
  c.set_meta("n_sources", std::to_string(cfg_.n_sources));
  c.set_meta("mask_nonlinearity", cfg_.mask_nonlinearity);
  c.set_meta("norm", cfg_.norm);
  for (const auto& [name, t] : params_.items())
    c.arrays.push_back({name, dtype, t.shape(), t.vec()});
  return c;
}

std::unique_ptr<TasNetModel> from_checkpoint(const numcore::Checkpoint& c) {
  if (c.arch != "tasnet") throw IoError("corrupt checkpoint: architecture is not tasnet");
  TasNetConfig cfg;
  cfg.frame_len = std::stoll(c.meta_at("frame_len"));
  cfg.basis_size = std::stoll(c.meta_at("basis_size"));
  cfg.bottleneck = std::stoll(c.meta_at("bottleneck"));
  cfg.block_channels = std::stoll(c.meta_at("block_channels"));
  cfg.kernel = std::stoll(c.meta_at("kernel"));
  cfg.blocks_per_repeat = std::stoll(c.meta_at("blocks_per_repeat"));
  cfg.repeats = std::stoll(c.meta_at("repeats"));
  cfg.n_sources = std::stoll(c.meta_at("n_sources"));
  cfg.mask_nonlinearity = c.meta_at("mask_nonlinearity");
  cfg.norm = c.meta_at("norm");
  auto model = std::make_unique<TasNetModel>(cfg, std::stoull(c.meta_at("seed")));
  model->sample_rate = std::stoi(c.meta_at("sample_rate"));
  for (auto& [name, t] : model->params().items()) {
    const numcore::CheckpointArray* a = c.find(name);
    if (!a || a->shape != t.shape())
      throw IoError("corrupt checkpoint: parameter " + name + " missing or mis-shaped");
    t = Tensor(a->shape, a->data);
  }
  return model;
}

Tensor encode(const TasNetModel& m, const Tensor& frame) {
  if (frame.rank() != 1 || frame.numel() != m.config().frame_len)
    throw std::invalid_argument("encode: frame must have length frame_len");
  Tape tape;
  VarMap vars = m.params().leaves(tape, false);
  Var x = tape.leaf(Tensor({1, 1, m.config().frame_len}, frame.vec()), false);
  Conv1dOpts opts;
  opts.stride = m.config().stride();
  Var z = numcore::relu(numcore::conv1d(x, vars.at("encoder.weight"), std::nullopt, opts));
  return Tensor({m.config().basis_size}, tape.val(z).vec());
}

Tensor estimate_masks(const TasNetModel& m, const Tensor& z_seq) {
  if (z_seq.rank() != 2 || z_seq.dim(1) != m.config().basis_size || z_seq.dim(0) < 1)
    throw std::invalid_argument("estimate_masks: features must be [frames, basis_size]");
  const int64_t N = z_seq.dim(0), M = m.config().basis_size, n = m.config().n_sources;
  Tensor z({1, M, N});
  for (int64_t f = 0; f < N; ++f)
    for (int64_t k = 0; k < M; ++k) z.at3(0, k, f) = z_seq[f * M + k];
  Tape tape;
  VarMap vars = m.params().leaves(tape, false);
  Var logits = m.mask_logits(tape, vars, tape.leaf(std::move(z), false));
  const Tensor& mk = tape.val(numcore::sigmoid(logits));
  Tensor out({n, N, M});
  for (int64_t s = 0; s < n; ++s)
    for (int64_t f = 0; f < N; ++f)
      for (int64_t k = 0; k < M; ++k) out[(s * N + f) * M + k] = mk.at3(0, s * M + k, f);
  return out;
}

Tensor apply_mask(const Tensor& z, const Tensor& mask) {
  if (!z.same_shape(mask)) throw std::invalid_argument("apply_mask: shape mismatch");
  Tensor out(z.shape());
  for (int64_t i = 0; i < z.numel(); ++i) out[i] = z[i] * mask[i];
  return out;
}

Tensor decode(const TasNetModel& m, const Tensor& features) {
  if (features.rank() != 1 || features.numel() != m.config().basis_size)
    throw std::invalid_argument("decode: features must have length basis_size");
  Tape tape;
  VarMap vars = m.params().leaves(tape, false);
  Var b = tape.leaf(Tensor({1, m.config().basis_size, 1}, features.vec()), false);
  Var y = numcore::conv1d_transpose(b, vars.at("decoder.weight"), std::nullopt, m.config().stride());
  return Tensor({m.config().frame_len}, tape.val(y).vec());
}

std::pair<audio::Waveform, audio::Waveform> forward(const audio::Waveform& mixture,
                                                    const TasNetModel& m,
                                                    const audio::ChunkSpec& spec) {
  return separate_waveform(m, mixture, spec);
}

}  // namespace finsep::tasnet
