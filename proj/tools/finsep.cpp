// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// finsep — fish-vocalization / sea-background separation toolkit.
// Subcommands: preprocess | synth | train | separate | eval | spectro.
// Exit codes: 0 success, 1 computation failure, 2 usage or I/O error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "finsep/bsseval.hpp"
#include "finsep/dsp.hpp"
#include "finsep/errors.hpp"
#include "finsep/loss.hpp"
#include "finsep/models.hpp"
#include "finsep/parallel.hpp"
#include "finsep/stft.hpp"
#include "finsep/train.hpp"
#include "finsep/wav.hpp"

namespace fs = std::filesystem;
using namespace finsep;

namespace {

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("cannot write " + path);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path + ": " + ec.message());
}

// ---- flat key=value config file ----

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw IoError("bad config line " + std::to_string(line_no) + " in " + path);
      continue;
    }
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw IoError("bad config line " + std::to_string(line_no) + " in " + path);
    kv[key] = value;
  }
  return kv;
}

class Config {
 public:
  explicit Config(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::string str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  std::string require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw IoError("config is missing required key '" + key + "'");
    return it->second;
  }
  int64_t integer(const std::string& key, int64_t fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : std::stoll(it->second);
  }
  double real(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : std::stod(it->second);
  }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

 private:
  std::map<std::string, std::string> kv_;
};

// ---- dataset loading ----

struct ChunkPools {
  std::vector<mixgen::Frame> fish_train, fish_test, bg_train, bg_test;
  int sample_rate = 0;
};

ChunkPools load_pools(const std::string& manifest_path, const audio::ChunkSpec& spec) {
  const auto entries = mixgen::read_manifest(manifest_path);
  if (entries.empty()) throw std::runtime_error("empty manifest: " + manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();

  ChunkPools pools;
  for (const auto& e : entries) {
    fs::path p = e.path;
    if (p.is_relative()) p = base / p;
    const audio::Waveform w = audio::read_wav(p.string());
    if (pools.sample_rate == 0) pools.sample_rate = w.sample_rate;
    if (w.sample_rate != pools.sample_rate)
      throw std::runtime_error("sample rate mismatch in " + p.string() + ": expected " +
                               std::to_string(pools.sample_rate) +
                               " Hz (preprocess with --rate first)");
    auto frames = audio::chunk(w, spec);
    auto& pool = e.role == "fish" ? (e.split == "train" ? pools.fish_train : pools.fish_test)
                                  : (e.split == "train" ? pools.bg_train : pools.bg_test);
    for (auto& f : frames) pool.push_back(std::move(f));
  }
  return pools;
}

// Quantizes a sample triple to float32 so the three WAV files satisfy
// mixture == fish + background bit-exactly: the f32 sum is re-split with an
// error-free transformation, nudging the quieter addend by at most one ulp.
void quantize_triple_f32(mixgen::MixtureSample& s) {
  for (size_t i = 0; i < s.mixture.size(); ++i) {
    float a = static_cast<float>(s.source_fish[i]);
    float b = static_cast<float>(s.source_background[i]);
    if (std::fabs(a) >= std::fabs(b)) {
      const float m = a + b;
      b = m - a;
      s.mixture[i] = static_cast<double>(m);
    } else {
      const float m = b + a;
      a = m - b;
      s.mixture[i] = static_cast<double>(m);
    }
    s.source_fish[i] = static_cast<double>(a);
    s.source_background[i] = static_cast<double>(b);
  }
}

audio::Waveform wave_from(const std::vector<double>& samples, int rate) {
  audio::Waveform w;
  w.samples = samples;
  w.sample_rate = rate;
  return w;
}

std::string item_name(int64_t i, const char* part) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "item_%04lld.%s.wav", static_cast<long long>(i), part);
  return buf;
}

// ---- subcommand implementations ----

struct PreprocessArgs {
  std::string input, output;
  double target_db = -1.0;
  std::string noise_profile;
  int rate = 0;
  int64_t window = 1024, hop = 256;
  double threshold_sigmas = 1.5, reduction_db = 12.0;
  std::string encoding = "float32";
};

int cmd_preprocess(const PreprocessArgs& a) {
  audio::Waveform w = audio::read_wav(a.input);
  if (a.rate > 0 && a.rate != w.sample_rate) w = audio::resample(w, a.rate);
  if (!a.noise_profile.empty()) {
    const audio::Waveform noise = audio::read_wav(a.noise_profile);
    const auto profile = audio::estimate_noise_profile(noise, a.window, a.hop);
    w = audio::denoise(w, profile, a.threshold_sigmas, a.reduction_db);
  }
  w = audio::peak_normalize(w, a.target_db);
  audio::write_wav(w, a.output,
                   a.encoding == "pcm16" ? audio::WavEncoding::pcm16
                                         : audio::WavEncoding::float32);
  return 0;
}

struct SynthArgs {
  std::string manifest, out_dir;
  uint64_t seed = 0;
  int64_t count = 0;
  int64_t chunk_len = 44160;
  double overlap = 0.25;
  double k_min = 0.0, k_max = 1.0, alpha_f = 0.1;
};

int cmd_synth(const SynthArgs& a) {
  audio::ChunkSpec spec;
  spec.length = a.chunk_len;
  spec.overlap = a.overlap;
  if (!spec.valid()) throw std::invalid_argument("synth: invalid chunk spec");

  const ChunkPools pools = load_pools(a.manifest, spec);
  auto testset = mixgen::build_testset(pools.fish_test, pools.bg_test, a.count, a.seed,
                                       {a.k_min, a.k_max}, a.alpha_f);
  fs::create_directories(a.out_dir);

  std::string index = "item,mixture,fish,background,fish_id,background_id,k_f,k_b,alpha_f\n";
  char row[512];
  for (size_t i = 0; i < testset.size(); ++i) {
    auto& s = testset[i];
    quantize_triple_f32(s);
    const std::string mix_name = item_name(static_cast<int64_t>(i), "mixture");
    const std::string fish_name = item_name(static_cast<int64_t>(i), "fish");
    const std::string bg_name = item_name(static_cast<int64_t>(i), "background");
    audio::write_wav(wave_from(s.mixture, pools.sample_rate), a.out_dir + "/" + mix_name);
    audio::write_wav(wave_from(s.source_fish, pools.sample_rate), a.out_dir + "/" + fish_name);
    audio::write_wav(wave_from(s.source_background, pools.sample_rate),
                     a.out_dir + "/" + bg_name);
    std::snprintf(row, sizeof(row), "%zu,%s,%s,%s,%lld,%lld,%.17g,%.17g,%.17g\n", i,
                  mix_name.c_str(), fish_name.c_str(), bg_name.c_str(),
                  static_cast<long long>(s.fish_id), static_cast<long long>(s.background_id),
                  s.coeffs.k_f, s.coeffs.k_b, s.coeffs.alpha_f);
    index += row;
  }
  write_text_atomic(a.out_dir + "/index.csv", index);
  std::cout << "wrote " << testset.size() << " triples to " << a.out_dir << "\n";
  return 0;
}

std::unique_ptr<GraphSeparator> build_model(const Config& cfg, uint64_t seed, int sample_rate) {
  const std::string arch = cfg.str("arch", "tasnet");
  if (arch == "tasnet") {
    tasnet::TasNetConfig tc;
    tc.frame_len = cfg.integer("tasnet.frame_len", tc.frame_len);
    tc.basis_size = cfg.integer("tasnet.basis_size", tc.basis_size);
    tc.bottleneck = cfg.integer("tasnet.bottleneck", tc.bottleneck);
    tc.block_channels = cfg.integer("tasnet.block_channels", tc.block_channels);
    tc.kernel = cfg.integer("tasnet.kernel", tc.kernel);
    tc.blocks_per_repeat = cfg.integer("tasnet.blocks_per_repeat", tc.blocks_per_repeat);
    tc.repeats = cfg.integer("tasnet.repeats", tc.repeats);
    tc.norm = cfg.str("tasnet.norm", tc.norm);
    auto m = std::make_unique<tasnet::TasNetModel>(tc, seed);
    m->sample_rate = sample_rate;
    return m;
  }
  if (arch == "demucs") {
    demucs::DemucsConfig dc;
    dc.depth = cfg.integer("demucs.depth", dc.depth);
    dc.channels = cfg.integer("demucs.channels", dc.channels);
    dc.kernel = cfg.integer("demucs.kernel", dc.kernel);
    dc.stride = cfg.integer("demucs.stride", dc.stride);
    dc.context = cfg.integer("demucs.context", dc.context);
    dc.lstm_layers = cfg.integer("demucs.lstm_layers", dc.lstm_layers);
    auto m = std::make_unique<demucs::DemucsModel>(dc, seed);
    m->sample_rate = sample_rate;
    return m;
  }
  throw std::invalid_argument("unknown architecture id '" + arch + "' (tasnet|demucs)");
}

struct TrainArgs {
  std::string config_path;
  // flag overrides; negative/empty means "not set"
  int64_t epochs = -1;
  double lr = -1.0;
  std::string arch, out_dir, loss;
  int64_t seed = -1;
  int64_t batch = -1;
};

int cmd_train(const TrainArgs& a) {
  Config cfg(read_config(a.config_path));
  if (a.epochs >= 0) cfg.set("epochs", std::to_string(a.epochs));
  if (a.lr > 0) cfg.set("learning_rate", std::to_string(a.lr));
  if (!a.arch.empty()) cfg.set("arch", a.arch);
  if (!a.out_dir.empty()) cfg.set("out_dir", a.out_dir);
  if (!a.loss.empty()) cfg.set("loss", a.loss);
  if (a.seed >= 0) cfg.set("seed", std::to_string(a.seed));
  if (a.batch >= 1) cfg.set("batch_size", std::to_string(a.batch));

  // seeds are mandatory so runs are reproducible by construction
  const uint64_t seed = static_cast<uint64_t>(std::stoull(cfg.require("seed")));
  const std::string manifest = cfg.require("manifest");
  const std::string out_dir = cfg.require("out_dir");

  audio::ChunkSpec spec;
  spec.length = cfg.integer("chunk_len", 44160);
  spec.overlap = cfg.real("chunk_overlap", 0.25);
  if (!spec.valid()) throw std::invalid_argument("train: invalid chunk spec");

  const ChunkPools pools = load_pools(manifest, spec);
  if (pools.fish_train.empty() || pools.bg_train.empty())
    throw std::runtime_error("train: manifest has no train-split fish or background chunks");

  train::TrainConfig tc;
  tc.learning_rate = cfg.real("learning_rate", 1e-4);
  tc.epochs = cfg.integer("epochs", 200);
  tc.batch_size = cfg.integer("batch_size", 4);
  tc.seed = seed;
  tc.arch = cfg.str("arch", "tasnet");
  tc.loss = cfg.str("loss", tc.arch == "demucs" ? "l1" : "si_snr");
  tc.checkpoint_every = cfg.integer("checkpoint_every", 1);
  tc.k_range = {cfg.real("k_min", 0.0), cfg.real("k_max", 1.0)};
  tc.alpha_f = cfg.real("alpha_f", 0.1);
  tc.validate();

  auto model = build_model(cfg, seed, pools.sample_rate);
  const auto stream = train::make_epoch_stream(pools.fish_train, pools.bg_train, seed,
                                               tc.k_range, tc.alpha_f);
  const int64_t items = static_cast<int64_t>(pools.fish_train.size());

  fs::create_directories(out_dir);
  const std::string latest = train::find_latest_state(out_dir);
  train::TrainState state;
  if (latest.empty()) {
    state = train::train(*model, stream, items, tc, out_dir);
  } else {
    std::cerr << "resuming from " << latest << "\n";
    state = train::train_resume(*model, stream, items, tc, latest, out_dir);
  }
  save_separator(*model, out_dir + "/model.fckpt", "f32");
  std::cout << "trained " << state.history.size() << " steps; checkpoints in " << out_dir << "\n";
  return 0;
}

struct SeparateArgs {
  std::string input, checkpoint, out_prefix;
  int64_t chunk_len = 44160;
  double overlap = 0.25;
};

int cmd_separate(const SeparateArgs& a) {
  audio::Waveform w = audio::read_wav(a.input);
  const int in_rate = w.sample_rate;
  auto model = load_separator(a.checkpoint);
  if (model->sample_rate != in_rate) {
    std::cerr << "warning: input is " << in_rate << " Hz but the model was trained at "
              << model->sample_rate << " Hz; resampling\n";
    w = audio::resample(w, model->sample_rate);
  }
  audio::ChunkSpec spec;
  spec.length = a.chunk_len;
  spec.overlap = a.overlap;
  if (!spec.valid()) throw std::invalid_argument("separate: invalid chunk spec");

  auto [fish, bg] = separate_waveform(*model, w, spec);
  if (fish.sample_rate != in_rate) {
    fish = audio::resample(fish, in_rate);
    bg = audio::resample(bg, in_rate);
  }
  audio::write_wav(fish, a.out_prefix + ".fish.wav");
  audio::write_wav(bg, a.out_prefix + ".background.wav");
  return 0;
}

struct EvalArgs {
  std::string testset_dir, checkpoint, out_dir;
  bool use_ground_truth = false;
  int64_t chunk_len = 44160;
  double overlap = 0.25;
};

struct IndexRow {
  std::string mixture, fish, background;
  double k_f = 0.0, k_b = 0.0, alpha_f = 0.1;
};

std::vector<IndexRow> read_index(const std::string& dir) {
  const std::string path = dir + "/index.csv";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<IndexRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() < 9) throw IoError("corrupt index row in " + path + ": " + line);
    IndexRow r;
    r.mixture = dir + "/" + cols[1];
    r.fish = dir + "/" + cols[2];
    r.background = dir + "/" + cols[3];
    r.k_f = std::stod(cols[6]);
    r.k_b = std::stod(cols[7]);
    r.alpha_f = std::stod(cols[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_eval(const EvalArgs& a) {
  const auto rows = read_index(a.testset_dir);
  if (rows.empty()) throw std::runtime_error("empty evaluation set in " + a.testset_dir);

  std::unique_ptr<GraphSeparator> model;
  if (!a.use_ground_truth) model = load_separator(a.checkpoint);

  audio::ChunkSpec spec;
  spec.length = a.chunk_len;
  spec.overlap = a.overlap;

  std::vector<mixgen::MixtureSample> testset(rows.size());
  std::vector<std::pair<std::vector<double>, std::vector<double>>> outs(rows.size());

  parallel_for(static_cast<int64_t>(rows.size()), [&](int64_t i) {
    const IndexRow& r = rows[static_cast<size_t>(i)];
    const audio::Waveform mix = audio::read_wav(r.mixture);
    const audio::Waveform fish = audio::read_wav(r.fish);      // ground truth
    const audio::Waveform bg = audio::read_wav(r.background);  // ground truth
    mixgen::MixtureSample s;
    s.mixture = mix.samples;
    s.source_fish = fish.samples;
    s.source_background = bg.samples;
    s.coeffs = {r.k_f, r.k_b, r.alpha_f};
    if (a.use_ground_truth) {
      outs[static_cast<size_t>(i)] = {fish.samples, bg.samples};
    } else {
      auto [ef, eb] = separate_waveform(*model, mix, spec);
      outs[static_cast<size_t>(i)] = {std::move(ef.samples), std::move(eb.samples)};
    }
    testset[static_cast<size_t>(i)] = std::move(s);
  });

  const auto report = bsseval::evaluate(outs, testset);
  const std::string label = a.use_ground_truth ? "ground-truth" : model->arch();
  const std::string out_dir = a.out_dir.empty() ? a.testset_dir : a.out_dir;
  fs::create_directories(out_dir);
  const std::string text = bsseval::format_report(report, label);
  write_text_atomic(out_dir + "/report.txt", text);
  write_text_atomic(out_dir + "/report_items.csv", bsseval::report_csv(report));
  std::cout << text;
  return 0;
}

struct SpectroArgs {
  std::string input, output;
  int64_t window = 1024, hop = 256;
  double floor_db = -120.0;
};

int cmd_spectro(const SpectroArgs& a) {
  const audio::Waveform w = audio::read_wav(a.input);
  const auto s = audio::spectrogram(w, a.window, a.hop, a.floor_db);
  if (a.output.size() >= 4 && a.output.substr(a.output.size() - 4) == ".pgm") {
    audio::write_spectrogram_pgm(s, a.output);
  } else if (a.output.size() >= 4 && a.output.substr(a.output.size() - 4) == ".csv") {
    audio::write_spectrogram_csv(s, a.output);
  } else {
    throw std::invalid_argument("spectro: output must end in .pgm or .csv");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finsep: separate fish vocalizations from sea-background recordings"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* cmd_pre = app.add_subcommand("preprocess", "resample, denoise and peak-normalize a WAV");
  cmd_pre->add_option("input", pre.input, "input WAV")->required();
  cmd_pre->add_option("output", pre.output, "output WAV")->required();
  cmd_pre->add_option("--target-db", pre.target_db, "peak level in dBFS (default -1)");
  cmd_pre->add_option("--noise-profile", pre.noise_profile,
                      "noise-only WAV to estimate the spectral gate from");
  cmd_pre->add_option("--rate", pre.rate, "resample to this rate first");
  cmd_pre->add_option("--window", pre.window, "STFT window (power of two)");
  cmd_pre->add_option("--hop", pre.hop, "STFT hop");
  cmd_pre->add_option("--threshold-sigmas", pre.threshold_sigmas, "gate threshold in sigmas");
  cmd_pre->add_option("--reduction-db", pre.reduction_db, "gate attenuation in dB");
  cmd_pre->add_option("--encoding", pre.encoding, "float32|pcm16")
      ->check(CLI::IsMember({"float32", "pcm16"}));

  SynthArgs synth;
  auto* cmd_sy = app.add_subcommand("synth", "materialize a synthetic test set");
  cmd_sy->add_option("--manifest", synth.manifest, "dataset manifest")->required();
  cmd_sy->add_option("--out-dir", synth.out_dir, "output directory")->required();
  cmd_sy->add_option("--seed", synth.seed, "RNG seed")->required();
  cmd_sy->add_option("--count", synth.count, "number of triples")->required();
  cmd_sy->add_option("--chunk-len", synth.chunk_len, "chunk length in samples");
  cmd_sy->add_option("--overlap", synth.overlap, "chunk overlap fraction");
  cmd_sy->add_option("--k-min", synth.k_min, "uniform draw lower bound");
  cmd_sy->add_option("--k-max", synth.k_max, "uniform draw upper bound");
  cmd_sy->add_option("--alpha-f", synth.alpha_f, "fish attenuation factor");

  TrainArgs tr;
  auto* cmd_tr = app.add_subcommand("train", "train a separator from a config file");
  cmd_tr->add_option("--config", tr.config_path, "key=value config file")->required();
  cmd_tr->add_option("--epochs", tr.epochs, "override epochs");
  cmd_tr->add_option("--lr", tr.lr, "override learning rate");
  cmd_tr->add_option("--arch", tr.arch, "override architecture (tasnet|demucs)");
  cmd_tr->add_option("--out-dir", tr.out_dir, "override output directory");
  cmd_tr->add_option("--loss", tr.loss, "override loss (si_snr|l1)");
  cmd_tr->add_option("--seed", tr.seed, "override seed");
  cmd_tr->add_option("--batch", tr.batch, "override batch size");

  SeparateArgs sep;
  auto* cmd_se = app.add_subcommand("separate", "split a recording into fish + background");
  cmd_se->add_option("input", sep.input, "mixture WAV")->required();
  cmd_se->add_option("checkpoint", sep.checkpoint, "model checkpoint")->required();
  cmd_se->add_option("out_prefix", sep.out_prefix, "output prefix")->required();
  cmd_se->add_option("--chunk-len", sep.chunk_len, "chunk length in samples");
  cmd_se->add_option("--overlap", sep.overlap, "chunk overlap fraction");

  EvalArgs ev;
  auto* cmd_ev = app.add_subcommand("eval", "score separations on a synthetic test set");
  cmd_ev->add_option("--testset", ev.testset_dir, "directory with index.csv")->required();
  cmd_ev->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
  cmd_ev->add_option("--out", ev.out_dir, "report directory (default: testset dir)");
  cmd_ev->add_flag("--use-ground-truth", ev.use_ground_truth,
                   "score the stored ground truth instead of running a model");
  cmd_ev->add_option("--chunk-len", ev.chunk_len, "chunk length in samples");
  cmd_ev->add_option("--overlap", ev.overlap, "chunk overlap fraction");

  SpectroArgs sp;
  auto* cmd_sp = app.add_subcommand("spectro", "render a spectrogram to PGM or CSV");
  cmd_sp->add_option("input", sp.input, "input WAV")->required();
  cmd_sp->add_option("output", sp.output, "output .pgm or .csv")->required();
  cmd_sp->add_option("--window", sp.window, "STFT window (power of two)");
  cmd_sp->add_option("--hop", sp.hop, "STFT hop");
  cmd_sp->add_option("--floor-db", sp.floor_db, "dB floor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (cmd_pre->parsed()) return cmd_preprocess(pre);
    if (cmd_sy->parsed()) return cmd_synth(synth);
    if (cmd_tr->parsed()) return cmd_train(tr);
    if (cmd_se->parsed()) return cmd_separate(sep);
    if (cmd_ev->parsed()) {
      if (!ev.use_ground_truth && ev.checkpoint.empty()) {
        std::cerr << "eval: --checkpoint is required unless --use-ground-truth is set\n";
        return 2;
      }
      return cmd_eval(ev);
    }
    if (cmd_sp->parsed()) return cmd_spectro(sp);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
