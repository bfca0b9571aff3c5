// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/separator.hpp"

#include <stdexcept>

#include "finsep/ops.hpp"

namespace finsep {

std::pair<audio::Waveform, audio::Waveform> separate_waveform(const GraphSeparator& model,
                                                              const audio::Waveform& mixture,
                                                              const audio::ChunkSpec& spec) {
  if (mixture.samples.empty()) throw std::invalid_argument("separate: empty mixture");
  if (!spec.valid()) throw std::invalid_argument("separate: invalid chunk spec");

  const auto frames = audio::chunk(mixture, spec);
  std::vector<std::vector<double>> fish_frames(frames.size());
  std::vector<std::vector<double>> bg_frames(frames.size());

  for (size_t i = 0; i < frames.size(); ++i) {
    numcore::Tape tape;
    const numcore::VarMap vars = model.params().leaves(tape, false);
    const numcore::Tensor chunk_t = numcore::Tensor::from_vector(frames[i]);
    auto [fish, bg] = model.build_graph(tape, vars, chunk_t);
    fish_frames[i] = tape.val(fish).vec();
    bg_frames[i] = tape.val(bg).vec();
  }

  audio::Waveform fish = audio::overlap_add(fish_frames, spec, mixture.size(), mixture.sample_rate);
  audio::Waveform bg = audio::overlap_add(bg_frames, spec, mixture.size(), mixture.sample_rate);
  return {std::move(fish), std::move(bg)};
}

}  // namespace finsep
