#include "dsvr/core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dsvr/rng.hpp"

namespace dsvr::core {

void SynthSpec::validate() const {
  if (frames < 1 || height < 4 || width < 4) throw ConfigError("synth: T >= 1 and H, W >= 4 required");
  if (hf_texture_period < 2 || hf_texture_period > std::min(height, width) / 4) {
    throw ConfigError("synth: hf_texture_period must lie in [2, min(H,W)/4]");
  }
  if (hf_flicker < 0.0 || lf_amplitude < 0.0 || hf_amplitude < 0.0) {
    throw ConfigError("synth: amplitudes and flicker must be non-negative");
  }
}

VideoTensor synth_video(const SynthSpec& spec) {
  spec.validate();
  constexpr double kPi = std::numbers::pi;
  const double channel_phase[3] = {0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0};
  const double vertical_phase[3] = {0.5, 1.7, 2.9};

  Rng rng(spec.seed);
  const std::size_t frame_size = static_cast<std::size_t>(3) * spec.height * spec.width;
  std::vector<float> data(frame_size * spec.frames);

  for (int t = 0; t < spec.frames; ++t) {
    const double texture_phase = spec.hf_flicker * kPi * rng.uniform(-1.0, 1.0);
    const double shift = spec.lf_motion * t;
    float* frame = data.data() + frame_size * t;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < spec.height; ++y) {
        const double carrier = (y % 2 == 0) ? 1.0 : -1.0;
        const double vertical =
            0.4 * spec.lf_amplitude * std::cos(2.0 * kPi * y / spec.height + vertical_phase[c]);
        for (int x = 0; x < spec.width; ++x) {
          const double gradient =
              spec.lf_amplitude * std::cos(2.0 * kPi * (x - shift) / spec.width + channel_phase[c]);
          const double texture = spec.hf_amplitude * carrier *
                                 std::sin(2.0 * kPi * x / spec.hf_texture_period + texture_phase);
          const double v = 0.5 + gradient + vertical + texture;
          frame[(static_cast<std::size_t>(c) * spec.height + y) * spec.width + x] =
              static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }
  return VideoTensor(spec.frames, spec.height, spec.width, std::move(data), "synth");
}

}  // namespace dsvr::core
