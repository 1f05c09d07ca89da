#pragma once

#include <cstdint>

#include "dsvr/core/video.hpp"

namespace dsvr::core {

// Parameterised synthetic clip: a smooth colour gradient that drifts
// horizontally plus a fine texture whose phase jitters from frame to frame.
//
// The texture is sin(2*pi*x/period + phase_t) * (-1)^y. The row-alternating
// carrier places all of its energy on the vertical Nyquist row of the
// spectrum, so it sits in the high band of any per-axis mask; the gradient
// lives on the +-1 cycle bins and is entirely low band.
struct SynthSpec {
  int frames = 16;
  int height = 64;
  int width = 128;
  double lf_motion = 2.0;      // pixels per frame
  int hf_texture_period = 4;   // pixels
  double hf_flicker = 1.0;     // phase jitter, fraction of pi
  double lf_amplitude = 0.25;
  double hf_amplitude = 0.12;
  std::uint64_t seed = 7;

  void validate() const;
};

VideoTensor synth_video(const SynthSpec& spec);

}  // namespace dsvr::core
