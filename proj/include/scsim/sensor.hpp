// Copyright 2026 scsim contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCSIM_SENSOR_HPP
#define SCSIM_SENSOR_HPP

#include <cstdint>
#include <span>

#include "scsim/detail/parallel.hpp"
#include "scsim/types.hpp"

namespace scsim {

struct SimOptions {
  int threads = 0;  // 0 = hardware concurrency; output is identical either way
};

namespace detail {

/// One integrate-and-fire readout step for a single pixel. Intensity is
/// accumulated over delta_t, the spike flag is the comparator decision at the
/// end of the step, and a spike hard-resets the accumulator to zero (any
/// overshoot above the threshold is discarded; the readout emits at most one
/// flag per step).
inline bool fire_and_reset(double& accum, double intensity, double delta_t,
                           double threshold) {
  accum += intensity * delta_t;
  if (accum >= threshold) {
    accum = 0.0;
    return true;
  }
  return false;
}

inline void set_packed_bit(std::span<uint8_t> frame, size_t pixel_index) {
  frame[pixel_index >> 3] |=
      static_cast<uint8_t>(0x80u >> (pixel_index & 7));
}

}  // namespace detail

/// Advances the accumulator by one readout step with per-pixel intensities
/// and thresholds and returns the resulting spike frame. This is the shared
/// kernel of the ideal and noisy sampling processes; both simulators are
/// required to be bit-identical to repeated application of this step.
inline Image2D<uint8_t> step_accumulator(AccumulatorState& state,
                                         const Image2D<double>& intensity,
                                         const Image2D<double>& threshold,
                                         double delta_t) {
  const uint32_t h = state.accum.height(), w = state.accum.width();
  if (!intensity.same_shape(h, w) || !threshold.same_shape(h, w))
    throw ConfigError("step_accumulator: frame dimensions do not match state");
  if (!(delta_t > 0.0))
    throw ConfigError("step_accumulator: delta_t must be > 0");

  Image2D<uint8_t> spikes(h, w, 0);
  const int64_t frame_index = static_cast<int64_t>(state.steps_done);
  for (uint32_t r = 0; r < h; ++r) {
    const double* in = intensity.row(r);
    const double* th = threshold.row(r);
    double* accum = state.accum.row(r);
    int64_t* last = state.last_spike.row(r);
    uint8_t* out = spikes.row(r);
    for (uint32_t c = 0; c < w; ++c) {
      if (!(th[c] > 0.0))
        throw InvalidThresholdError(
            "step_accumulator: nonpositive threshold entry");
      if (detail::fire_and_reset(accum[c], in[c], delta_t, th[c])) {
        out[c] = 1;
        last[c] = frame_index;
      }
    }
  }
  ++state.steps_done;
  return spikes;
}

/// Ideal (noise-free) spike camera sampling: each pixel integrates the input
/// luminance, held constant over each readout step, and fires whenever the
/// running integral crosses the fixed threshold phi. Deterministic.
inline SpikeStream simulate_ideal(const LuminanceSequence& lum,
                                  const SensorConfig& cfg,
                                  const SimOptions& options = {}) {
  cfg.validate();
  lum.validate();
  if (lum.height() != cfg.height || lum.width() != cfg.width)
    throw ConfigError("simulate_ideal: luminance dimensions do not match sensor");

  const uint64_t steps_per_frame = lum.steps_per_frame(cfg.delta_t);
  const uint64_t n_frames = steps_per_frame * lum.frame_count();
  const double phi = cfg.nominal_threshold();
  const double delta_t = cfg.delta_t;

  SpikeStream stream(cfg.height, cfg.width, n_frames, delta_t);
  stream.set_flags(kStreamFlagIdeal);

  detail::parallel_row_blocks(
      cfg.height, cfg.width, options.threads,
      [&](uint32_t r0, uint32_t r1) {
        std::vector<double> accum(static_cast<size_t>(r1 - r0) * cfg.width,
                                  0.0);
        for (uint64_t n = 0; n < n_frames; ++n) {
          const Image2D<float>& frame = lum.frames[n / steps_per_frame];
          auto bits = stream.frame_bytes(n);
          size_t a = 0;
          for (uint32_t r = r0; r < r1; ++r) {
            const float* in = frame.row(r);
            size_t pixel = static_cast<size_t>(r) * cfg.width;
            for (uint32_t c = 0; c < cfg.width; ++c, ++a, ++pixel) {
              if (detail::fire_and_reset(accum[a], static_cast<double>(in[c]),
                                         delta_t, phi))
                detail::set_packed_bit(bits, pixel);
            }
          }
        }
      });
  return stream;
}

}  // namespace scsim

#endif  // SCSIM_SENSOR_HPP
