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

#ifndef SCSIM_ISI_HPP
#define SCSIM_ISI_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scsim/types.hpp"

namespace scsim {

/// Marks pixels lacking two bracketing spikes inside the search window.
inline constexpr uint16_t kIsiSentinel = 0xFFFF;

/// Largest representable interval; one below the sentinel encoding.
inline constexpr uint32_t kIsiMaxInterval = 0xFFFE;

/// Inter-spike-interval plane: for each pixel, the distance in frames between
/// the spike at-or-before ref_frame and the first spike after it.
struct IsiPlane {
  Image2D<uint16_t> values;
  int64_t ref_frame = 0;
  uint32_t window = 0;  // frames searched on each side; 0 = unknown (e.g. file input)
};

/// Elementwise reciprocal of an ISI plane, in [0, 1]. Value 1 is an interval
/// of one frame; value 0 stands for the sentinel.
struct NormalizedIsiPlane {
  Image2D<float> values;
  int64_t ref_frame = 0;
};

inline float interval_to_unit(uint32_t interval) {
  return interval == 0 ? 0.0f
                       : static_cast<float>(1.0 / static_cast<double>(interval));
}

/// Inverse of interval_to_unit; exact for every interval in [1, 2^16].
/// Nonpositive inputs map to 0 (the sentinel indicator).
inline uint32_t unit_to_interval(float v) {
  if (!(v > 0.0f)) return 0;
  const long long k = std::llround(1.0 / static_cast<double>(v));
  if (k < 1) return 1;
  if (k > static_cast<long long>(kIsiMaxInterval)) return kIsiMaxInterval;
  return static_cast<uint32_t>(k);
}

/// ISI plane at frame t: t_prev is the largest spike frame <= t and t_next the
/// smallest spike frame > t, both searched within window frames of t (a spike
/// exactly at t counts as the previous one). Pixels missing either bracket get
/// the sentinel.
inline IsiPlane compute_isi_plane(const SpikeStream& stream, uint64_t t,
                                  uint32_t window) {
  if (t >= stream.frames())
    throw IndexError("compute_isi_plane: frame index out of range");
  if (window < 1) throw ConfigError("compute_isi_plane: window must be >= 1");
  if (2ull * window > kIsiMaxInterval)
    throw ConfigError("compute_isi_plane: window too large for 16-bit intervals");

  const uint32_t h = stream.height(), w = stream.width();
  IsiPlane plane{Image2D<uint16_t>(h, w, kIsiSentinel),
                 static_cast<int64_t>(t), window};
  const int64_t lo =
      static_cast<int64_t>(t) - static_cast<int64_t>(window) < 0
          ? 0
          : static_cast<int64_t>(t) - window;
  const uint64_t hi = t + window < stream.frames() ? t + window
                                                   : stream.frames() - 1;
  for (uint32_t r = 0; r < h; ++r) {
    for (uint32_t c = 0; c < w; ++c) {
      int64_t prev = -1;
      for (int64_t n = static_cast<int64_t>(t); n >= lo; --n) {
        if (stream.get(r, c, static_cast<uint64_t>(n))) {
          prev = n;
          break;
        }
      }
      if (prev < 0) continue;
      int64_t next = -1;
      for (uint64_t n = t + 1; n <= hi; ++n) {
        if (stream.get(r, c, n)) {
          next = static_cast<int64_t>(n);
          break;
        }
      }
      if (next < 0) continue;
      plane.values(r, c) = static_cast<uint16_t>(next - prev);
    }
  }
  return plane;
}

inline NormalizedIsiPlane normalize_isi(const IsiPlane& plane) {
  NormalizedIsiPlane out{
      Image2D<float>(plane.values.height(), plane.values.width()),
      plane.ref_frame};
  for (uint32_t r = 0; r < plane.values.height(); ++r)
    for (uint32_t c = 0; c < plane.values.width(); ++c) {
      const uint16_t v = plane.values(r, c);
      out.values(r, c) = v == kIsiSentinel ? 0.0f : interval_to_unit(v);
    }
  return out;
}

inline IsiPlane denormalize_isi(const NormalizedIsiPlane& plane) {
  IsiPlane out{Image2D<uint16_t>(plane.values.height(), plane.values.width(),
                                 kIsiSentinel),
               plane.ref_frame, 0};
  for (uint32_t r = 0; r < plane.values.height(); ++r)
    for (uint32_t c = 0; c < plane.values.width(); ++c) {
      const uint32_t k = unit_to_interval(plane.values(r, c));
      if (k != 0) out.values(r, c) = static_cast<uint16_t>(k);
    }
  return out;
}

struct MusOptions {
  /// When true, pixels whose chains would need planes beyond the provided
  /// span are refined using the available planes only instead of raising
  /// InsufficientHorizonError. Used near the end of a plane sequence.
  bool clamp_to_available = false;
};

/// Multi-stage update: refines the interval estimate at the first plane's
/// frame t0 by chaining to later planes whose intervals are strictly nested,
/// i.e. every hop satisfies t_prev < t_next < t_next + ISI(t_next) <
/// t_prev + ISI(t_prev). Among maximal-length chains the one with the
/// earliest final endpoint wins; the output is that endpoint minus t0.
inline IsiPlane mus_update(std::span<const IsiPlane> planes,
                           const MusOptions& options = {}) {
  if (planes.empty()) throw ConfigError("mus_update: no planes");
  const uint32_t h = planes[0].values.height(), w = planes[0].values.width();
  for (size_t i = 0; i < planes.size(); ++i) {
    if (!planes[i].values.same_shape(h, w))
      throw ConfigError("mus_update: plane dimensions differ");
    if (planes[i].ref_frame != planes[0].ref_frame + static_cast<int64_t>(i))
      throw ConfigError("mus_update: planes must cover consecutive frames");
  }

  IsiPlane out{Image2D<uint16_t>(h, w, kIsiSentinel), planes[0].ref_frame,
               planes[0].window};
  std::vector<int32_t> value;      // plane values along the pixel, -1 = sentinel
  std::vector<int32_t> best_len;   // longest chain starting at index j
  std::vector<int32_t> best_end;   // its final endpoint (ties: smallest)

  for (uint32_t r = 0; r < h; ++r) {
    for (uint32_t c = 0; c < w; ++c) {
      const uint16_t raw0 = planes[0].values(r, c);
      if (raw0 == kIsiSentinel) continue;
      const int32_t v0 = raw0;
      if (v0 <= 2) {  // endpoint v0 leaves no room for a nested refinement
        out.values(r, c) = raw0;
        continue;
      }
      // Chains only ever consult planes at offsets <= v0 - 2.
      int32_t j_max = v0 - 2;
      if (j_max > static_cast<int32_t>(planes.size()) - 1) {
        if (!options.clamp_to_available)
          throw InsufficientHorizonError(
              "mus_update: chain may reference a plane beyond those provided");
        j_max = static_cast<int32_t>(planes.size()) - 1;
      }

      value.assign(static_cast<size_t>(j_max) + 1, -1);
      value[0] = v0;
      for (int32_t j = 1; j <= j_max; ++j) {
        const uint16_t vj = planes[static_cast<size_t>(j)].values(r, c);
        if (vj != kIsiSentinel) value[static_cast<size_t>(j)] = vj;
      }

      best_len.assign(static_cast<size_t>(j_max) + 1, 0);
      best_end.assign(static_cast<size_t>(j_max) + 1, 0);
      for (int32_t j = j_max; j >= 0; --j) {
        if (value[j] < 0) continue;
        const int32_t endpoint = j + value[j];
        int32_t len = 1, end = endpoint;
        for (int32_t j2 = j + 1; j2 <= j_max && j2 <= endpoint - 2; ++j2) {
          if (value[j2] < 0 || j2 + value[j2] >= endpoint) continue;
          const int32_t cand_len = best_len[j2] + 1;
          const int32_t cand_end = best_end[j2];
          if (cand_len > len || (cand_len == len && cand_end < end)) {
            len = cand_len;
            end = cand_end;
          }
        }
        best_len[j] = len;
        best_end[j] = end;
      }
      out.values(r, c) = static_cast<uint16_t>(best_end[0]);
    }
  }
  return out;
}

/// Decodes an ISI plane sequence into a spike stream by greedy forward
/// placement. The plane at frame 0 is read as time-to-first-spike from the
/// stream start; where it is sentinel, placement resynchronizes at the first
/// non-sentinel plane (which, for planes computed from a stream, is that
/// pixel's first spike). From a spike at frame s the next spike lands at
/// s + ISI_s. A sentinel ends the pixel's chain; spikes past the last frame
/// are dropped.
///
/// plane_at(t) must return the plane for frame t for any t in [0, n_frames);
/// it is only invoked for frames the decoder actually needs.
inline SpikeStream decode_isi_stream(
    uint32_t height, uint32_t width, uint64_t n_frames, double delta_t,
    const std::function<const IsiPlane&(uint64_t)>& plane_at) {
  SpikeStream out(height, width, n_frames, delta_t);
  if (n_frames == 0) return out;

  const size_t n_pixels = static_cast<size_t>(height) * width;
  std::vector<uint32_t> waiting(n_pixels);   // pixels still before their first spike
  for (size_t i = 0; i < n_pixels; ++i) waiting[i] = static_cast<uint32_t>(i);
  std::vector<std::vector<uint32_t>> due(n_frames);  // due[t]: spike at t needs plane t
  std::vector<uint32_t> still_waiting;

  const auto place = [&out](uint32_t pixel, uint64_t n) {
    out.frame_bytes(n)[pixel >> 3] |=
        static_cast<uint8_t>(0x80u >> (pixel & 7));
  };

  const uint64_t last = n_frames - 1;
  for (uint64_t t = 0; t < n_frames; ++t) {
    if (waiting.empty() && due[t].empty()) continue;
    const IsiPlane& plane = plane_at(t);
    if (!plane.values.same_shape(height, width))
      throw ConfigError("decode_isi_stream: plane dimensions differ");
    const uint16_t* values = plane.values.data().data();

    if (!waiting.empty()) {
      still_waiting.clear();
      for (uint32_t i : waiting) {
        const uint16_t v = values[i];
        if (v == kIsiSentinel || v == 0) {
          still_waiting.push_back(i);
          continue;
        }
        if (t > 0) place(i, t);  // resynchronized first spike
        const uint64_t s = t + v;
        if (s <= last) {
          place(i, s);
          due[s].push_back(i);
        }
      }
      waiting.swap(still_waiting);
    }

    for (uint32_t i : due[t]) {
      const uint16_t v = values[i];
      if (v == kIsiSentinel || v == 0) continue;
      const uint64_t s = t + v;
      if (s <= last) {
        place(i, s);
        due[s].push_back(i);
      }
    }
    due[t].clear();
    due[t].shrink_to_fit();
  }
  return out;
}

/// Span-based decode; planes must cover every output frame.
inline SpikeStream decode_isi_to_stream(std::span<const IsiPlane> planes,
                                        double delta_t,
                                        uint64_t n_frames = 0) {
  if (planes.empty()) throw ConfigError("decode_isi_to_stream: no planes");
  if (n_frames == 0) n_frames = planes.size();
  if (n_frames > planes.size())
    throw InsufficientHorizonError(
        "decode_isi_to_stream: fewer planes than output frames");
  for (size_t i = 0; i < planes.size(); ++i)
    if (planes[i].ref_frame != planes[0].ref_frame + static_cast<int64_t>(i))
      throw ConfigError("decode_isi_to_stream: planes must be consecutive");
  return decode_isi_stream(
      planes[0].values.height(), planes[0].values.width(), n_frames, delta_t,
      [&](uint64_t t) -> const IsiPlane& { return planes[t]; });
}

}  // namespace scsim

#endif  // SCSIM_ISI_HPP
