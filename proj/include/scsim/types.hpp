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

#ifndef SCSIM_TYPES_HPP
#define SCSIM_TYPES_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scsim {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad field values, dimension
/// mismatch between inputs).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A threshold frame contained a nonpositive entry.
class InvalidThresholdError : public Error {
public:
  using Error::Error;
};

/// Noise configuration so extreme that rejection sampling cannot produce
/// physical per-pixel parameters.
class DegenerateConfigError : public Error {
public:
  using Error::Error;
};

/// Frame index or window outside the stream.
class IndexError : public Error {
public:
  using Error::Error;
};

/// An ISI chain or decoding step referenced a plane beyond those provided.
class InsufficientHorizonError : public Error {
public:
  using Error::Error;
};

/// The calibration scene set cannot determine the per-pixel unknowns
/// (e.g. all scenes share one luminance level).
class CalibrationDesignError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ParseError : public IoError {
public:
  using IoError::IoError;
};

class BadMagicError : public ParseError {
public:
  using ParseError::ParseError;
};

class TruncatedFileError : public ParseError {
public:
  using ParseError::ParseError;
};

class VersionError : public ParseError {
public:
  using ParseError::ParseError;
};

// ---------------------------------------------------------------------------
// Image2D

/// Dense row-major H x W buffer. Rows index the sensor height.
template <typename T>
class Image2D {
public:
  Image2D() = default;
  Image2D(uint32_t height, uint32_t width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<size_t>(height) * width, fill) {}

  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(uint32_t r, uint32_t c) {
    return data_[static_cast<size_t>(r) * width_ + c];
  }
  const T& operator()(uint32_t r, uint32_t c) const {
    return data_[static_cast<size_t>(r) * width_ + c];
  }

  T* row(uint32_t r) { return data_.data() + static_cast<size_t>(r) * width_; }
  const T* row(uint32_t r) const {
    return data_.data() + static_cast<size_t>(r) * width_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(uint32_t h, uint32_t w) const {
    return height_ == h && width_ == w;
  }
  template <typename U>
  bool same_shape(const Image2D<U>& other) const {
    return same_shape(other.height(), other.width());
  }

  friend bool operator==(const Image2D&, const Image2D&) = default;

private:
  uint32_t height_ = 0;
  uint32_t width_ = 0;
  std::vector<T> data_;
};

// ---------------------------------------------------------------------------
// Sensor configuration

/// Camera constants shared by the ideal and noisy sampling processes.
/// Voltages and capacitance are in normalized circuit units; the threshold
/// that matters for spike generation is capacitance * (reset - reference).
struct SensorConfig {
  uint32_t height = 250;
  uint32_t width = 400;
  double delta_t = 25e-6;          // seconds per readout frame (40 kHz)
  double capacitance = 1.0;        // C, accumulation-capacity units
  double reset_voltage = 2.0;      // V_D
  double reference_voltage = 1.0;  // V_ref, must stay below V_D
  double photon_gain = 100.0;      // q, expected photons per intensity unit per delta_t
  double boltzmann_k = 1.380649e-23;
  double temperature = 300.0;      // T0, kelvin (0 disables thermal fluctuation)

  /// V_d = V_D - V_ref
  double voltage_swing() const { return reset_voltage - reference_voltage; }

  /// Ideal threshold phi = C * (V_D - V_ref).
  double nominal_threshold() const { return capacitance * voltage_swing(); }

  /// Std of the reset-voltage fluctuation, sqrt(k*T0/C).
  double thermal_sigma() const {
    return std::sqrt(boltzmann_k * temperature / capacitance);
  }

  /// Floor applied to sampled thresholds; Gaussian tails cannot drive the
  /// comparator level to zero or below in the physical circuit.
  double threshold_floor() const { return 1e-3 * nominal_threshold(); }

  void validate() const {
    if (height < 1 || width < 1)
      throw ConfigError("sensor: height and width must be >= 1");
    if (!(delta_t > 0.0)) throw ConfigError("sensor: delta_t must be > 0");
    if (!(capacitance > 0.0))
      throw ConfigError("sensor: capacitance must be > 0");
    if (!(reset_voltage > reference_voltage))
      throw ConfigError("sensor: reset_voltage must exceed reference_voltage");
    if (!(photon_gain > 0.0))
      throw ConfigError("sensor: photon_gain must be > 0");
    if (!(boltzmann_k > 0.0))
      throw ConfigError("sensor: boltzmann_k must be > 0");
    if (!(temperature >= 0.0))
      throw ConfigError("sensor: temperature must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Luminance input

/// H x W x M nonnegative intensity field. Each frame is held constant for
/// frame_duration seconds, which must be an integer multiple of the sensor
/// readout period.
struct LuminanceSequence {
  std::vector<Image2D<float>> frames;
  double frame_duration = 0.0;  // seconds

  uint32_t height() const { return frames.empty() ? 0 : frames.front().height(); }
  uint32_t width() const { return frames.empty() ? 0 : frames.front().width(); }
  size_t frame_count() const { return frames.size(); }

  void validate() const {
    if (frames.empty()) throw ConfigError("luminance: no frames");
    if (!(frame_duration > 0.0))
      throw ConfigError("luminance: frame_duration must be > 0");
    const uint32_t h = height(), w = width();
    for (const auto& f : frames) {
      if (!f.same_shape(h, w))
        throw ConfigError("luminance: inconsistent frame dimensions");
      for (float v : f.data())
        if (!(v >= 0.0f))
          throw ConfigError("luminance: negative or NaN intensity value");
    }
  }

  /// Readout steps spanned by one luminance frame. Throws if frame_duration
  /// is not an integer multiple of delta_t.
  uint64_t steps_per_frame(double delta_t) const {
    const double ratio = frame_duration / delta_t;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * rounded)
      throw ConfigError(
          "luminance: frame_duration must be an integer multiple of delta_t");
    return static_cast<uint64_t>(rounded);
  }
};

// ---------------------------------------------------------------------------
// Spike stream

/// Stream header flag bits (mirrored in the file format).
inline constexpr uint32_t kStreamFlagNoisy = 1u << 0;
inline constexpr uint32_t kStreamFlagIdeal = 1u << 1;

/// H x W x N binary spike tensor, bit-packed per frame: pixel (r, c) of frame
/// n lives at bit index r*W + c, MSB-first within each byte. The packed
/// layout matches the SPK1 file payload byte for byte.
class SpikeStream {
public:
  SpikeStream() = default;
  SpikeStream(uint32_t height, uint32_t width, uint64_t frames, double delta_t)
      : height_(height), width_(width), frames_(frames), delta_t_(delta_t),
        stride_((static_cast<size_t>(height) * width + 7) / 8),
        bits_(stride_ * frames, 0) {}

  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  uint64_t frames() const { return frames_; }
  double delta_t() const { return delta_t_; }
  size_t frame_stride() const { return stride_; }

  uint32_t flags() const { return flags_; }
  void set_flags(uint32_t f) { flags_ = f; }

  bool get(uint32_t r, uint32_t c, uint64_t n) const {
    const size_t i = static_cast<size_t>(r) * width_ + c;
    return (bits_[n * stride_ + (i >> 3)] >> (7 - (i & 7))) & 1u;
  }

  void set(uint32_t r, uint32_t c, uint64_t n, bool v) {
    const size_t i = static_cast<size_t>(r) * width_ + c;
    uint8_t& byte = bits_[n * stride_ + (i >> 3)];
    const uint8_t mask = static_cast<uint8_t>(0x80u >> (i & 7));
    if (v)
      byte |= mask;
    else
      byte &= static_cast<uint8_t>(~mask);
  }

  std::span<uint8_t> frame_bytes(uint64_t n) {
    return {bits_.data() + n * stride_, stride_};
  }
  std::span<const uint8_t> frame_bytes(uint64_t n) const {
    return {bits_.data() + n * stride_, stride_};
  }

  std::vector<uint8_t>& payload() { return bits_; }
  const std::vector<uint8_t>& payload() const { return bits_; }

  /// Spikes at pixel (r, c) over frame range [first, last).
  uint64_t count_pixel(uint32_t r, uint32_t c, uint64_t first,
                       uint64_t last) const {
    uint64_t n_spikes = 0;
    for (uint64_t n = first; n < last; ++n) n_spikes += get(r, c, n) ? 1 : 0;
    return n_spikes;
  }

  uint64_t total_spikes() const {
    uint64_t total = 0;
    for (uint8_t b : bits_) total += std::popcount(b);
    return total;
  }

  bool same_content(const SpikeStream& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           frames_ == other.frames_ && bits_ == other.bits_;
  }

private:
  uint32_t height_ = 0;
  uint32_t width_ = 0;
  uint64_t frames_ = 0;
  double delta_t_ = 0.0;
  uint32_t flags_ = 0;
  size_t stride_ = 0;
  std::vector<uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// Accumulator state

/// Per-pixel integrate-and-fire state. After every completed readout step the
/// accumulator satisfies 0 <= accum < threshold (a spike hard-resets it to 0,
/// discarding any overshoot).
struct AccumulatorState {
  Image2D<double> accum;
  Image2D<int64_t> last_spike;  // frame index of most recent spike, -1 if none
  uint64_t steps_done = 0;

  AccumulatorState() = default;
  AccumulatorState(uint32_t height, uint32_t width)
      : accum(height, width, 0.0), last_spike(height, width, -1) {}
};

}  // namespace scsim

#endif  // SCSIM_TYPES_HPP
