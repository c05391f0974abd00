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

#ifndef SCSIM_CALIBRATION_HPP
#define SCSIM_CALIBRATION_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scsim/metrics.hpp"
#include "scsim/noise.hpp"
#include "scsim/types.hpp"

namespace scsim {

/// One static calibration capture: a known constant luminance level and the
/// spike stream recorded under it.
struct CalibrationScene {
  double luminance = 0.0;  // mu_k, already linearized intensity units
  SpikeStream stream;
};

struct CalibrationSet {
  SensorConfig sensor;
  std::vector<CalibrationScene> scenes;

  void validate() const {
    sensor.validate();
    if (scenes.size() < 3)
      throw CalibrationDesignError(
          "calibration: at least 3 static scenes are required");
    for (const auto& scene : scenes) {
      if (!(scene.luminance > 0.0))
        throw ConfigError("calibration: scene luminance must be > 0");
      if (scene.stream.height() != sensor.height ||
          scene.stream.width() != sensor.width)
        throw ConfigError("calibration: stream dimensions do not match sensor");
      if (scene.stream.frames() == 0)
        throw ConfigError("calibration: empty stream");
      if (std::abs(scene.stream.delta_t() - sensor.delta_t) >
          1e-12 + 1e-9 * sensor.delta_t)
        throw ConfigError("calibration: stream delta_t does not match sensor");
    }
  }
};

struct MapStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct CalibrationResult {
  NoiseParams params;
  Image2D<double> theta_map;     // effective static threshold per pixel
  Image2D<double> residual_map;  // relative per-pixel least-squares residual
  Image2D<uint8_t> dead_mask;    // 1 = never fired in any scene; excluded from stats
  std::map<std::string, MapStats> stats;
  std::vector<std::string> warnings;
};

/// Per-scene, per-pixel spike totals N_k(x, y).
inline std::vector<Image2D<uint32_t>> spike_counts(const CalibrationSet& set) {
  std::vector<Image2D<uint32_t>> counts;
  counts.reserve(set.scenes.size());
  for (const auto& scene : set.scenes) {
    const auto& stream = scene.stream;
    Image2D<uint32_t> map(stream.height(), stream.width(), 0);
    const size_t n_pixels =
        static_cast<size_t>(stream.height()) * stream.width();
    for (uint64_t n = 0; n < stream.frames(); ++n)
      detail::for_each_spike(stream.frame_bytes(n), n_pixels,
                             [&](size_t i) { ++map.data()[i]; });
    counts.push_back(std::move(map));
  }
  return counts;
}

/// Statistics over the non-dead pixels of each recovered map.
inline std::map<std::string, MapStats> summarize_noise(
    const CalibrationResult& result) {
  const auto stats_of = [&](const Image2D<double>& map) {
    double sum = 0.0;
    uint64_t n = 0;
    for (size_t i = 0; i < map.size(); ++i) {
      if (result.dead_mask.data()[i]) continue;
      sum += map.data()[i];
      ++n;
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    double sq = 0.0;
    for (size_t i = 0; i < map.size(); ++i) {
      if (result.dead_mask.data()[i]) continue;
      const double d = map.data()[i] - mean;
      sq += d * d;
    }
    const double var = n > 1 ? sq / static_cast<double>(n - 1) : 0.0;
    return MapStats{mean, std::sqrt(var)};
  };
  return {{"alpha", stats_of(result.params.alpha)},
          {"dark", stats_of(result.params.dark)},
          {"cap", stats_of(result.params.cap)},
          {"bias", stats_of(result.params.bias)},
          {"theta", stats_of(result.theta_map)},
          {"residual", stats_of(result.residual_map)}};
}

struct SneeOptions {
  /// Prior stds used to split the recovered threshold deviation into
  /// capacitor-mismatch and bias-voltage parts; with both zero the deviation
  /// splits evenly.
  double prior_sigma_c = 0.0;
  double prior_sigma_v = 0.0;
  /// Pixels should fire at least this often in the brightest scene for the
  /// thermal term of the SNEE to average out; a warning reports violations.
  uint32_t min_spikes_brightest = 10;
};

/// Solves the per-pixel SNEE system N_k * theta = (alpha * mu_k + I_dark) * T_k
/// by ordinary least squares on the rate reparameterization
/// N_k = (a * mu_k + b) * T_k with a = alpha/theta, b = I_dark/theta.
///
/// The observable system fixes only the ratios (a, b) per pixel; absolute
/// scale is gauged by theta(x, y) = gauge_phi, the nominal operating point,
/// so the population mean of theta equals gauge_phi by construction. Pixels
/// that never fire in any scene are flagged dead (alpha = 0) and excluded
/// from the map statistics.
inline CalibrationResult solve_snee(const CalibrationSet& set,
                                    double gauge_phi,
                                    const SneeOptions& options = {}) {
  set.validate();
  if (!(gauge_phi > 0.0))
    throw ConfigError("solve_snee: gauge_phi must be > 0");

  const uint32_t h = set.sensor.height, w = set.sensor.width;
  const size_t n_pixels = static_cast<size_t>(h) * w;
  const size_t n_scenes = set.scenes.size();
  const auto counts = spike_counts(set);

  // Design sums are shared by all pixels: x_k = mu_k * T_k, y_k = T_k.
  std::vector<double> mu(n_scenes), duration(n_scenes);
  long double s_xx = 0, s_xy = 0, s_yy = 0;
  for (size_t k = 0; k < n_scenes; ++k) {
    mu[k] = set.scenes[k].luminance;
    duration[k] = static_cast<double>(set.scenes[k].stream.frames()) *
                  set.scenes[k].stream.delta_t();
    const long double x = static_cast<long double>(mu[k]) * duration[k];
    const long double y = duration[k];
    s_xx += x * x;
    s_xy += x * y;
    s_yy += y * y;
  }
  const long double det = s_xx * s_yy - s_xy * s_xy;
  if (!(det > 1e-12L * s_xx * s_yy))
    throw CalibrationDesignError(
        "solve_snee: scene luminances do not separate alpha from dark current "
        "(rank-deficient design)");

  CalibrationResult result;
  result.params = NoiseParams{Image2D<double>(h, w), Image2D<double>(h, w),
                              Image2D<double>(h, w), Image2D<double>(h, w)};
  result.theta_map = Image2D<double>(h, w, gauge_phi);
  result.residual_map = Image2D<double>(h, w, 0.0);
  result.dead_mask = Image2D<uint8_t>(h, w, 0);

  // Split of the threshold deviation against the nominal C * V_d point.
  const double cap_nom = set.sensor.capacitance;
  const double v_swing = set.sensor.voltage_swing();
  const double wc = options.prior_sigma_c > 0.0
                        ? (options.prior_sigma_c / cap_nom) *
                              (options.prior_sigma_c / cap_nom)
                        : 0.0;
  const double wv = options.prior_sigma_v > 0.0
                        ? (options.prior_sigma_v / v_swing) *
                              (options.prior_sigma_v / v_swing)
                        : 0.0;
  const double frac_c = (wc + wv) > 0.0 ? wc / (wc + wv) : 0.5;
  const double delta = gauge_phi / (cap_nom * v_swing) - 1.0;
  const double cap_part = cap_nom * delta * frac_c;
  const double bias_part = v_swing * delta * (1.0 - frac_c);

  size_t dead_count = 0, negative_dark = 0;
  for (size_t i = 0; i < n_pixels; ++i) {
    long double b_x = 0, b_y = 0;
    uint64_t total = 0;
    for (size_t k = 0; k < n_scenes; ++k) {
      const uint32_t n_k = counts[k].data()[i];
      total += n_k;
      const long double x = static_cast<long double>(mu[k]) * duration[k];
      b_x += x * static_cast<long double>(n_k);
      b_y += static_cast<long double>(duration[k]) *
             static_cast<long double>(n_k);
    }
    if (total == 0) {
      result.dead_mask.data()[i] = 1;
      result.params.alpha.data()[i] = 0.0;
      result.params.dark.data()[i] = 0.0;
      result.params.cap.data()[i] = cap_part;
      result.params.bias.data()[i] = bias_part;
      ++dead_count;
      continue;
    }

    const long double a = (s_yy * b_x - s_xy * b_y) / det;
    const long double b = (s_xx * b_y - s_xy * b_x) / det;

    long double sq_resid = 0, sq_counts = 0;
    for (size_t k = 0; k < n_scenes; ++k) {
      const long double n_k = counts[k].data()[i];
      const long double fit = (a * mu[k] + b) * duration[k];
      sq_resid += (n_k - fit) * (n_k - fit);
      sq_counts += n_k * n_k;
    }
    const double rms_resid =
        std::sqrt(static_cast<double>(sq_resid / n_scenes));
    const double rms_counts =
        std::sqrt(static_cast<double>(sq_counts / n_scenes));
    result.residual_map.data()[i] =
        rms_resid / (rms_counts > 1.0 ? rms_counts : 1.0);

    double alpha = static_cast<double>(a) * gauge_phi;
    double dark = static_cast<double>(b) * gauge_phi;
    if (alpha <= 0.0) {  // fires, but not in response to light
      result.dead_mask.data()[i] = 1;
      alpha = 0.0;
      ++dead_count;
    }
    if (dark < 0.0) {
      dark = 0.0;
      ++negative_dark;
    }
    result.params.alpha.data()[i] = alpha;
    result.params.dark.data()[i] = dark;
    result.params.cap.data()[i] = cap_part;
    result.params.bias.data()[i] = bias_part;
  }

  // Thermal-noise suppression needs enough spikes per pixel in the brightest
  // scene; count offenders once rather than warning per pixel.
  size_t brightest = 0;
  for (size_t k = 1; k < n_scenes; ++k)
    if (mu[k] > mu[brightest]) brightest = k;
  size_t under_fired = 0;
  for (size_t i = 0; i < n_pixels; ++i)
    if (!result.dead_mask.data()[i] &&
        counts[brightest].data()[i] < options.min_spikes_brightest)
      ++under_fired;
  if (under_fired > 0)
    result.warnings.push_back(
        std::to_string(under_fired) + " of " + std::to_string(n_pixels) +
        " pixels fired fewer than " +
        std::to_string(options.min_spikes_brightest) +
        " spikes in the brightest scene; thermal noise may not average out");
  if (dead_count > 0)
    result.warnings.push_back(std::to_string(dead_count) +
                              " dead pixels flagged (excluded from stats)");
  if (negative_dark > 0)
    result.warnings.push_back(
        std::to_string(negative_dark) +
        " pixels had a slightly negative dark-current estimate, clamped to 0");

  result.stats = summarize_noise(result);
  return result;
}

inline CalibrationResult solve_snee(const CalibrationSet& set,
                                    const SneeOptions& options = {}) {
  return solve_snee(set, set.sensor.nominal_threshold(), options);
}

}  // namespace scsim

#endif  // SCSIM_CALIBRATION_HPP
