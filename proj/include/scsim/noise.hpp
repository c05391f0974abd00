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

#ifndef SCSIM_NOISE_HPP
#define SCSIM_NOISE_HPP

#include <cstdint>
#include <string>

#include "scsim/rng.hpp"
#include "scsim/sensor.hpp"
#include "scsim/types.hpp"

namespace scsim {

/// Statistical description of the noise sources. The means and sigmas here
/// are population parameters; sample_spatial_noise turns them into concrete
/// per-pixel maps. With every sigma at zero, mu_dark at zero, mu_alpha at one
/// and both temporal flags off, the noisy process reduces exactly to the
/// ideal one.
struct NoiseConfig {
  double mu_alpha = 1.0;     // conversion-rate mean; 1 = neutral
  double sigma_alpha = 0.0;
  double mu_dark = 0.0;      // dark-current mean, accumulation units per second
  double sigma_dark = 0.0;
  double sigma_c = 0.0;      // capacitor mismatch std
  double sigma_v = 0.0;      // bias-voltage std
  bool enable_shot_noise = true;
  bool enable_thermal_noise = true;
  uint64_t rng_seed = 0;

  void validate() const {
    if (!(mu_alpha > 0.0)) throw ConfigError("noise: mu_alpha must be > 0");
    if (!(sigma_alpha >= 0.0) || !(sigma_dark >= 0.0) || !(sigma_c >= 0.0) ||
        !(sigma_v >= 0.0))
      throw ConfigError("noise: sigmas must be >= 0");
    if (!(mu_dark >= 0.0)) throw ConfigError("noise: mu_dark must be >= 0");
  }
};

/// Concrete fixed-pattern noise: one value per pixel, constant over time.
struct NoiseParams {
  Image2D<double> alpha;  // photoelectric conversion rate, > 0
  Image2D<double> dark;   // dark current, >= 0, accumulation units per second
  Image2D<double> cap;    // capacitor mismatch C^S
  Image2D<double> bias;   // bias voltage V^S

  uint32_t height() const { return alpha.height(); }
  uint32_t width() const { return alpha.width(); }

  /// Static per-pixel threshold theta = (C + C^S) * (V_d + V^S).
  Image2D<double> static_threshold(const SensorConfig& cfg) const {
    Image2D<double> theta(height(), width());
    const double v_swing = cfg.voltage_swing();
    for (uint32_t r = 0; r < height(); ++r)
      for (uint32_t c = 0; c < width(); ++c)
        theta(r, c) = (cfg.capacitance + cap(r, c)) * (v_swing + bias(r, c));
    return theta;
  }

  void validate(const SensorConfig& cfg) const {
    if (!alpha.same_shape(cfg.height, cfg.width) || !alpha.same_shape(dark) ||
        !alpha.same_shape(cap) || !alpha.same_shape(bias))
      throw ConfigError("noise params: map dimensions do not match sensor");
    const double v_swing = cfg.voltage_swing();
    for (uint32_t r = 0; r < height(); ++r)
      for (uint32_t c = 0; c < width(); ++c) {
        if (!(alpha(r, c) > 0.0))
          throw ConfigError("noise params: alpha map must be strictly positive");
        if (!(dark(r, c) >= 0.0))
          throw ConfigError("noise params: dark map must be nonnegative");
        if (!((cfg.capacitance + cap(r, c)) * (v_swing + bias(r, c)) > 0.0))
          throw ConfigError("noise params: static threshold must be positive");
      }
  }
};

namespace detail {

inline double photon_luminance(double mu_l, double photon_gain,
                               rng::Stream& stream, rng::PoissonDist& dist) {
  if (!(mu_l > 0.0)) return 0.0;
  const double lambda = photon_gain * mu_l;
  // Past this point shot noise is below double precision anyway.
  if (lambda > 1e15) return mu_l;
  if (dist.lambda() != lambda) dist.reset(lambda);
  return static_cast<double>(dist(stream)) / photon_gain;
}

inline double thermal_threshold(double cap_total, double base_voltage,
                                double sigma_t0, double floor_phi,
                                rng::Stream& stream) {
  const double phi =
      cap_total * (base_voltage + sigma_t0 * stream.next_gaussian());
  return phi < floor_phi ? floor_phi : phi;
}

inline constexpr int kRejectionCap = 100;

}  // namespace detail

/// Draws the fixed-pattern maps, i.i.d. Gaussian per pixel. Deterministic in
/// rng_seed and independent of iteration order. Draws that would make the
/// conversion rate or the static threshold nonpositive are re-drawn up to a
/// cap; dark-current draws below zero are clamped to zero.
inline NoiseParams sample_spatial_noise(const SensorConfig& cfg,
                                        const NoiseConfig& ncfg) {
  cfg.validate();
  ncfg.validate();
  NoiseParams params{Image2D<double>(cfg.height, cfg.width, ncfg.mu_alpha),
                     Image2D<double>(cfg.height, cfg.width, ncfg.mu_dark),
                     Image2D<double>(cfg.height, cfg.width, 0.0),
                     Image2D<double>(cfg.height, cfg.width, 0.0)};
  const double v_swing = cfg.voltage_swing();
  const uint64_t seed = ncfg.rng_seed;

  for (uint32_t r = 0; r < cfg.height; ++r) {
    for (uint32_t c = 0; c < cfg.width; ++c) {
      if (ncfg.sigma_alpha > 0.0) {
        rng::Stream s(rng::stream_key(seed, r, c, 0, rng::Source::alpha));
        double a = 0.0;
        int tries = 0;
        do {
          if (++tries > detail::kRejectionCap)
            throw DegenerateConfigError(
                "sample_spatial_noise: cannot draw a positive conversion rate");
          a = ncfg.mu_alpha + ncfg.sigma_alpha * s.next_gaussian();
        } while (!(a > 0.0));
        params.alpha(r, c) = a;
      }
      if (ncfg.sigma_dark > 0.0) {
        rng::Stream s(rng::stream_key(seed, r, c, 0, rng::Source::dark));
        const double d = ncfg.mu_dark + ncfg.sigma_dark * s.next_gaussian();
        params.dark(r, c) = d > 0.0 ? d : 0.0;
      }
      if (ncfg.sigma_c > 0.0 || ncfg.sigma_v > 0.0) {
        rng::Stream sc(rng::stream_key(seed, r, c, 0, rng::Source::cap));
        rng::Stream sv(rng::stream_key(seed, r, c, 0, rng::Source::bias));
        double cs = 0.0, vs = 0.0;
        int tries = 0;
        do {
          if (++tries > detail::kRejectionCap)
            throw DegenerateConfigError(
                "sample_spatial_noise: cannot draw a positive static threshold");
          cs = ncfg.sigma_c > 0.0 ? ncfg.sigma_c * sc.next_gaussian() : 0.0;
          vs = ncfg.sigma_v > 0.0 ? ncfg.sigma_v * sv.next_gaussian() : 0.0;
        } while (!((cfg.capacitance + cs) * (v_swing + vs) > 0.0));
        params.cap(r, c) = cs;
        params.bias(r, c) = vs;
      }
    }
  }
  return params;
}

/// Shot-noise luminance: per pixel, draws ph ~ Poisson(q * mu_L) and returns
/// ph / q, an unbiased random rescaling of the mean luminance. The frame
/// index selects the per-step stream; repeating a (seed, frame) pair repeats
/// the draw.
inline Image2D<double> sample_photon_luminance(const Image2D<double>& mu_l,
                                               const SensorConfig& cfg,
                                               uint64_t seed, uint64_t frame) {
  for (double v : mu_l.data())
    if (!(v >= 0.0))
      throw ConfigError("sample_photon_luminance: negative mean luminance");
  Image2D<double> out(mu_l.height(), mu_l.width());
  rng::PoissonDist dist;
  for (uint32_t r = 0; r < mu_l.height(); ++r)
    for (uint32_t c = 0; c < mu_l.width(); ++c) {
      rng::Stream s(rng::stream_key(seed, r, c, frame, rng::Source::photon));
      out(r, c) = detail::photon_luminance(mu_l(r, c), cfg.photon_gain, s, dist);
    }
  return out;
}

/// Per-step threshold phi = (C + C^S) * (V_d + V^T0 + V^S) with a fresh
/// thermal draw V^T0 ~ N(0, k*T0/C) per pixel. Clamped from below so that a
/// tail draw cannot produce a threshold the circuit could not exhibit.
inline Image2D<double> sample_thermal_threshold(const NoiseParams& params,
                                                const SensorConfig& cfg,
                                                uint64_t seed, uint64_t frame) {
  params.validate(cfg);
  const double sigma_t0 = cfg.thermal_sigma();
  const double v_swing = cfg.voltage_swing();
  const double floor_phi = cfg.threshold_floor();
  Image2D<double> phi(params.height(), params.width());
  for (uint32_t r = 0; r < params.height(); ++r)
    for (uint32_t c = 0; c < params.width(); ++c) {
      const double cap_total = cfg.capacitance + params.cap(r, c);
      const double base = v_swing + params.bias(r, c);
      if (sigma_t0 == 0.0) {
        phi(r, c) = cap_total * base;
      } else {
        rng::Stream s(
            rng::stream_key(seed, r, c, frame, rng::Source::thermal));
        phi(r, c) =
            detail::thermal_threshold(cap_total, base, sigma_t0, floor_phi, s);
      }
    }
  return phi;
}

/// Noisy sampling process: per readout step, luminance is shot-noise sampled
/// (when enabled), scaled by the conversion rate and offset by dark current,
/// and compared against the thermally fluctuating threshold. Deterministic
/// given (rng_seed, params) for any thread count.
inline SpikeStream simulate_noisy(const LuminanceSequence& lum,
                                  const SensorConfig& cfg,
                                  const NoiseConfig& ncfg,
                                  const NoiseParams& params,
                                  const SimOptions& options = {}) {
  cfg.validate();
  ncfg.validate();
  lum.validate();
  params.validate(cfg);
  if (lum.height() != cfg.height || lum.width() != cfg.width)
    throw ConfigError("simulate_noisy: luminance dimensions do not match sensor");

  const uint64_t steps_per_frame = lum.steps_per_frame(cfg.delta_t);
  const uint64_t n_frames = steps_per_frame * lum.frame_count();
  const double delta_t = cfg.delta_t;
  const double q = cfg.photon_gain;
  const double sigma_t0 =
      ncfg.enable_thermal_noise ? cfg.thermal_sigma() : 0.0;
  const double v_swing = cfg.voltage_swing();
  const double floor_phi = cfg.threshold_floor();
  const uint64_t seed = ncfg.rng_seed;
  const bool shot = ncfg.enable_shot_noise;
  const bool thermal = ncfg.enable_thermal_noise && sigma_t0 > 0.0;
  const Image2D<double> theta = params.static_threshold(cfg);

  SpikeStream stream(cfg.height, cfg.width, n_frames, delta_t);
  stream.set_flags(kStreamFlagNoisy);

  detail::parallel_row_blocks(
      cfg.height, cfg.width, options.threads,
      [&](uint32_t r0, uint32_t r1) {
        std::vector<double> accum(static_cast<size_t>(r1 - r0) * cfg.width,
                                  0.0);
        rng::PoissonDist dist;
        for (uint64_t n = 0; n < n_frames; ++n) {
          const Image2D<float>& frame = lum.frames[n / steps_per_frame];
          auto bits = stream.frame_bytes(n);
          size_t a = 0;
          for (uint32_t r = r0; r < r1; ++r) {
            const float* in = frame.row(r);
            const double* alpha = params.alpha.row(r);
            const double* dark = params.dark.row(r);
            const double* cap = params.cap.row(r);
            const double* bias = params.bias.row(r);
            const double* th = theta.row(r);
            size_t pixel = static_cast<size_t>(r) * cfg.width;
            for (uint32_t c = 0; c < cfg.width; ++c, ++a, ++pixel) {
              const double mu = static_cast<double>(in[c]);
              double lumin = mu;
              if (shot) {
                rng::Stream s(
                    rng::stream_key(seed, r, c, n, rng::Source::photon));
                lumin = detail::photon_luminance(mu, q, s, dist);
              }
              const double intensity = alpha[c] * lumin + dark[c];
              double phi = th[c];
              if (thermal) {
                rng::Stream s(
                    rng::stream_key(seed, r, c, n, rng::Source::thermal));
                phi = detail::thermal_threshold(cfg.capacitance + cap[c],
                                                v_swing + bias[c], sigma_t0,
                                                floor_phi, s);
              }
              if (detail::fire_and_reset(accum[a], intensity, delta_t, phi))
                detail::set_packed_bit(bits, pixel);
            }
          }
        }
      });
  return stream;
}

}  // namespace scsim

#endif  // SCSIM_NOISE_HPP
