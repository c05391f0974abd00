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

#ifndef SCSIM_RNG_HPP
#define SCSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>

namespace scsim::rng {

// Counter-based construction: every (seed, pixel, frame, noise source) tuple
// is hashed to an independent uniform stream, so sampled values do not depend
// on pixel iteration order or thread schedule.

inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer.
constexpr uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

/// Identifies which random variable a stream feeds; part of the stream key.
enum class Source : uint32_t {
  photon = 1,   // shot-noise photon count, fresh per pixel per frame
  thermal = 2,  // reset-voltage fluctuation, fresh per pixel per frame
  alpha = 3,    // fixed-pattern conversion rate, frame key 0
  dark = 4,     // fixed-pattern dark current, frame key 0
  cap = 5,      // fixed-pattern capacitor mismatch, frame key 0
  bias = 6,     // fixed-pattern bias voltage, frame key 0
};

constexpr uint64_t stream_key(uint64_t seed, uint32_t row, uint32_t col,
                              uint64_t frame, Source source) {
  uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ frame);
  h = mix64(h ^ ((static_cast<uint64_t>(row) << 32) | col));
  h = mix64(h ^ static_cast<uint64_t>(source));
  return h;
}

/// Deterministic uniform stream derived from a key (SplitMix64 sequence).
class Stream {
public:
  explicit constexpr Stream(uint64_t key) : state_(key) {}

  constexpr uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform on (0, 1]; never returns 0, so log() is always finite.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double next_gaussian() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

private:
  uint64_t state_;
};

/// Poisson sampler with the constants for one intensity precomputed, so call
/// sites that see runs of equal lambda (static scenes) pay setup once.
///
/// Exact sampling below lambda = 1e4: sequential inversion for small lambda,
/// Hormann's PTRS transformed rejection in between. Above 1e4 a rounded
/// N(lambda, lambda) draw is used; the relative error there is negligible and
/// the exact samplers lose stability.
class PoissonDist {
public:
  PoissonDist() = default;
  explicit PoissonDist(double lambda) { reset(lambda); }

  void reset(double lambda) {
    lambda_ = lambda;
    if (lambda < kSmallCutoff) {
      exp_neg_lambda_ = std::exp(-lambda);
    } else if (lambda <= kExactCutoff) {
      b_ = 0.931 + 2.53 * std::sqrt(lambda);
      a_ = -0.059 + 0.02483 * b_;
      inv_alpha_ = 1.1239 + 1.1328 / (b_ - 3.4);
      v_r_ = 0.9277 - 3.6224 / (b_ - 2.0);
      log_lambda_ = std::log(lambda);
    } else {
      sqrt_lambda_ = std::sqrt(lambda);
    }
  }

  double lambda() const { return lambda_; }

  uint64_t operator()(Stream& stream) const {
    if (!(lambda_ > 0.0)) return 0;
    if (lambda_ < kSmallCutoff) return sample_inversion(stream);
    if (lambda_ <= kExactCutoff) return sample_ptrs(stream);
    return sample_gaussian(stream);
  }

  static constexpr double kSmallCutoff = 10.0;
  static constexpr double kExactCutoff = 1e4;

private:
  // Knuth product-of-uniforms; expected lambda + 1 draws.
  uint64_t sample_inversion(Stream& stream) const {
    uint64_t k = 0;
    double prod = stream.next_unit();
    while (prod > exp_neg_lambda_) {
      prod *= stream.next_unit();
      ++k;
    }
    return k;
  }

  // Transformed rejection with squeeze (Hormann 1993).
  uint64_t sample_ptrs(Stream& stream) const {
    for (;;) {
      const double u = stream.next_unit() - 0.5;
      const double v = stream.next_unit();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a_ / us + b_) * u + lambda_ + 0.43);
      if (us >= 0.07 && v <= v_r_) return static_cast<uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha_ / (a_ / (us * us) + b_)) <=
          k * log_lambda_ - lambda_ - std::lgamma(k + 1.0))
        return static_cast<uint64_t>(k);
    }
  }

  uint64_t sample_gaussian(Stream& stream) const {
    const double x = lambda_ + sqrt_lambda_ * stream.next_gaussian();
    if (x < 0.5) return 0;
    return static_cast<uint64_t>(std::llround(x));
  }

  double lambda_ = 0.0;
  double exp_neg_lambda_ = 1.0;
  double b_ = 0.0, a_ = 0.0, inv_alpha_ = 0.0, v_r_ = 0.0, log_lambda_ = 0.0;
  double sqrt_lambda_ = 0.0;
};

inline uint64_t poisson(Stream& stream, double lambda) {
  return PoissonDist(lambda)(stream);
}

}  // namespace scsim::rng

#endif  // SCSIM_RNG_HPP
