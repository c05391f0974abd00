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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "scsim/sensor.hpp"
#include "test_util.hpp"

using namespace scsim;
using scsim_test::TestRng;

namespace {

/// Independent scalar oracle: simulates one pixel with a plain loop over the
/// per-step luminance values. Reset and readout semantics as in the model:
/// accumulate over the step, compare, hard-reset.
std::vector<uint8_t> pixel_oracle(const std::vector<double>& step_luminance,
                                  double delta_t, double phi) {
  std::vector<uint8_t> spikes;
  double accum = 0.0;
  for (double lum : step_luminance) {
    accum += lum * delta_t;
    if (accum >= phi) {
      spikes.push_back(1);
      accum = 0.0;
    } else {
      spikes.push_back(0);
    }
  }
  return spikes;
}

/// Same oracle integrating each readout step in `substeps` pieces instead of
/// one multiply, with the comparator checked at the frame boundary. Verifies
/// that one multiply-accumulate per step is an exact treatment of the
/// piecewise-constant input (up to floating-point accumulation order).
std::vector<uint8_t> fine_step_oracle(const std::vector<double>& step_luminance,
                                      double delta_t, double phi,
                                      int substeps) {
  std::vector<uint8_t> spikes;
  double accum = 0.0;
  const double dt_sub = delta_t / substeps;
  for (double lum : step_luminance) {
    for (int s = 0; s < substeps; ++s) accum += lum * dt_sub;
    if (accum >= phi) {
      spikes.push_back(1);
      accum = 0.0;
    } else {
      spikes.push_back(0);
    }
  }
  return spikes;
}

}  // namespace

TEST_CASE("constant luminance at phi per step fires every frame") {
  auto cfg = scsim_test::test_sensor(4, 6);
  const double phi = cfg.nominal_threshold();
  const double level = phi / cfg.delta_t;
  const auto lum = scsim_test::constant_luminance(4, 6, level,
                                                  64 * cfg.delta_t);
  const auto stream = simulate_ideal(lum, cfg);
  REQUIRE(stream.frames() == 64);
  REQUIRE(stream.total_spikes() == 64ull * 4 * 6);
}

TEST_CASE("zero luminance never fires") {
  auto cfg = scsim_test::test_sensor(3, 3);
  const auto lum = scsim_test::constant_luminance(3, 3, 0.0, 32 * cfg.delta_t);
  const auto stream = simulate_ideal(lum, cfg);
  REQUIRE(stream.total_spikes() == 0);
}

TEST_CASE("constant luminance spike count equals floor(L*T/phi) within 1") {
  // The hard reset discards the overshoot above phi, so a pixel fires every
  // ceil(phi / (L*dt)) frames; the closed form floor(L*T/phi) holds when phi
  // is a whole number of per-step accumulations. Power-of-two values keep the
  // arithmetic exact.
  TestRng rng(101);
  const double delta_t = 0x1.0p-13;
  for (int trial = 0; trial < 30; ++trial) {
    const double level = static_cast<double>(1 + rng.next_below(1024));
    const uint64_t m = 1 + rng.next_below(100);
    auto cfg = scsim_test::test_sensor(2, 2, delta_t);
    cfg.capacitance = static_cast<double>(m) * level * delta_t;  // phi
    const double phi = cfg.nominal_threshold();
    const uint64_t frames = 200 + rng.next_below(2000);
    const auto lum = scsim_test::constant_luminance(
        2, 2, level, static_cast<double>(frames) * delta_t);
    const auto stream = simulate_ideal(lum, cfg);
    const double duration = static_cast<double>(frames) * delta_t;
    const double expected = std::floor(level * duration / phi);
    const auto count =
        static_cast<double>(stream.count_pixel(0, 0, 0, frames));
    REQUIRE(std::abs(count - expected) <= 1.0);
  }
}

TEST_CASE("step_accumulator fires and hard-resets") {
  auto cfg = scsim_test::test_sensor(1, 1);
  const double phi = cfg.nominal_threshold();

  SECTION("accumulated 0.9 phi plus 0.2 phi fires and resets to zero") {
    AccumulatorState state(1, 1);
    state.accum(0, 0) = 0.9 * phi;
    Image2D<double> intensity(1, 1, 0.2 * phi / cfg.delta_t);
    Image2D<double> threshold(1, 1, phi);
    const auto spikes = step_accumulator(state, intensity, threshold,
                                         cfg.delta_t);
    REQUIRE(spikes(0, 0) == 1);
    REQUIRE(state.accum(0, 0) == 0.0);
    REQUIRE(state.last_spike(0, 0) == 0);
  }

  SECTION("zero intensity leaves the accumulator untouched") {
    AccumulatorState state(1, 1);
    state.accum(0, 0) = 0.25;
    Image2D<double> intensity(1, 1, 0.0);
    Image2D<double> threshold(1, 1, phi);
    const auto spikes = step_accumulator(state, intensity, threshold,
                                         cfg.delta_t);
    REQUIRE(spikes(0, 0) == 0);
    REQUIRE(state.accum(0, 0) == 0.25);
    REQUIRE(state.last_spike(0, 0) == -1);
  }

  SECTION("an input of 1.7 phi in one step yields exactly one spike") {
    AccumulatorState state(1, 1);
    state.accum(0, 0) = 0.5 * phi;
    Image2D<double> intensity(1, 1, 1.7 * phi / cfg.delta_t);
    Image2D<double> threshold(1, 1, phi);
    const auto spikes = step_accumulator(state, intensity, threshold,
                                         cfg.delta_t);
    REQUIRE(spikes(0, 0) == 1);
    REQUIRE(state.accum(0, 0) == 0.0);  // residual above phi is discarded
  }

  SECTION("nonpositive threshold entries are rejected") {
    AccumulatorState state(1, 1);
    Image2D<double> intensity(1, 1, 1.0);
    Image2D<double> threshold(1, 1, 0.0);
    REQUIRE_THROWS_AS(
        step_accumulator(state, intensity, threshold, cfg.delta_t),
        InvalidThresholdError);
  }
}

TEST_CASE("linear ramp matches the fine-step integration oracle") {
  auto cfg = scsim_test::test_sensor(1, 1);
  const double phi = cfg.nominal_threshold();
  const uint64_t frames = 256;

  // Ramp sampled per readout step (one luminance frame per step).
  LuminanceSequence lum;
  lum.frame_duration = cfg.delta_t;
  std::vector<double> levels;
  for (uint64_t n = 0; n < frames; ++n) {
    const double t = static_cast<double>(n) * cfg.delta_t;
    const double level = 7.3 * phi * t / (frames * cfg.delta_t) / cfg.delta_t;
    levels.push_back(static_cast<double>(static_cast<float>(level)));
    lum.frames.emplace_back(1, 1, static_cast<float>(level));
  }

  const auto stream = simulate_ideal(lum, cfg);
  const auto oracle = fine_step_oracle(levels, cfg.delta_t, phi, 100);
  for (uint64_t n = 0; n < frames; ++n)
    REQUIRE(static_cast<int>(stream.get(0, 0, n)) ==
            static_cast<int>(oracle[n]));
}

TEST_CASE("4x4x32 simulation matches the scalar per-pixel oracle exactly") {
  TestRng rng(202);
  auto cfg = scsim_test::test_sensor(4, 4);
  LuminanceSequence lum;
  lum.frame_duration = cfg.delta_t;
  std::vector<Image2D<float>> frames;
  for (int n = 0; n < 32; ++n) {
    Image2D<float> f(4, 4);
    for (auto& v : f.data())
      v = static_cast<float>(rng.uniform(0.0, 2000.0));
    lum.frames.push_back(f);
  }
  const auto stream = simulate_ideal(lum, cfg);
  for (uint32_t r = 0; r < 4; ++r)
    for (uint32_t c = 0; c < 4; ++c) {
      std::vector<double> levels;
      for (int n = 0; n < 32; ++n)
        levels.push_back(static_cast<double>(lum.frames[n](r, c)));
      const auto oracle =
          pixel_oracle(levels, cfg.delta_t, cfg.nominal_threshold());
      for (uint64_t n = 0; n < 32; ++n)
        REQUIRE(static_cast<int>(stream.get(r, c, n)) ==
                static_cast<int>(oracle[n]));
    }
}

TEST_CASE("pointwise larger luminance never fires less") {
  TestRng rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = scsim_test::test_sensor(6, 6);
    Image2D<float> lo(6, 6), hi(6, 6);
    for (size_t i = 0; i < lo.size(); ++i) {
      lo.data()[i] = static_cast<float>(rng.uniform(0.0, 500.0));
      hi.data()[i] = lo.data()[i] + static_cast<float>(rng.uniform(0.0, 500.0));
    }
    const auto s_lo = simulate_ideal(
        scsim_test::field_luminance(lo, 128 * cfg.delta_t), cfg);
    const auto s_hi = simulate_ideal(
        scsim_test::field_luminance(hi, 128 * cfg.delta_t), cfg);
    for (uint32_t r = 0; r < 6; ++r)
      for (uint32_t c = 0; c < 6; ++c)
        REQUIRE(s_hi.count_pixel(r, c, 0, 128) >=
                s_lo.count_pixel(r, c, 0, 128));
  }
}

TEST_CASE("spike count is bounded by accumulated input") {
  TestRng rng(404);
  auto cfg = scsim_test::test_sensor(5, 5);
  const double phi = cfg.nominal_threshold();
  Image2D<float> field(5, 5);
  for (auto& v : field.data())
    v = static_cast<float>(rng.uniform(0.0, 3000.0));
  const uint64_t frames = 256;
  const auto stream = simulate_ideal(
      scsim_test::field_luminance(field, frames * cfg.delta_t), cfg);
  for (uint32_t r = 0; r < 5; ++r)
    for (uint32_t c = 0; c < 5; ++c) {
      const uint64_t count = stream.count_pixel(r, c, 0, frames);
      REQUIRE(count <= frames);
      const double total_input =
          static_cast<double>(field(r, c)) * frames * cfg.delta_t;
      REQUIRE(static_cast<double>(count) * phi <= total_input + phi);
    }
}

TEST_CASE("simulation is deterministic and schedule independent") {
  TestRng rng(505);
  auto cfg = scsim_test::test_sensor(9, 7);  // odd width exercises block alignment
  Image2D<float> field(9, 7);
  for (auto& v : field.data())
    v = static_cast<float>(rng.uniform(0.0, 2000.0));
  const auto lum = scsim_test::field_luminance(field, 64 * cfg.delta_t);

  const auto a = simulate_ideal(lum, cfg, {.threads = 1});
  const auto b = simulate_ideal(lum, cfg, {.threads = 1});
  const auto c = simulate_ideal(lum, cfg, {.threads = 4});
  const auto d = simulate_ideal(lum, cfg, {.threads = 3});
  REQUIRE(a.same_content(b));
  REQUIRE(a.same_content(c));
  REQUIRE(a.same_content(d));
}

TEST_CASE("dimension mismatch is a configuration error") {
  auto cfg = scsim_test::test_sensor(4, 4);
  const auto lum = scsim_test::constant_luminance(3, 4, 1.0, cfg.delta_t);
  REQUIRE_THROWS_AS(simulate_ideal(lum, cfg), ConfigError);
}

TEST_CASE("frame_duration must be a multiple of delta_t") {
  auto cfg = scsim_test::test_sensor(2, 2);
  const auto lum =
      scsim_test::constant_luminance(2, 2, 1.0, 2.5 * cfg.delta_t);
  REQUIRE_THROWS_AS(simulate_ideal(lum, cfg), ConfigError);
}

TEST_CASE("luminance frames coarser than delta_t are zero-order held") {
  auto cfg = scsim_test::test_sensor(1, 1);
  const double phi = cfg.nominal_threshold();
  // Two luminance frames, four readout steps each.
  LuminanceSequence lum;
  lum.frame_duration = 4 * cfg.delta_t;
  lum.frames.emplace_back(1, 1, static_cast<float>(0.5 * phi / cfg.delta_t));
  lum.frames.emplace_back(1, 1, 0.0f);
  const auto stream = simulate_ideal(lum, cfg);
  REQUIRE(stream.frames() == 8);
  // accumulates 0.5 phi per step: spikes at steps 1 and 3, then silence
  REQUIRE(stream.get(0, 0, 1));
  REQUIRE(stream.get(0, 0, 3));
  REQUIRE(stream.count_pixel(0, 0, 0, 8) == 2);
}
