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

#ifndef SCSIM_TESTS_TEST_UTIL_HPP
#define SCSIM_TESTS_TEST_UTIL_HPP

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "scsim/types.hpp"

namespace scsim_test {

/// Test-data generator kept independent of the library's RNG so the tests do
/// not share a randomness path with the code under test.
class TestRng {
public:
  explicit TestRng(uint64_t seed) : engine_(seed) {}

  uint64_t next_below(uint64_t bound) {
    return std::uniform_int_distribution<uint64_t>(0, bound - 1)(engine_);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  bool coin(double p = 0.5) {
    return std::bernoulli_distribution(p)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

/// Sensor config in normalized units: phi = 1, delta_t = 1e-3 s unless
/// overridden. Temperature 0 keeps the threshold exactly deterministic.
inline scsim::SensorConfig test_sensor(uint32_t height, uint32_t width,
                                       double delta_t = 1e-3) {
  scsim::SensorConfig cfg;
  cfg.height = height;
  cfg.width = width;
  cfg.delta_t = delta_t;
  cfg.capacitance = 1.0;
  cfg.reset_voltage = 2.0;
  cfg.reference_voltage = 1.0;  // phi = 1
  cfg.photon_gain = 100.0;
  cfg.temperature = 0.0;
  return cfg;
}

/// Gives the sensor a thermal sigma expressed as a fraction of the voltage
/// swing by folding it into boltzmann_k * T0 (the units are normalized).
inline void set_thermal_fraction(scsim::SensorConfig& cfg, double fraction) {
  const double sigma = fraction * cfg.voltage_swing();
  cfg.temperature = 300.0;
  cfg.boltzmann_k = sigma * sigma * cfg.capacitance / cfg.temperature;
}

inline scsim::LuminanceSequence constant_luminance(uint32_t height,
                                                   uint32_t width,
                                                   double value,
                                                   double frame_duration) {
  scsim::LuminanceSequence lum;
  lum.frame_duration = frame_duration;
  lum.frames.emplace_back(height, width, static_cast<float>(value));
  return lum;
}

/// Per-pixel constant luminance field held over the whole capture.
inline scsim::LuminanceSequence field_luminance(
    const scsim::Image2D<float>& field, double frame_duration) {
  scsim::LuminanceSequence lum;
  lum.frame_duration = frame_duration;
  lum.frames.push_back(field);
  return lum;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scsim_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace scsim_test

#endif  // SCSIM_TESTS_TEST_UTIL_HPP
