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

#include "scsim/rng.hpp"

using scsim::rng::PoissonDist;
using scsim::rng::Source;
using scsim::rng::Stream;
using scsim::rng::stream_key;

TEST_CASE("stream keys are reproducible and distinguish every field") {
  const uint64_t k = stream_key(42, 3, 5, 100, Source::photon);
  REQUIRE(k == stream_key(42, 3, 5, 100, Source::photon));
  REQUIRE(k != stream_key(43, 3, 5, 100, Source::photon));
  REQUIRE(k != stream_key(42, 4, 5, 100, Source::photon));
  REQUIRE(k != stream_key(42, 3, 6, 100, Source::photon));
  REQUIRE(k != stream_key(42, 3, 5, 101, Source::photon));
  REQUIRE(k != stream_key(42, 3, 5, 100, Source::thermal));
  // row/col must not be interchangeable
  REQUIRE(stream_key(42, 3, 5, 100, Source::photon) !=
          stream_key(42, 5, 3, 100, Source::photon));
}

TEST_CASE("unit draws live in (0, 1]") {
  Stream s(stream_key(7, 0, 0, 0, Source::photon));
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_unit();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
}

TEST_CASE("gaussian draws have standard moments") {
  Stream s(stream_key(11, 1, 2, 3, Source::thermal));
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next_gaussian();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);       // ~4.5 sigma of the sample mean
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("small-lambda poisson matches the exact pmf") {
  const double lambda = 3.0;
  PoissonDist dist(lambda);
  Stream s(stream_key(5, 0, 0, 0, Source::photon));
  const int n = 200000;
  std::vector<uint64_t> counts(40, 0);
  for (int i = 0; i < n; ++i) {
    const uint64_t k = dist(s);
    if (k < counts.size()) ++counts[k];
  }
  double pmf = std::exp(-lambda);  // P(0)
  for (uint64_t k = 0; k <= 10; ++k) {
    const double expected = n * pmf;
    // 5-sigma binomial band per bin
    const double band = 5.0 * std::sqrt(expected * (1.0 - pmf)) + 1.0;
    REQUIRE(std::abs(static_cast<double>(counts[k]) - expected) <= band);
    pmf *= lambda / static_cast<double>(k + 1);
  }
}

TEST_CASE("ptrs poisson has correct mean and variance") {
  for (double lambda : {15.0, 80.0, 1000.0, 9999.0}) {
    PoissonDist dist(lambda);
    Stream s(stream_key(17, 0, 0, static_cast<uint64_t>(lambda),
                        Source::photon));
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(dist(s));
      sum += k;
      sq += k * k;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    // mean error ~ sqrt(lambda/n); allow 5 sigma
    REQUIRE(std::abs(mean - lambda) < 5.0 * std::sqrt(lambda / n));
    REQUIRE(std::abs(var - lambda) / lambda < 0.03);
  }
}

TEST_CASE("ptrs agrees with inversion across the method boundary") {
  // lambda just below and above the small-lambda cutoff should not jump
  PoissonDist below(9.9), above(10.1);
  Stream s1(stream_key(23, 0, 0, 0, Source::photon));
  Stream s2(stream_key(23, 0, 0, 1, Source::photon));
  const int n = 300000;
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    m1 += static_cast<double>(below(s1));
    m2 += static_cast<double>(above(s2));
  }
  m1 /= n;
  m2 /= n;
  REQUIRE(std::abs(m1 - 9.9) < 0.05);
  REQUIRE(std::abs(m2 - 10.1) < 0.05);
}

TEST_CASE("huge-lambda gaussian approximation keeps moments") {
  const double lambda = 5e4;
  PoissonDist dist(lambda);
  Stream s(stream_key(29, 0, 0, 0, Source::photon));
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(dist(s));
    sum += k;
    sq += k * k;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean - lambda) / lambda < 0.001);
  REQUIRE(std::abs(var - lambda) / lambda < 0.03);
}

TEST_CASE("poisson of nonpositive lambda is zero") {
  Stream s(stream_key(31, 0, 0, 0, Source::photon));
  REQUIRE(scsim::rng::poisson(s, 0.0) == 0);
  REQUIRE(scsim::rng::poisson(s, -1.0) == 0);
}
