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

#ifndef SCSIM_SCSIM_HPP
#define SCSIM_SCSIM_HPP

#include "scsim/calibration.hpp"
#include "scsim/io.hpp"
#include "scsim/isi.hpp"
#include "scsim/metrics.hpp"
#include "scsim/noise.hpp"
#include "scsim/rng.hpp"
#include "scsim/sensor.hpp"
#include "scsim/types.hpp"

namespace scsim {
inline constexpr const char* kVersion = "0.1.0";
}

#endif  // SCSIM_SCSIM_HPP
