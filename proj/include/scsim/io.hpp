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

#ifndef SCSIM_IO_HPP
#define SCSIM_IO_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scsim/calibration.hpp"
#include "scsim/isi.hpp"
#include "scsim/metrics.hpp"
#include "scsim/noise.hpp"
#include "scsim/types.hpp"

namespace scsim {

// ---------------------------------------------------------------------------
// Binary primitives (all multi-byte fields little-endian)

namespace detail {

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

/// Cursor over a fully loaded file; every read is bounds-checked so a
/// truncated file can never yield a partial result.
class ByteReader {
public:
  ByteReader(const std::vector<uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_]) |
                 static_cast<uint16_t>(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 8;
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void raw(uint8_t* dst, size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  void expect_magic(const char (&magic)[5]) {
    need(4, /*magic=*/true);
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
      throw BadMagicError(name_ + ": bad magic, expected '" +
                          std::string(magic, 4) + "'");
    pos_ += 4;
  }
  size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end() {
    if (remaining() != 0)
      throw ParseError(name_ + ": trailing bytes after payload");
  }
  const std::string& name() const { return name_; }

private:
  void need(size_t n, bool magic = false) {
    if (bytes_.size() - pos_ < n) {
      if (magic) throw BadMagicError(name_ + ": file shorter than its magic");
      throw TruncatedFileError(name_ + ": truncated file");
    }
  }
  const std::vector<uint8_t>& bytes_;
  std::string name_;
  size_t pos_ = 0;
};

inline std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path,
                       const std::vector<uint8_t>& bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spike stream files ("SPK1")
//
//   offset size field
//   0      4    magic "SPK1"
//   4      2    version (1), u16 LE
//   6      4    height, u32 LE
//   10     4    width, u32 LE
//   14     8    frame count N, u64 LE
//   22     8    delta_t in nanoseconds, u64 LE
//   30     4    flags, u32 LE (bit 0 = noisy, bit 1 = ideal)
//   34     -    payload: N frames of ceil(H*W/8) bytes, pixels row-major,
//               MSB-first within each byte

inline constexpr uint16_t kSpikeFileVersion = 1;

inline void write_stream(const SpikeStream& stream,
                         const std::filesystem::path& path) {
  std::vector<uint8_t> out;
  out.reserve(34 + stream.payload().size());
  out.insert(out.end(), {'S', 'P', 'K', '1'});
  detail::put_u16(out, kSpikeFileVersion);
  detail::put_u32(out, stream.height());
  detail::put_u32(out, stream.width());
  detail::put_u64(out, stream.frames());
  detail::put_u64(out,
                  static_cast<uint64_t>(std::llround(stream.delta_t() * 1e9)));
  detail::put_u32(out, stream.flags());
  out.insert(out.end(), stream.payload().begin(), stream.payload().end());
  detail::write_file(path, out);
}

inline SpikeStream read_stream(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.string());
  reader.expect_magic("SPK1");
  const uint16_t version = reader.u16();
  if (version != kSpikeFileVersion)
    throw VersionError(path.string() + ": unsupported spike file version " +
                       std::to_string(version));
  const uint32_t h = reader.u32();
  const uint32_t w = reader.u32();
  const uint64_t n = reader.u64();
  const uint64_t delta_t_ns = reader.u64();
  const uint32_t flags = reader.u32();
  if (h == 0 || w == 0)
    throw ParseError(path.string() + ": zero sensor dimension");
  const uint64_t stride = (static_cast<uint64_t>(h) * w + 7) / 8;
  if (n != 0 && stride > reader.remaining() / n)
    throw TruncatedFileError(path.string() + ": payload shorter than header claims");
  SpikeStream stream(h, w, n, static_cast<double>(delta_t_ns) * 1e-9);
  stream.set_flags(flags);
  if (n != 0) reader.raw(stream.payload().data(), stream.payload().size());
  reader.expect_end();
  return stream;
}

// ---------------------------------------------------------------------------
// ISI plane files ("ISI1"): 16-byte header, then u16 LE values row-major.
//
//   offset size field
//   0      4    magic "ISI1"
//   4      4    height, u32 LE
//   8      4    width, u32 LE
//   12     4    ref_frame, i32 LE
//   16     -    H*W u16 LE intervals; 0xFFFF = sentinel, 0 is invalid

inline void write_isi_plane(const IsiPlane& plane,
                            const std::filesystem::path& path) {
  if (plane.ref_frame < INT32_MIN || plane.ref_frame > INT32_MAX)
    throw IoError("write_isi_plane: ref_frame does not fit the file format");
  std::vector<uint8_t> out;
  out.reserve(16 + plane.values.size() * 2);
  out.insert(out.end(), {'I', 'S', 'I', '1'});
  detail::put_u32(out, plane.values.height());
  detail::put_u32(out, plane.values.width());
  detail::put_u32(out, static_cast<uint32_t>(
                           static_cast<int32_t>(plane.ref_frame)));
  for (uint16_t v : plane.values.data()) {
    if (v == 0)
      throw IoError("write_isi_plane: zero interval is not representable");
    detail::put_u16(out, v);
  }
  detail::write_file(path, out);
}

inline IsiPlane read_isi_plane(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.string());
  reader.expect_magic("ISI1");
  const uint32_t h = reader.u32();
  const uint32_t w = reader.u32();
  const int32_t ref = static_cast<int32_t>(reader.u32());
  if (h == 0 || w == 0) throw ParseError(path.string() + ": zero dimension");
  IsiPlane plane{Image2D<uint16_t>(h, w), ref, 0};
  for (uint16_t& v : plane.values.data()) {
    v = reader.u16();
    if (v == 0) throw ParseError(path.string() + ": zero interval value");
  }
  reader.expect_end();
  return plane;
}

// ---------------------------------------------------------------------------
// Noise parameter files ("SNP1"): four f64 LE maps after a 14-byte header.
//
//   offset size field
//   0      4    magic "SNP1"
//   4      2    version (1), u16 LE
//   6      4    height, u32 LE
//   10     4    width, u32 LE
//   14     -    alpha, dark, cap, bias maps, each H*W f64 LE row-major

inline constexpr uint16_t kNoiseParamsFileVersion = 1;

inline void write_noise_params(const NoiseParams& params,
                               const std::filesystem::path& path) {
  std::vector<uint8_t> out;
  out.reserve(14 + params.alpha.size() * 8 * 4);
  out.insert(out.end(), {'S', 'N', 'P', '1'});
  detail::put_u16(out, kNoiseParamsFileVersion);
  detail::put_u32(out, params.height());
  detail::put_u32(out, params.width());
  for (const auto* map : {&params.alpha, &params.dark, &params.cap, &params.bias})
    for (double v : map->data()) detail::put_f64(out, v);
  detail::write_file(path, out);
}

inline NoiseParams read_noise_params(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.string());
  reader.expect_magic("SNP1");
  const uint16_t version = reader.u16();
  if (version != kNoiseParamsFileVersion)
    throw VersionError(path.string() + ": unsupported noise-params version " +
                       std::to_string(version));
  const uint32_t h = reader.u32();
  const uint32_t w = reader.u32();
  if (h == 0 || w == 0) throw ParseError(path.string() + ": zero dimension");
  NoiseParams params{Image2D<double>(h, w), Image2D<double>(h, w),
                     Image2D<double>(h, w), Image2D<double>(h, w)};
  for (auto* map : {&params.alpha, &params.dark, &params.cap, &params.bias})
    for (double& v : map->data()) v = reader.f64();
  reader.expect_end();
  return params;
}

// ---------------------------------------------------------------------------
// PGM (P5, 8- or 16-bit; 16-bit samples are big-endian per the format)

struct PgmImage {
  Image2D<uint16_t> pixels;
  uint16_t maxval = 255;
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  size_t pos = 0;
  const auto token = [&]() -> std::string {
    // skip whitespace and '#' comment lines
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos]))
      t.push_back(static_cast<char>(bytes[pos++]));
    if (t.empty()) throw TruncatedFileError(path.string() + ": truncated PGM header");
    return t;
  };
  const auto number = [&](const char* field) -> uint64_t {
    const std::string t = token();
    uint64_t v = 0;
    for (char ch : t) {
      if (ch < '0' || ch > '9')
        throw ParseError(path.string() + ": bad PGM " + field);
      v = v * 10 + static_cast<uint64_t>(ch - '0');
    }
    return v;
  };

  if (token() != "P5")
    throw BadMagicError(path.string() + ": not a binary PGM (P5) file");
  const uint64_t w = number("width");
  const uint64_t h = number("height");
  const uint64_t maxval = number("maxval");
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
    throw ParseError(path.string() + ": bad PGM dimensions or maxval");
  ++pos;  // single whitespace byte after maxval

  PgmImage img{Image2D<uint16_t>(static_cast<uint32_t>(h),
                                 static_cast<uint32_t>(w)),
               static_cast<uint16_t>(maxval)};
  const size_t n = img.pixels.size();
  const size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  if (bytes.size() - pos < n * bytes_per_sample)
    throw TruncatedFileError(path.string() + ": truncated PGM payload");
  if (bytes_per_sample == 1) {
    for (size_t i = 0; i < n; ++i) img.pixels.data()[i] = bytes[pos + i];
  } else {
    for (size_t i = 0; i < n; ++i)
      img.pixels.data()[i] = static_cast<uint16_t>(
          (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]);
  }
  return img;
}

/// Writes an intensity image as 8-bit PGM, linearly scaled so `peak` maps to
/// 255. The scale factor (intensity units per gray level) is recorded in a
/// header comment so the image remains quantitative.
inline void write_pgm8(const Image2D<double>& img,
                       const std::filesystem::path& path, double peak) {
  if (!(peak > 0.0)) throw ConfigError("write_pgm8: peak must be > 0");
  std::ostringstream header;
  header << "P5\n# scale " << (peak / 255.0) << " intensity-units per level\n"
         << img.width() << " " << img.height() << "\n255\n";
  std::vector<uint8_t> out(header.str().begin(), header.str().end());
  out.reserve(out.size() + img.size());
  for (double v : img.data()) {
    const double scaled = std::round(v * 255.0 / peak);
    out.push_back(static_cast<uint8_t>(std::clamp(scaled, 0.0, 255.0)));
  }
  detail::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Luminance input: a directory of PGM frames plus a small key-value sidecar
// (meta.txt) with the per-frame duration and the intensity scale applied to
// raw pixel values.

struct LuminanceMeta {
  double frame_duration = 0.0;   // seconds, required
  double intensity_scale = 1.0;  // intensity units per pixel count
};

inline LuminanceMeta read_luminance_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  LuminanceMeta meta;
  bool have_duration = false;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'key = value'");
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "frame_duration") {
        meta.frame_duration = std::stod(value);
        have_duration = true;
      } else if (key == "intensity_scale") {
        meta.intensity_scale = std::stod(value);
      } else {
        throw ParseError(path.string() + ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError(path.string() + ": bad value for '" + key + "'");
    }
  }
  if (!have_duration)
    throw ParseError(path.string() + ": missing required key frame_duration");
  if (!(meta.frame_duration > 0.0))
    throw ParseError(path.string() + ": frame_duration must be > 0");
  if (!(meta.intensity_scale > 0.0))
    throw ParseError(path.string() + ": intensity_scale must be > 0");
  return meta;
}

inline LuminanceSequence load_luminance_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError(dir.string() + " is not a directory");
  const LuminanceMeta meta = read_luminance_meta(dir / "meta.txt");

  std::vector<std::filesystem::path> frames;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".pgm") frames.push_back(entry.path());
  if (frames.empty()) throw IoError(dir.string() + ": no .pgm frames");
  std::sort(frames.begin(), frames.end());

  LuminanceSequence lum;
  lum.frame_duration = meta.frame_duration;
  lum.frames.reserve(frames.size());
  for (const auto& path : frames) {
    const PgmImage img = read_pgm(path);
    Image2D<float> frame(img.pixels.height(), img.pixels.width());
    for (size_t i = 0; i < frame.size(); ++i)
      frame.data()[i] = static_cast<float>(img.pixels.data()[i] *
                                           meta.intensity_scale);
    lum.frames.push_back(std::move(frame));
  }
  lum.validate();
  return lum;
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

inline void check_keys(const nlohmann::json& obj,
                       std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return key == k;
        }) == allowed.end())
      throw ParseError(where + ": unknown key '" + key + "'");
  }
}

/// Rethrows nlohmann type/conversion errors as scsim parse errors.
template <typename Fn>
auto json_guard(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline SensorConfig sensor_config_from_json(const nlohmann::json& obj,
                                            SensorConfig base = {}) {
  detail::check_keys(obj,
                     {"height", "width", "delta_t", "capacitance",
                      "reset_voltage", "reference_voltage", "photon_gain",
                      "boltzmann_k", "temperature"},
                     "sensor config");
  base.height = obj.value("height", base.height);
  base.width = obj.value("width", base.width);
  base.delta_t = obj.value("delta_t", base.delta_t);
  base.capacitance = obj.value("capacitance", base.capacitance);
  base.reset_voltage = obj.value("reset_voltage", base.reset_voltage);
  base.reference_voltage = obj.value("reference_voltage", base.reference_voltage);
  base.photon_gain = obj.value("photon_gain", base.photon_gain);
  base.boltzmann_k = obj.value("boltzmann_k", base.boltzmann_k);
  base.temperature = obj.value("temperature", base.temperature);
  base.validate();
  return base;
}

inline NoiseConfig noise_config_from_json(const nlohmann::json& obj,
                                          NoiseConfig base = {}) {
  detail::check_keys(obj,
                     {"mu_alpha", "sigma_alpha", "mu_dark", "sigma_dark",
                      "sigma_c", "sigma_v", "enable_shot_noise",
                      "enable_thermal_noise", "rng_seed"},
                     "noise config");
  base.mu_alpha = obj.value("mu_alpha", base.mu_alpha);
  base.sigma_alpha = obj.value("sigma_alpha", base.sigma_alpha);
  base.mu_dark = obj.value("mu_dark", base.mu_dark);
  base.sigma_dark = obj.value("sigma_dark", base.sigma_dark);
  base.sigma_c = obj.value("sigma_c", base.sigma_c);
  base.sigma_v = obj.value("sigma_v", base.sigma_v);
  base.enable_shot_noise = obj.value("enable_shot_noise", base.enable_shot_noise);
  base.enable_thermal_noise =
      obj.value("enable_thermal_noise", base.enable_thermal_noise);
  base.rng_seed = obj.value("rng_seed", base.rng_seed);
  base.validate();
  return base;
}

struct SimulationConfig {
  SensorConfig sensor;
  NoiseConfig noise;
};

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  nlohmann::json doc =
      nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr,
                            /*allow_exceptions=*/false);
  if (doc.is_discarded())
    throw ParseError(path.string() + ": invalid JSON");
  return doc;
}

inline SimulationConfig load_simulation_config(
    const std::filesystem::path& path) {
  return detail::json_guard(path, [&] {
    const nlohmann::json doc = parse_json_file(path);
    if (!doc.is_object())
      throw ParseError(path.string() + ": expected an object");
    detail::check_keys(doc, {"sensor", "noise"}, path.string());
    SimulationConfig cfg;
    if (doc.contains("sensor"))
      cfg.sensor = sensor_config_from_json(doc.at("sensor"));
    if (doc.contains("noise"))
      cfg.noise = noise_config_from_json(doc.at("noise"));
    return cfg;
  });
}

// ---------------------------------------------------------------------------
// Dataset manifest: scene list for clean/noisy pair generation. Paths are
// resolved relative to the manifest location.

struct DatasetScene {
  std::string name;
  std::filesystem::path luminance_dir;
  std::filesystem::path clean_output;
  std::filesystem::path noisy_output;
  std::filesystem::path params_output;  // empty = noisy_output + ".snp"
  SensorConfig sensor;
  NoiseConfig noise;
};

struct DatasetManifest {
  std::filesystem::path base_dir;
  std::vector<DatasetScene> scenes;
};

inline DatasetManifest load_dataset_manifest(
    const std::filesystem::path& path) {
  return detail::json_guard(path, [&] {
  const nlohmann::json doc = parse_json_file(path);
  if (!doc.is_object()) throw ParseError(path.string() + ": expected an object");
  detail::check_keys(doc, {"sensor", "noise", "scenes"}, path.string());

  SensorConfig default_sensor;
  NoiseConfig default_noise;
  if (doc.contains("sensor"))
    default_sensor = sensor_config_from_json(doc.at("sensor"));
  if (doc.contains("noise"))
    default_noise = noise_config_from_json(doc.at("noise"));

  DatasetManifest manifest;
  manifest.base_dir = path.has_parent_path()
                          ? path.parent_path()
                          : std::filesystem::path(".");
  if (!doc.contains("scenes") || !doc.at("scenes").is_array() ||
      doc.at("scenes").empty())
    throw ParseError(path.string() + ": 'scenes' must be a non-empty array");
  for (const auto& entry : doc.at("scenes")) {
    detail::check_keys(entry,
                       {"name", "luminance_dir", "clean_output", "noisy_output",
                        "params_output", "seed", "sensor", "noise"},
                       path.string() + " scene");
    DatasetScene scene;
    scene.name = entry.value("name", std::string("scene"));
    if (!entry.contains("luminance_dir") || !entry.contains("clean_output") ||
        !entry.contains("noisy_output"))
      throw ParseError(path.string() +
                       ": scene needs luminance_dir, clean_output, noisy_output");
    scene.luminance_dir = entry.at("luminance_dir").get<std::string>();
    scene.clean_output = entry.at("clean_output").get<std::string>();
    scene.noisy_output = entry.at("noisy_output").get<std::string>();
    scene.params_output =
        entry.value("params_output", scene.noisy_output.string() + ".snp");
    scene.sensor = entry.contains("sensor")
                       ? sensor_config_from_json(entry.at("sensor"), default_sensor)
                       : default_sensor;
    scene.noise = entry.contains("noise")
                      ? noise_config_from_json(entry.at("noise"), default_noise)
                      : default_noise;
    if (entry.contains("seed"))
      scene.noise.rng_seed = entry.at("seed").get<uint64_t>();
    manifest.scenes.push_back(std::move(scene));
  }
  return manifest;
  });
}

struct GeneratedPair {
  SpikeStream clean;
  SpikeStream noisy;
  NoiseParams params;
};

/// Simulates one manifest scene to a clean/noisy spike stream pair sharing
/// dimensions, delta_t and luminance input; the sampled noise parameters are
/// persisted next to the noisy stream so the pair is reproducible.
inline GeneratedPair generate_pair(const DatasetScene& scene,
                                   const std::filesystem::path& base_dir,
                                   const SimOptions& options = {}) {
  const auto resolve = [&](const std::filesystem::path& p) {
    return p.is_absolute() ? p : base_dir / p;
  };
  const LuminanceSequence lum = load_luminance_dir(resolve(scene.luminance_dir));

  GeneratedPair pair;
  pair.clean = simulate_ideal(lum, scene.sensor, options);
  pair.params = sample_spatial_noise(scene.sensor, scene.noise);
  pair.noisy = simulate_noisy(lum, scene.sensor, scene.noise, pair.params, options);

  write_stream(pair.clean, resolve(scene.clean_output));
  write_stream(pair.noisy, resolve(scene.noisy_output));
  write_noise_params(pair.params, resolve(scene.params_output));
  return pair;
}

// ---------------------------------------------------------------------------
// Calibration manifest: (luminance level, stream file) pairs.

struct CalibrationManifest {
  SensorConfig sensor;
  double gauge_phi = 0.0;  // 0 = use the sensor's nominal threshold
  SneeOptions options;
  std::vector<std::pair<double, std::filesystem::path>> scenes;
  std::filesystem::path base_dir;
};

inline CalibrationManifest load_calibration_manifest(
    const std::filesystem::path& path) {
  return detail::json_guard(path, [&] {
  const nlohmann::json doc = parse_json_file(path);
  if (!doc.is_object()) throw ParseError(path.string() + ": expected an object");
  detail::check_keys(doc, {"sensor", "gauge_phi", "priors", "scenes"},
                     path.string());
  CalibrationManifest manifest;
  manifest.base_dir = path.has_parent_path()
                          ? path.parent_path()
                          : std::filesystem::path(".");
  if (doc.contains("sensor"))
    manifest.sensor = sensor_config_from_json(doc.at("sensor"));
  manifest.gauge_phi = doc.value("gauge_phi", 0.0);
  if (doc.contains("priors")) {
    const auto& priors = doc.at("priors");
    detail::check_keys(priors, {"sigma_c", "sigma_v"}, path.string() + " priors");
    manifest.options.prior_sigma_c = priors.value("sigma_c", 0.0);
    manifest.options.prior_sigma_v = priors.value("sigma_v", 0.0);
  }
  if (!doc.contains("scenes") || !doc.at("scenes").is_array())
    throw ParseError(path.string() + ": 'scenes' must be an array");
  for (const auto& entry : doc.at("scenes")) {
    detail::check_keys(entry, {"luminance", "stream"}, path.string() + " scene");
    if (!entry.contains("luminance") || !entry.contains("stream"))
      throw ParseError(path.string() + ": scene needs luminance and stream");
    manifest.scenes.emplace_back(entry.at("luminance").get<double>(),
                                 entry.at("stream").get<std::string>());
  }
  return manifest;
  });
}

inline CalibrationSet load_calibration_set(const CalibrationManifest& manifest) {
  CalibrationSet set;
  set.sensor = manifest.sensor;
  for (const auto& [mu, stream_path] : manifest.scenes) {
    const auto resolved = stream_path.is_absolute()
                              ? stream_path
                              : manifest.base_dir / stream_path;
    set.scenes.push_back({mu, read_stream(resolved)});
  }
  return set;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

inline std::string csv_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  return out;
}

}  // namespace detail

inline void write_histogram_csv(const std::map<uint32_t, uint64_t>& hist,
                                const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "interval,count\n";
  for (const auto& [interval, count] : hist)
    out << interval << "," << count << "\n";
}

inline void write_pattern_csv(const Image2D<double>& pattern,
                              const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  for (uint32_t r = 0; r < pattern.height(); ++r) {
    for (uint32_t c = 0; c < pattern.width(); ++c) {
      if (c) out << ",";
      out << detail::csv_num(pattern(r, c));
    }
    out << "\n";
  }
}

inline void write_stats_summary_csv(const StreamStats& stats,
                                    const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "metric,value\n";
  out << "mean_spikes_per_frame," << detail::csv_num(stats.mean_spikes_per_frame)
      << "\n";
  out << "isi_mean," << detail::csv_num(histogram_mean(stats.isi_histogram))
      << "\n";
  out << "isi_variance,"
      << detail::csv_num(histogram_variance(stats.isi_histogram)) << "\n";
}

inline void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                                 const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "frame,psnr_noisy,ssim_noisy,psnr_denoised,ssim_denoised\n";
  for (const auto& row : rows)
    out << row.frame << "," << detail::csv_num(row.psnr_noisy) << ","
        << detail::csv_num(row.ssim_noisy) << ","
        << detail::csv_num(row.psnr_denoised) << ","
        << detail::csv_num(row.ssim_denoised) << "\n";
}

inline void write_calibration_stats_csv(const CalibrationResult& result,
                                        const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "name,mean,std\n";
  for (const char* name : {"alpha", "dark", "cap", "bias", "theta", "residual"}) {
    const auto& s = result.stats.at(name);
    out << name << "," << detail::csv_num(s.mean) << ","
        << detail::csv_num(s.stddev) << "\n";
  }
  uint64_t dead = 0;
  for (uint8_t d : result.dead_mask.data()) dead += d;
  out << "dead_pixels," << dead << ",0\n";
}

}  // namespace scsim

#endif  // SCSIM_IO_HPP
