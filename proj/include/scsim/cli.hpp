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

#ifndef SCSIM_CLI_HPP
#define SCSIM_CLI_HPP

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scsim/scsim.hpp"

namespace scsim::cli {

namespace fs = std::filesystem;

/// Problems a correct invocation cannot hit (bad flags, missing inputs);
/// reported with exit code 2 instead of 1.
class UsageFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path))
    throw UsageFailure(std::string(what) + " not found: " + path.string());
}

inline void require_dir(const fs::path& path, const char* what) {
  if (!fs::is_directory(path))
    throw UsageFailure(std::string(what) + " not found: " + path.string());
}

/// Frame selection: repeated --frame values plus an optional half-open
/// --frames a:b range.
inline std::vector<uint64_t> collect_frames(const std::vector<uint64_t>& single,
                                            const std::string& range) {
  std::vector<uint64_t> frames = single;
  if (!range.empty()) {
    const auto colon = range.find(':');
    if (colon == std::string::npos)
      throw UsageFailure("--frames expects 'first:last' (half-open)");
    try {
      const uint64_t first = std::stoull(range.substr(0, colon));
      const uint64_t last = std::stoull(range.substr(colon + 1));
      if (last <= first) throw UsageFailure("--frames range is empty");
      for (uint64_t t = first; t < last; ++t) frames.push_back(t);
    } catch (const std::invalid_argument&) {
      throw UsageFailure("--frames expects numeric 'first:last'");
    } catch (const std::out_of_range&) {
      throw UsageFailure("--frames value out of range");
    }
  }
  if (frames.empty())
    throw UsageFailure("no frames selected; use --frame or --frames");
  return frames;
}

inline fs::path plane_path(const fs::path& dir, const std::string& prefix,
                           uint64_t t) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s%06llu.isi", prefix.c_str(),
                static_cast<unsigned long long>(t));
  return dir / name;
}

struct SimulateArgs {
  std::string luminance_dir;
  std::string output;
  std::string config;
  std::string params_in;
  std::string params_out;
  bool ideal = false;
  bool noisy = false;
  uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

inline int cmd_simulate(const SimulateArgs& args) {
  if (args.ideal == args.noisy)
    throw UsageFailure("choose exactly one of --ideal or --noisy");
  require_dir(args.luminance_dir, "luminance directory");

  SimulationConfig config;
  if (!args.config.empty()) {
    require_file(args.config, "config file");
    config = load_simulation_config(args.config);
  }
  if (args.seed_given) config.noise.rng_seed = args.seed;

  const LuminanceSequence lum = load_luminance_dir(args.luminance_dir);
  // The sensor array covers exactly the provided frames.
  config.sensor.height = lum.height();
  config.sensor.width = lum.width();

  const SimOptions options{args.threads};
  SpikeStream stream;
  if (args.ideal) {
    stream = simulate_ideal(lum, config.sensor, options);
  } else {
    NoiseParams params;
    if (!args.params_in.empty()) {
      require_file(args.params_in, "noise-params file");
      params = read_noise_params(args.params_in);
    } else {
      params = sample_spatial_noise(config.sensor, config.noise);
    }
    stream = simulate_noisy(lum, config.sensor, config.noise, params, options);
    if (!args.params_out.empty()) write_noise_params(params, args.params_out);
  }
  write_stream(stream, args.output);
  std::cout << args.output << ": " << stream.height() << "x" << stream.width()
            << "x" << stream.frames() << " spike stream, "
            << stream.total_spikes() << " spikes\n";
  return 0;
}

struct CalibrateArgs {
  std::string manifest;
  std::string output;
  std::string stats_csv;
  double gauge_phi = 0.0;
};

inline int cmd_calibrate(const CalibrateArgs& args) {
  require_file(args.manifest, "calibration manifest");
  CalibrationManifest manifest = load_calibration_manifest(args.manifest);
  if (args.gauge_phi != 0.0) manifest.gauge_phi = args.gauge_phi;
  const CalibrationSet set = load_calibration_set(manifest);
  const double gauge = manifest.gauge_phi > 0.0
                           ? manifest.gauge_phi
                           : set.sensor.nominal_threshold();
  const CalibrationResult result = solve_snee(set, gauge, manifest.options);
  for (const auto& warning : result.warnings)
    std::cerr << "warning: " << warning << "\n";
  write_noise_params(result.params, args.output);
  if (!args.stats_csv.empty())
    write_calibration_stats_csv(result, args.stats_csv);
  std::cout << "alpha mean " << result.stats.at("alpha").mean << ", dark mean "
            << result.stats.at("dark").mean << ", theta mean "
            << result.stats.at("theta").mean << "\n";
  return 0;
}

struct IsiArgs {
  std::string stream;
  std::string out_dir;
  std::string prefix = "plane_";
  std::vector<uint64_t> frames;
  std::string frame_range;
  uint32_t window = 0;
};

inline int cmd_isi(const IsiArgs& args) {
  require_file(args.stream, "spike stream");
  const SpikeStream stream = read_stream(args.stream);
  const auto frames = collect_frames(args.frames, args.frame_range);
  fs::create_directories(args.out_dir);
  for (uint64_t t : frames) {
    const IsiPlane plane = compute_isi_plane(stream, t, args.window);
    write_isi_plane(plane, plane_path(args.out_dir, args.prefix, t));
  }
  std::cout << "wrote " << frames.size() << " ISI planes to " << args.out_dir
            << "\n";
  return 0;
}

struct MusDecodeArgs {
  std::string dir;
  std::string prefix = "plane_";
  uint64_t first = 0;
  uint64_t count = 0;
  std::string output;
  uint64_t delta_t_ns = 25000;
  bool no_mus = false;
  bool strict = false;
};

inline int cmd_mus_decode(const MusDecodeArgs& args) {
  require_dir(args.dir, "plane directory");
  if (args.count == 0) throw UsageFailure("--count must be > 0");

  std::vector<IsiPlane> planes;
  planes.reserve(args.count);
  for (uint64_t t = args.first; t < args.first + args.count; ++t) {
    const fs::path path = plane_path(args.dir, args.prefix, t);
    require_file(path, "ISI plane");
    planes.push_back(read_isi_plane(path));
    planes.back().ref_frame = static_cast<int64_t>(t);  // trust the sequence
  }

  std::vector<IsiPlane> decoded_input;
  if (args.no_mus) {
    decoded_input = std::move(planes);
  } else {
    const MusOptions options{/*clamp_to_available=*/!args.strict};
    decoded_input.reserve(planes.size());
    for (size_t t = 0; t < planes.size(); ++t)
      decoded_input.push_back(mus_update(
          std::span<const IsiPlane>(planes).subspan(t), options));
  }

  const SpikeStream stream = decode_isi_to_stream(
      decoded_input, static_cast<double>(args.delta_t_ns) * 1e-9);
  write_stream(stream, args.output);
  std::cout << args.output << ": decoded " << stream.frames() << " frames, "
            << stream.total_spikes() << " spikes\n";
  return 0;
}

struct StatsArgs {
  std::string stream;
  std::string out_prefix;
  uint32_t pattern_window = 10;
};

inline int cmd_stats(const StatsArgs& args) {
  require_file(args.stream, "spike stream");
  const SpikeStream stream = read_stream(args.stream);
  const uint32_t window = std::min<uint64_t>(args.pattern_window,
                                             stream.frames());
  if (window == 0) throw UsageFailure("stream has no frames");
  const StreamStats stats = compute_stats(stream, window);
  write_stats_summary_csv(stats, args.out_prefix + "summary.csv");
  write_histogram_csv(stats.isi_histogram,
                      args.out_prefix + "isi_histogram.csv");
  write_pattern_csv(stats.spike_pattern,
                    args.out_prefix + "spike_pattern.csv");
  std::cout << "mean spikes per frame: " << stats.mean_spikes_per_frame
            << "\n";
  return 0;
}

struct CompareArgs {
  std::string clean;
  std::string noisy;
  std::string denoised;
  std::string output;
  std::string config;
  std::vector<uint64_t> frames;
  std::string frame_range;
  uint32_t window = 64;
};

inline int cmd_compare(const CompareArgs& args) {
  require_file(args.clean, "clean stream");
  require_file(args.noisy, "noisy stream");
  require_file(args.denoised, "denoised stream");
  SensorConfig sensor;
  if (!args.config.empty()) {
    require_file(args.config, "config file");
    sensor = load_simulation_config(args.config).sensor;
  }
  const SpikeStream clean = read_stream(args.clean);
  const SpikeStream noisy = read_stream(args.noisy);
  const SpikeStream denoised = read_stream(args.denoised);
  const auto frames = collect_frames(args.frames, args.frame_range);
  const auto rows = compare_streams(noisy, denoised, clean, frames,
                                    args.window, sensor.nominal_threshold());
  write_comparison_csv(rows, args.output);
  std::cout << "wrote " << rows.size() << " metric rows to " << args.output
            << "\n";
  return 0;
}

struct TfpArgs {
  std::string stream;
  std::string output;
  std::string config;
  uint64_t frame = 0;
  uint32_t window = 64;
};

inline int cmd_tfp(const TfpArgs& args) {
  require_file(args.stream, "spike stream");
  SensorConfig sensor;
  if (!args.config.empty()) {
    require_file(args.config, "config file");
    sensor = load_simulation_config(args.config).sensor;
  }
  const SpikeStream stream = read_stream(args.stream);
  const double phi = sensor.nominal_threshold();
  const auto image = tfp_reconstruct(stream, args.frame, args.window, phi);
  write_pgm8(image, args.output, phi / stream.delta_t());
  std::cout << args.output << ": TFP reconstruction at frame " << args.frame
            << "\n";
  return 0;
}

struct GenDatasetArgs {
  std::string manifest;
  int threads = 0;
};

inline int cmd_gen_dataset(const GenDatasetArgs& args) {
  require_file(args.manifest, "dataset manifest");
  const DatasetManifest manifest = load_dataset_manifest(args.manifest);
  const SimOptions options{args.threads};
  for (const auto& scene : manifest.scenes) {
    const GeneratedPair pair = generate_pair(scene, manifest.base_dir, options);
    std::cout << scene.name << ": clean " << pair.clean.total_spikes()
              << " spikes, noisy " << pair.noisy.total_spikes() << " spikes ("
              << pair.clean.height() << "x" << pair.clean.width() << "x"
              << pair.clean.frames() << ")\n";
  }
  return 0;
}

}  // namespace detail

/// Entry point shared by the scsim binary and the in-process CLI tests.
/// Returns 0 on success, 1 on runtime errors, 2 on usage errors.
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"scsim - spike camera simulation and spike-stream toolkit"};
  app.require_subcommand(1);

  detail::SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Simulate a spike stream from a luminance directory");
  simulate->add_option("luminance_dir", sim.luminance_dir,
                       "directory of PGM frames plus meta.txt")->required();
  simulate->add_option("-o,--output", sim.output, "output .spk file")
      ->required();
  simulate->add_flag("--ideal", sim.ideal, "noise-free model");
  simulate->add_flag("--noisy", sim.noisy, "circuit-noise model");
  simulate->add_option("--config", sim.config, "sensor/noise JSON config");
  auto* seed_opt =
      simulate->add_option("--seed", sim.seed, "override noise rng_seed");
  simulate->add_option("--params", sim.params_in,
                       "use noise params from file instead of sampling");
  simulate->add_option("--save-params", sim.params_out,
                       "persist sampled noise params");
  simulate->add_option("--threads", sim.threads, "worker threads (0 = auto)");

  detail::CalibrateArgs cal;
  auto* calibrate = app.add_subcommand(
      "calibrate", "Estimate per-pixel noise parameters from static scenes");
  calibrate->add_option("manifest", cal.manifest, "calibration manifest JSON")
      ->required();
  calibrate->add_option("-o,--output", cal.output, "output .snp params file")
      ->required();
  calibrate->add_option("--stats", cal.stats_csv, "write summary stats CSV");
  calibrate->add_option("--gauge-phi", cal.gauge_phi,
                        "threshold gauge (default: nominal phi)");

  detail::IsiArgs isi;
  auto* isi_cmd =
      app.add_subcommand("isi", "Compute ISI planes from a spike stream");
  isi_cmd->add_option("stream", isi.stream, "input .spk file")->required();
  isi_cmd->add_option("-o,--out-dir", isi.out_dir, "output directory")
      ->required();
  isi_cmd->add_option("--prefix", isi.prefix, "plane filename prefix");
  isi_cmd->add_option("--frame", isi.frames, "reference frame (repeatable)");
  isi_cmd->add_option("--frames", isi.frame_range,
                      "half-open frame range first:last");
  isi_cmd->add_option("--window", isi.window, "frames searched on each side")
      ->required();

  detail::MusDecodeArgs mus;
  auto* mus_cmd = app.add_subcommand(
      "mus-decode", "Decode an ISI plane sequence into a spike stream");
  mus_cmd->add_option("-d,--dir", mus.dir, "directory with ISI planes")
      ->required();
  mus_cmd->add_option("--prefix", mus.prefix, "plane filename prefix");
  mus_cmd->add_option("--first", mus.first, "first plane index");
  mus_cmd->add_option("--count", mus.count, "number of planes")->required();
  mus_cmd->add_option("-o,--output", mus.output, "output .spk file")
      ->required();
  mus_cmd->add_option("--delta-t-ns", mus.delta_t_ns,
                      "readout period of the decoded stream");
  mus_cmd->add_flag("--no-mus", mus.no_mus,
                    "decode the raw planes without the multi-stage update");
  mus_cmd->add_flag("--strict", mus.strict,
                    "fail instead of clamping chains near the sequence end");

  detail::StatsArgs stats;
  auto* stats_cmd =
      app.add_subcommand("stats", "Firing statistics of a spike stream");
  stats_cmd->add_option("stream", stats.stream, "input .spk file")->required();
  stats_cmd->add_option("-o,--out-prefix", stats.out_prefix,
                        "prefix for the CSV outputs")->required();
  stats_cmd->add_option("--pattern-window", stats.pattern_window,
                        "frames folded into the spike-pattern surface");

  detail::CompareArgs cmp;
  auto* compare = app.add_subcommand(
      "compare", "Score noisy/denoised streams against a clean stream");
  compare->add_option("--clean", cmp.clean, "clean .spk")->required();
  compare->add_option("--noisy", cmp.noisy, "noisy .spk")->required();
  compare->add_option("--denoised", cmp.denoised, "denoised .spk")->required();
  compare->add_option("-o,--output", cmp.output, "metrics CSV")->required();
  compare->add_option("--config", cmp.config, "sensor JSON config");
  compare->add_option("--frame", cmp.frames, "eval frame (repeatable)");
  compare->add_option("--frames", cmp.frame_range,
                      "half-open frame range first:last");
  compare->add_option("--window", cmp.window, "TFP window in frames");

  detail::TfpArgs tfp;
  auto* tfp_cmd = app.add_subcommand(
      "tfp", "TFP reconstruction of one frame as an 8-bit PGM");
  tfp_cmd->add_option("stream", tfp.stream, "input .spk file")->required();
  tfp_cmd->add_option("-o,--output", tfp.output, "output .pgm")->required();
  tfp_cmd->add_option("--frame", tfp.frame, "reference frame")->required();
  tfp_cmd->add_option("--window", tfp.window, "TFP window in frames");
  tfp_cmd->add_option("--config", tfp.config, "sensor JSON config");

  detail::GenDatasetArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-dataset", "Generate clean/noisy stream pairs from a manifest");
  gen_cmd->add_option("manifest", gen.manifest, "dataset manifest JSON")
      ->required();
  gen_cmd->add_option("--threads", gen.threads, "worker threads (0 = auto)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("scsim");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help / --version
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  sim.seed_given = seed_opt->count() > 0;

  try {
    if (app.got_subcommand(simulate)) return detail::cmd_simulate(sim);
    if (app.got_subcommand(calibrate)) return detail::cmd_calibrate(cal);
    if (app.got_subcommand(isi_cmd)) return detail::cmd_isi(isi);
    if (app.got_subcommand(mus_cmd)) return detail::cmd_mus_decode(mus);
    if (app.got_subcommand(stats_cmd)) return detail::cmd_stats(stats);
    if (app.got_subcommand(compare)) return detail::cmd_compare(cmp);
    if (app.got_subcommand(tfp_cmd)) return detail::cmd_tfp(tfp);
    if (app.got_subcommand(gen_cmd)) return detail::cmd_gen_dataset(gen);
  } catch (const UsageFailure& e) {
    std::cerr << "scsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "scsim: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace scsim::cli

#endif  // SCSIM_CLI_HPP
