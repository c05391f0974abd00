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

#ifndef SCSIM_METRICS_HPP
#define SCSIM_METRICS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "scsim/types.hpp"

namespace scsim {

/// Firing statistics of a spike stream: the per-frame spike density, the
/// histogram of complete inter-spike intervals, and the per-pixel spike count
/// over a short leading window (the "spike pattern" surface).
struct StreamStats {
  double mean_spikes_per_frame = 0.0;
  std::map<uint32_t, uint64_t> isi_histogram;
  Image2D<double> spike_pattern;
};

inline double histogram_mean(const std::map<uint32_t, uint64_t>& hist) {
  double sum = 0.0, n = 0.0;
  for (const auto& [interval, count] : hist) {
    sum += static_cast<double>(interval) * static_cast<double>(count);
    n += static_cast<double>(count);
  }
  return n > 0.0 ? sum / n : 0.0;
}

inline double histogram_variance(const std::map<uint32_t, uint64_t>& hist) {
  const double mean = histogram_mean(hist);
  double sum = 0.0, n = 0.0;
  for (const auto& [interval, count] : hist) {
    const double d = static_cast<double>(interval) - mean;
    sum += d * d * static_cast<double>(count);
    n += static_cast<double>(count);
  }
  return n > 0.0 ? sum / n : 0.0;
}

namespace detail {

/// Visits every set bit of a packed frame as a flat pixel index.
template <typename Fn>
inline void for_each_spike(std::span<const uint8_t> frame, size_t n_pixels,
                           Fn&& fn) {
  for (size_t byte = 0; byte < frame.size(); ++byte) {
    uint8_t bits = frame[byte];
    while (bits) {
      const int bit = std::countl_zero(bits);  // MSB-first packing
      const size_t pixel = byte * 8 + static_cast<size_t>(bit);
      if (pixel < n_pixels) fn(pixel);
      bits = static_cast<uint8_t>(bits & ~(0x80u >> bit));
    }
  }
}

}  // namespace detail

inline StreamStats compute_stats(const SpikeStream& stream,
                                 uint32_t pattern_window) {
  if (pattern_window < 1 || pattern_window > stream.frames())
    throw IndexError("compute_stats: pattern_window outside stream");
  const size_t n_pixels =
      static_cast<size_t>(stream.height()) * stream.width();

  StreamStats stats;
  stats.spike_pattern = Image2D<double>(stream.height(), stream.width(), 0.0);

  std::vector<int64_t> last_spike(n_pixels, -1);
  std::vector<uint64_t> hist;
  uint64_t total = 0;
  for (uint64_t n = 0; n < stream.frames(); ++n) {
    detail::for_each_spike(stream.frame_bytes(n), n_pixels, [&](size_t i) {
      ++total;
      if (n < pattern_window) stats.spike_pattern.data()[i] += 1.0;
      if (last_spike[i] >= 0) {
        const auto interval =
            static_cast<size_t>(static_cast<int64_t>(n) - last_spike[i]);
        if (interval >= hist.size()) hist.resize(interval + 1, 0);
        ++hist[interval];
      }
      last_spike[i] = static_cast<int64_t>(n);
    });
  }

  stats.mean_spikes_per_frame =
      stream.frames() == 0
          ? 0.0
          : static_cast<double>(total) /
                (static_cast<double>(stream.frames()) *
                 static_cast<double>(n_pixels));
  for (size_t k = 0; k < hist.size(); ++k)
    if (hist[k] > 0) stats.isi_histogram[static_cast<uint32_t>(k)] = hist[k];
  return stats;
}

/// Texture-from-playback: windowed firing rate scaled back to intensity
/// units, intensity = spikes * phi / (window * delta_t). The window covers
/// `window` frames starting at t - window/2.
inline Image2D<double> tfp_reconstruct(const SpikeStream& stream, uint64_t t,
                                       uint32_t window, double phi_nominal) {
  if (window < 1) throw ConfigError("tfp_reconstruct: window must be >= 1");
  if (!(phi_nominal > 0.0))
    throw ConfigError("tfp_reconstruct: nominal threshold must be > 0");
  const int64_t start = static_cast<int64_t>(t) - window / 2;
  if (start < 0 ||
      static_cast<uint64_t>(start) + window > stream.frames())
    throw IndexError("tfp_reconstruct: window outside stream");

  const size_t n_pixels =
      static_cast<size_t>(stream.height()) * stream.width();
  std::vector<uint32_t> counts(n_pixels, 0);
  for (uint64_t n = static_cast<uint64_t>(start);
       n < static_cast<uint64_t>(start) + window; ++n)
    detail::for_each_spike(stream.frame_bytes(n), n_pixels,
                           [&](size_t i) { ++counts[i]; });

  Image2D<double> out(stream.height(), stream.width());
  const double scale =
      phi_nominal / (static_cast<double>(window) * stream.delta_t());
  for (size_t i = 0; i < n_pixels; ++i)
    out.data()[i] = static_cast<double>(counts[i]) * scale;
  return out;
}

/// PSNR in dB; identical images report +infinity rather than a fake cap.
inline double psnr(const Image2D<double>& a, const Image2D<double>& b,
                   double peak) {
  if (!a.same_shape(b)) throw ConfigError("psnr: dimensions differ");
  if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
  if (a.empty()) throw ConfigError("psnr: empty images");
  double sq_sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sq_sum += d * d;
  }
  const double mse = sq_sum / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline constexpr int kSsimRadius = 5;  // 11x11 window

inline std::array<double, 2 * kSsimRadius + 1> ssim_kernel() {
  std::array<double, 2 * kSsimRadius + 1> k{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
    k[i + kSsimRadius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + kSsimRadius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

/// Mean SSIM with the standard parameterization: 11x11 Gaussian weights
/// (sigma 1.5), k1 = 0.01, k2 = 0.03, evaluated over all centers where the
/// full window fits. Weighted moments use the Gaussian as a probability
/// window (no sample-covariance correction).
inline double ssim(const Image2D<double>& a, const Image2D<double>& b,
                   double peak) {
  if (!a.same_shape(b)) throw ConfigError("ssim: dimensions differ");
  if (!(peak > 0.0)) throw ConfigError("ssim: peak must be > 0");
  const int radius = detail::kSsimRadius;
  const int h = static_cast<int>(a.height()), w = static_cast<int>(a.width());
  if (h < 2 * radius + 1 || w < 2 * radius + 1)
    throw ConfigError("ssim: images smaller than the 11x11 window");
  const auto kernel = detail::ssim_kernel();

  // Separable weighted moments of (a, b, a^2, b^2, ab): rows first.
  const int wi = w - 2 * radius;  // valid interior width
  const size_t row_n = static_cast<size_t>(h) * static_cast<size_t>(wi);
  std::array<std::vector<double>, 5> row_pass;
  for (auto& v : row_pass) v.assign(row_n, 0.0);
  for (int r = 0; r < h; ++r) {
    const double* pa = a.row(static_cast<uint32_t>(r));
    const double* pb = b.row(static_cast<uint32_t>(r));
    for (int c = 0; c < wi; ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int k = 0; k <= 2 * radius; ++k) {
        const double va = pa[c + k], vb = pb[c + k], wk = kernel[k];
        sa += wk * va;
        sb += wk * vb;
        saa += wk * va * va;
        sbb += wk * vb * vb;
        sab += wk * va * vb;
      }
      const size_t i = static_cast<size_t>(r) * wi + c;
      row_pass[0][i] = sa;
      row_pass[1][i] = sb;
      row_pass[2][i] = saa;
      row_pass[3][i] = sbb;
      row_pass[4][i] = sab;
    }
  }

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const int hi = h - 2 * radius;
  double ssim_sum = 0.0;
  for (int r = 0; r < hi; ++r) {
    for (int c = 0; c < wi; ++c) {
      double m[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k <= 2 * radius; ++k) {
        const size_t i = static_cast<size_t>(r + k) * wi + c;
        const double wk = kernel[k];
        for (int f = 0; f < 5; ++f) m[f] += wk * row_pass[f][i];
      }
      const double mu_a = m[0], mu_b = m[1];
      const double var_a = m[2] - mu_a * mu_a;
      const double var_b = m[3] - mu_b * mu_b;
      const double cov = m[4] - mu_a * mu_b;
      ssim_sum += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                  ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return ssim_sum / (static_cast<double>(hi) * static_cast<double>(wi));
}

struct ComparisonRow {
  uint64_t frame = 0;
  double psnr_noisy = 0.0;
  double ssim_noisy = 0.0;
  double psnr_denoised = 0.0;
  double ssim_denoised = 0.0;
};

/// TFP-reconstructs the three streams at each eval frame and scores the noisy
/// and denoised reconstructions against the clean one. The metric peak is the
/// intensity of an always-firing pixel, phi / delta_t.
inline std::vector<ComparisonRow> compare_streams(
    const SpikeStream& noisy, const SpikeStream& denoised,
    const SpikeStream& clean, std::span<const uint64_t> eval_frames,
    uint32_t window, double phi_nominal) {
  if (noisy.height() != clean.height() || noisy.width() != clean.width() ||
      denoised.height() != clean.height() ||
      denoised.width() != clean.width())
    throw ConfigError("compare_streams: stream dimensions differ");
  const double peak = phi_nominal / clean.delta_t();
  std::vector<ComparisonRow> rows;
  rows.reserve(eval_frames.size());
  for (uint64_t t : eval_frames) {
    const auto ref = tfp_reconstruct(clean, t, window, phi_nominal);
    const auto img_noisy = tfp_reconstruct(noisy, t, window, phi_nominal);
    const auto img_denoised = tfp_reconstruct(denoised, t, window, phi_nominal);
    rows.push_back({t, psnr(img_noisy, ref, peak), ssim(img_noisy, ref, peak),
                    psnr(img_denoised, ref, peak),
                    ssim(img_denoised, ref, peak)});
  }
  return rows;
}

}  // namespace scsim

#endif  // SCSIM_METRICS_HPP
