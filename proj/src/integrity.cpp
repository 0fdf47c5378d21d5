#include "fef/integrity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>

#include "fef/error.hpp"
#include "fef/parallel.hpp"

namespace fef {

namespace {

void require_size(const GrayImage& img, int min_w, int min_h, const char* what) {
  if (img.width() < min_w || img.height() < min_h) {
    throw Error(ErrorKind::EmptyRegion, std::string(what) + " needs at least " + std::to_string(min_w) + "x" +
                                            std::to_string(min_h) + " pixels, got " + std::to_string(img.width()) +
                                            "x" + std::to_string(img.height()));
  }
}

struct SobelResponse {
  int gx;
  int gy;
};

template <class Sample>
SobelResponse sobel_at(Sample&& v, int x, int y) {
  const int gx = (v(x + 1, y - 1) + 2 * v(x + 1, y) + v(x + 1, y + 1)) -
                 (v(x - 1, y - 1) + 2 * v(x - 1, y) + v(x - 1, y + 1));
  const int gy = (v(x - 1, y + 1) + 2 * v(x, y + 1) + v(x + 1, y + 1)) -
                 (v(x - 1, y - 1) + 2 * v(x, y - 1) + v(x + 1, y - 1));
  return {gx, gy};
}

// 5-tap sampled Gaussian, normalised to unit sum.
std::array<double, 5> gaussian_taps(double sigma) {
  std::array<double, 5> k{};
  double sum = 0.0;
  for (int i = -2; i <= 2; ++i) {
    k[static_cast<std::size_t>(i + 2)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i + 2)];
  }
  for (auto& w : k) w /= sum;
  return k;
}

GrayImage gaussian_smooth(const GrayImage& img, double sigma) {
  const auto k = gaussian_taps(sigma);
  const int w = img.width();
  const int h = img.height();
  std::vector<double> horiz(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += k[static_cast<std::size_t>(i + 2)] * img.clamped(x + i, y);
      horiz[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = acc;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += k[static_cast<std::size_t>(i + 2)] *
               horiz[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
      }
      out.set(x, y, static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc), 0, 255)));
    }
  }
  return out;
}

using Spectrum = std::vector<std::complex<double>>;

// In-place 1-D DFT of `n` samples spaced `stride` apart.
void dft_1d(Spectrum& data, std::size_t offset, std::size_t stride, std::size_t n,
            const std::vector<std::complex<double>>& twiddle, Spectrum& scratch) {
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) acc += data[offset + j * stride] * twiddle[(k * j) % n];
    scratch[k] = acc;
  }
  for (std::size_t k = 0; k < n; ++k) data[offset + k * stride] = scratch[k];
}

std::vector<std::complex<double>> twiddles(std::size_t n) {
  std::vector<std::complex<double>> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  return t;
}

Spectrum dft_2d(const GrayImage& img) {
  const auto w = static_cast<std::size_t>(img.width());
  const auto h = static_cast<std::size_t>(img.height());
  Spectrum data(w * h);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(img.bytes()[i]);
  Spectrum scratch(std::max(w, h));
  const auto tw_row = twiddles(w);
  for (std::size_t y = 0; y < h; ++y) dft_1d(data, y * w, 1, w, tw_row, scratch);
  const auto tw_col = twiddles(h);
  for (std::size_t x = 0; x < w; ++x) dft_1d(data, x, w, h, tw_col, scratch);
  return data;
}

// Signed frequency of bin `u` once the spectrum is shifted so DC sits at n/2.
long centred_offset(std::size_t u, std::size_t n) {
  const std::size_t half = n / 2;
  return static_cast<long>((u + half) % n) - static_cast<long>(half);
}

}  // namespace

double laplacian_blur(const GrayImage& crop) {
  if (crop.empty()) throw Error(ErrorKind::EmptyRegion, "Laplacian blur on an empty crop");
  double sum_sq = 0.0;
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) {
      const int r = crop.clamped(x, y - 1) + crop.clamped(x - 1, y) + crop.clamped(x + 1, y) +
                    crop.clamped(x, y + 1) - 4 * crop.at(x, y);
      sum_sq += static_cast<double>(r) * r;
    }
  }
  return sum_sq / static_cast<double>(crop.size());
}

double delta_blur(double a, double b) { return std::abs(a - b); }

double lab_lightness(Rgb c) {
  auto linear = [](std::uint8_t v) {
    const double s = v / 255.0;
    return s <= 0.04045 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
  };
  const double y = 0.2126729 * linear(c.r) + 0.7151522 * linear(c.g) + 0.0721750 * linear(c.b);
  constexpr double epsilon = 216.0 / 24389.0;  // (6/29)^3
  constexpr double kappa = 24389.0 / 27.0;     // (29/3)^3
  return y > epsilon ? 116.0 * std::cbrt(y) - 16.0 : kappa * y;
}

LabStats lab_stats(const RgbImage& crop) {
  if (crop.empty()) throw Error(ErrorKind::EmptyRegion, "LAB statistics on an empty crop");
  const auto n = static_cast<double>(crop.width()) * crop.height();
  std::vector<double> lightness;
  lightness.reserve(static_cast<std::size_t>(n));
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) lightness.push_back(lab_lightness(crop.at(x, y)));
  }
  // Shift by the first sample so constant fields come out exact.
  const double pivot = lightness.front();
  double shifted_sum = 0.0;
  for (double l : lightness) shifted_sum += l - pivot;
  const double shifted_mean = shifted_sum / n;
  double ss = 0.0;
  for (double l : lightness) {
    const double d = (l - pivot) - shifted_mean;
    ss += d * d;
  }
  return {pivot + shifted_mean, std::sqrt(ss / n)};
}

double delta_color(LabStats a, LabStats b) { return std::abs(a.mu - b.mu) + std::abs(a.sigma - b.sigma); }

double glcm_contrast(const GrayImage& crop, int levels) {
  if (crop.height() < 1 || crop.width() < 2) {
    throw Error(ErrorKind::EmptyRegion, "GLCM needs a crop at least 2 pixels wide");
  }
  if (levels < 2 || levels > 256) throw Error(ErrorKind::RangeError, "GLCM levels must be in [2, 256]");
  const auto L = static_cast<std::size_t>(levels);
  std::vector<long long> counts(L * L, 0);
  auto quantize = [levels](std::uint8_t v) { return static_cast<std::size_t>(v * levels / 256); };
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x + 1 < crop.width(); ++x) {
      const std::size_t a = quantize(crop.at(x, y));
      const std::size_t b = quantize(crop.at(x + 1, y));
      ++counts[a * L + b];
      ++counts[b * L + a];
    }
  }
  long long total = 0;
  long long weighted = 0;
  for (std::size_t n = 0; n < L; ++n) {
    for (std::size_t m = 0; m < L; ++m) {
      const long long c = counts[n * L + m];
      const long long d = static_cast<long long>(n) - static_cast<long long>(m);
      total += c;
      weighted += d * d * c;
    }
  }
  return static_cast<double>(weighted) / static_cast<double>(total);
}

double delta_texture(double a, double b) { return std::abs(a - b); }

double gradient_mean(const GrayImage& crop) {
  require_size(crop, 3, 3, "gradient mean");
  auto v = [&](int x, int y) { return static_cast<int>(crop.clamped(x, y)); };
  double sum = 0.0;
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) {
      const auto g = sobel_at(v, x, y);
      sum += std::sqrt(static_cast<double>(g.gx) * g.gx + static_cast<double>(g.gy) * g.gy);
    }
  }
  return sum / static_cast<double>(crop.size());
}

std::vector<std::uint8_t> canny_edges(const GrayImage& image, const CannyParams& params) {
  require_size(image, 3, 3, "Canny");
  if (!(params.sigma > 0.0) || params.low < 0.0 || params.high < params.low) {
    throw Error(ErrorKind::RangeError, "invalid Canny parameters");
  }
  const int w = image.width();
  const int h = image.height();
  const GrayImage smooth = gaussian_smooth(image, params.sigma);
  auto v = [&](int x, int y) { return static_cast<int>(smooth.clamped(x, y)); };
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x); };

  std::vector<double> mag(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  std::vector<std::uint8_t> sector(mag.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto g = sobel_at(v, x, y);
      mag[idx(x, y)] = std::sqrt(static_cast<double>(g.gx) * g.gx + static_cast<double>(g.gy) * g.gy);
      double angle = std::atan2(static_cast<double>(g.gy), static_cast<double>(g.gx)) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      // 0: horizontal, 1: down-right diagonal, 2: vertical, 3: down-left diagonal
      if (angle < 22.5 || angle >= 157.5) {
        sector[idx(x, y)] = 0;
      } else if (angle < 67.5) {
        sector[idx(x, y)] = 1;
      } else if (angle < 112.5) {
        sector[idx(x, y)] = 2;
      } else {
        sector[idx(x, y)] = 3;
      }
    }
  }

  static constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  auto mag_or_zero = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag[idx(x, y)]; };

  // 0 = none, 1 = weak, 2 = strong
  std::vector<std::uint8_t> cls(mag.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = mag[idx(x, y)];
      if (!(m > params.low)) continue;
      const auto* d = kStep[sector[idx(x, y)]];
      // Strict on the trailing side, non-strict on the leading side, so a
      // plateau of two equal maxima keeps exactly one pixel.
      if (!(m > mag_or_zero(x - d[0], y - d[1]) && m >= mag_or_zero(x + d[0], y + d[1]))) continue;
      if (m > params.high) {
        cls[idx(x, y)] = 2;
        stack.emplace_back(x, y);
      } else {
        cls[idx(x, y)] = 1;
      }
    }
  }

  std::vector<std::uint8_t> edges(mag.size(), 0);
  for (const auto& [x, y] : stack) edges[idx(x, y)] = 1;
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t i = idx(nx, ny);
        if (cls[i] == 1 && !edges[i]) {
          edges[i] = 1;
          stack.emplace_back(nx, ny);
        }
      }
    }
  }
  return edges;
}

double edge_density(const GrayImage& crop, const CannyParams& params) {
  const auto edges = canny_edges(crop, params);
  const auto count = std::count(edges.begin(), edges.end(), std::uint8_t{1});
  return static_cast<double>(count) / static_cast<double>(edges.size());
}

double freq_ratio(const GrayImage& crop, double radius_fraction) {
  if (crop.empty()) throw Error(ErrorKind::EmptyRegion, "frequency ratio on an empty crop");
  if (!(radius_fraction >= 0.0)) throw Error(ErrorKind::RangeError, "radius fraction must be non-negative");
  double pixel_mass = 0.0;
  for (auto v : crop.bytes()) pixel_mass += v;
  if (pixel_mass == 0.0) return 0.0;

  const Spectrum spectrum = dft_2d(crop);
  const auto w = static_cast<std::size_t>(crop.width());
  const auto h = static_cast<std::size_t>(crop.height());
  const double radius = radius_fraction * static_cast<double>(std::min(w, h));
  // Magnitudes below this are rounding residue of the transform.
  const double noise_floor = 1e-12 * pixel_mass;

  double high = 0.0;
  double all = 0.0;
  for (std::size_t v = 0; v < h; ++v) {
    const double fy = static_cast<double>(centred_offset(v, h));
    for (std::size_t u = 0; u < w; ++u) {
      double m = std::abs(spectrum[v * w + u]);
      if (m < noise_floor) m = 0.0;
      const double fx = static_cast<double>(centred_offset(u, w));
      all += m;
      if (std::sqrt(fx * fx + fy * fy) > radius) high += m;
    }
  }
  return all > 0.0 ? std::clamp(high / all, 0.0, 1.0) : 0.0;
}

double boundary_artifact(const FrameMetrics& a, const FrameMetrics& b) {
  return std::abs(a.gradient_mean - b.gradient_mean) + std::abs(a.edge_density - b.edge_density) +
         std::abs(a.freq_ratio - b.freq_ratio);
}

FrameMetrics frame_metrics(const RgbImage& crop, std::size_t frame_index, const MetricParams& params) {
  const GrayImage gray = to_gray(crop);
  const LabStats lab = lab_stats(crop);
  FrameMetrics m;
  m.frame_index = frame_index;
  m.blur_sigma = laplacian_blur(gray);
  m.lab_mu = lab.mu;
  m.lab_sigma = lab.sigma;
  m.glcm_contrast = glcm_contrast(gray, params.glcm_levels);
  m.gradient_mean = gradient_mean(gray);
  m.edge_density = edge_density(gray, params.canny);
  m.freq_ratio = freq_ratio(gray, params.high_freq_radius);
  return m;
}

PairDeltas pair_deltas(const FrameMetrics& a, const FrameMetrics& b, std::size_t clip_index) {
  PairDeltas d;
  d.clip_index = clip_index;
  d.first = a.frame_index;
  d.second = b.frame_index;
  d.delta_blur = delta_blur(a.blur_sigma, b.blur_sigma);
  d.delta_color = delta_color({a.lab_mu, a.lab_sigma}, {b.lab_mu, b.lab_sigma});
  d.delta_texture = delta_texture(a.glcm_contrast, b.glcm_contrast);
  d.delta_gradient = std::abs(a.gradient_mean - b.gradient_mean);
  d.delta_edge_density = std::abs(a.edge_density - b.edge_density);
  d.delta_freq_ratio = std::abs(a.freq_ratio - b.freq_ratio);
  d.delta_boundary = d.delta_gradient + d.delta_edge_density + d.delta_freq_ratio;
  return d;
}

std::map<std::string, MetricSummary> summarize_pairs(const std::vector<PairDeltas>& pairs) {
  std::map<std::string, MetricSummary> summary;
  const std::pair<const char*, double PairDeltas::*> fields[] = {
      {"delta_blur", &PairDeltas::delta_blur},
      {"delta_color", &PairDeltas::delta_color},
      {"delta_texture", &PairDeltas::delta_texture},
      {"delta_boundary", &PairDeltas::delta_boundary},
  };
  for (const auto& [name, member] : fields) {
    MetricSummary s;
    for (const auto& p : pairs) {
      s.mean += p.*member;
      s.max = std::max(s.max, p.*member);
    }
    if (!pairs.empty()) s.mean /= static_cast<double>(pairs.size());
    summary.emplace(name, s);
  }
  return summary;
}

IntegrityMetrics compute_integrity(const FrameSequence& seq, const ClipSet& clips, const FaceTrack& track,
                                   const MetricParams& params) {
  std::set<std::size_t> wanted;
  for (const auto& clip : clips.clips) {
    for (std::size_t idx : clip) {
      if (idx >= seq.size()) {
        throw Error(ErrorKind::RangeError, "clip index " + std::to_string(idx) + " outside the sequence");
      }
      if (track.find(idx)) wanted.insert(idx);
    }
  }
  if (wanted.empty()) throw Error(ErrorKind::NoFaceDetected, "no sampled frame has a tracked face");

  const std::vector<std::size_t> frames(wanted.begin(), wanted.end());
  IntegrityMetrics out;
  out.per_frame = parallel_map(frames.size(), params.threads, [&](std::size_t i) {
    const std::size_t idx = frames[i];
    return frame_metrics(crop(seq.frames[idx], track.find(idx)->refined_box), idx, params);
  });

  auto metrics_for = [&](std::size_t idx) -> const FrameMetrics* {
    auto it = std::lower_bound(out.per_frame.begin(), out.per_frame.end(), idx,
                               [](const FrameMetrics& m, std::size_t i) { return m.frame_index < i; });
    return (it != out.per_frame.end() && it->frame_index == idx) ? &*it : nullptr;
  };
  for (std::size_t c = 0; c < clips.clips.size(); ++c) {
    const Clip& clip = clips.clips[c];
    for (std::size_t j = 0; j + 1 < clip.size(); ++j) {
      const FrameMetrics* a = metrics_for(clip[j]);
      const FrameMetrics* b = metrics_for(clip[j + 1]);
      if (a && b) out.per_pair.push_back(pair_deltas(*a, *b, c));
    }
  }
  out.summary = summarize_pairs(out.per_pair);
  return out;
}

}  // namespace fef
