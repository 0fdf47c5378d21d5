#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace oracle {

namespace {

int px(const fef::GrayImage& img, int x, int y) {
  x = std::min(std::max(x, 0), img.width() - 1);
  y = std::min(std::max(y, 0), img.height() - 1);
  return img.at(x, y);
}

double convolve3(const fef::GrayImage& img, const double k[3][3], int x, int y) {
  double acc = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) acc += k[j][i] * px(img, x + i - 1, y + j - 1);
  }
  return acc;
}

constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr double kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

}  // namespace

double laplacian_mean_square(const fef::GrayImage& img) {
  constexpr double k[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};
  double s = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double r = convolve3(img, k, x, y);
      s += r * r;
    }
  return s / (img.width() * img.height());
}

double sobel_mean_magnitude(const fef::GrayImage& img) {
  double s = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) s += std::hypot(convolve3(img, kSobelX, x, y), convolve3(img, kSobelY, x, y));
  return s / (img.width() * img.height());
}

double glcm_contrast(const fef::GrayImage& img, int levels) {
  std::vector<std::vector<double>> g(levels, std::vector<double>(levels, 0.0));
  const int bin = 256 / levels;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x + 1 < img.width(); ++x) {
      const int a = img.at(x, y) / bin;
      const int b = img.at(x + 1, y) / bin;
      g[a][b] += 1;
      g[b][a] += 1;
    }
  double total = 0.0;
  for (auto& row : g)
    for (double v : row) total += v;
  double c = 0.0;
  for (int n = 0; n < levels; ++n)
    for (int m = 0; m < levels; ++m) c += (n - m) * (n - m) * g[n][m] / total;
  return c;
}

int high_bin_count(int height, int width, double radius_fraction) {
  // After fftshift the DC term sits at (H/2, W/2).
  const double r = radius_fraction * std::min(height, width);
  int count = 0;
  for (int p = 0; p < height; ++p)
    for (int q = 0; q < width; ++q) {
      const double dy = p - height / 2;
      const double dx = q - width / 2;
      if (std::sqrt(dx * dx + dy * dy) > r) ++count;
    }
  return count;
}

double freq_ratio_naive(const fef::GrayImage& img, double radius_fraction) {
  const int h = img.height();
  const int w = img.width();
  double total_px = 0.0;
  for (auto v : img.bytes()) total_px += v;
  if (total_px == 0.0) return 0.0;
  const double r = radius_fraction * std::min(h, w);
  const double pi = std::acos(-1.0);
  double high = 0.0;
  double all = 0.0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      std::complex<double> f = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double phase = -2.0 * pi * (static_cast<double>(u) * x / w + static_cast<double>(v) * y / h);
          f += static_cast<double>(img.at(x, y)) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      double m = std::abs(f);
      if (m < 1e-9 * total_px) m = 0.0;
      // shifted position of bin u is (u + w/2) mod w
      const double dx = (u + w / 2) % w - w / 2;
      const double dy = (v + h / 2) % h - h / 2;
      all += m;
      if (std::sqrt(dx * dx + dy * dy) > r) high += m;
    }
  return all == 0.0 ? 0.0 : high / all;
}

double srgb_to_lstar(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  auto lin = [](double c) {
    c /= 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double R = lin(r), G = lin(g), B = lin(b);
  // sRGB -> XYZ (D65), second row gives Y; white Yn = 1.
  const double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  const double delta = 6.0 / 29.0;
  const double f = Y > delta * delta * delta ? std::cbrt(Y) : Y / (3 * delta * delta) + 4.0 / 29.0;
  return 116.0 * f - 16.0;
}

std::vector<std::uint8_t> canny(const fef::GrayImage& img, double sigma, double low, double high) {
  const int w = img.width();
  const int h = img.height();
  double k[5][5];
  double ksum = 0.0;
  for (int j = -2; j <= 2; ++j)
    for (int i = -2; i <= 2; ++i) {
      k[j + 2][i + 2] = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
      ksum += k[j + 2][i + 2];
    }
  fef::GrayImage smooth(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -2; j <= 2; ++j)
        for (int i = -2; i <= 2; ++i) acc += k[j + 2][i + 2] / ksum * px(img, x + i, y + j);
      smooth.set(x, y, static_cast<std::uint8_t>(std::clamp(std::floor(acc + 0.5), 0.0, 255.0)));
    }

  std::vector<double> mag(w * h), gxs(w * h), gys(w * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gxs[y * w + x] = convolve3(smooth, kSobelX, x, y);
      gys[y * w + x] = convolve3(smooth, kSobelY, x, y);
      mag[y * w + x] = std::hypot(gxs[y * w + x], gys[y * w + x]);
    }
  auto m_at = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag[y * w + x]; };

  const double t22 = std::tan(22.5 * std::acos(-1.0) / 180.0);
  const double t67 = std::tan(67.5 * std::acos(-1.0) / 180.0);
  std::vector<int> state(w * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = gxs[y * w + x], gy = gys[y * w + x], m = mag[y * w + x];
      if (m <= low) continue;
      int dx, dy;
      const double ax = std::abs(gx), ay = std::abs(gy);
      if (ay < t22 * ax) {
        dx = 1, dy = 0;
      } else if (ay >= t67 * ax) {
        dx = 0, dy = 1;
      } else if ((gx > 0) == (gy > 0)) {
        dx = 1, dy = 1;
      } else {
        dx = -1, dy = 1;
      }
      if (m > m_at(x - dx, y - dy) && m >= m_at(x + dx, y + dy)) state[y * w + x] = m > high ? 2 : 1;
    }
  for (bool changed = true; changed;) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (state[y * w + x] != 1) continue;
        for (int j = -1; j <= 1; ++j)
          for (int i = -1; i <= 1; ++i) {
            const int nx = x + i, ny = y + j;
            if (nx >= 0 && ny >= 0 && nx < w && ny < h && state[ny * w + nx] == 2 && state[y * w + x] == 1) {
              state[y * w + x] = 2;
              changed = true;
            }
          }
      }
  }
  std::vector<std::uint8_t> out(w * h);
  for (int i = 0; i < w * h; ++i) out[i] = state[i] == 2;
  return out;
}

double auc_pairs(const std::vector<fef::DetectionRecord>& records) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& f : records) {
    if (f.truth != fef::Label::Fake) continue;
    for (const auto& r : records) {
      if (r.truth != fef::Label::Real) continue;
      pairs += 1;
      if (f.score > r.score) wins += 1;
      else if (f.score == r.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace oracle
