#include "fef/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fef/error.hpp"
#include "fef/fsutil.hpp"

namespace fef {

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)) * 3) {
  if (width < 0 || height < 0) throw Error(ErrorKind::DimensionMismatch, "negative image size");
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
  if (width < 0 || height < 0) throw Error(ErrorKind::DimensionMismatch, "negative image size");
}

std::uint8_t GrayImage::clamped(int x, int y) const {
  return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
}

std::uint8_t luma(Rgb c) {
  const unsigned weighted = 299u * c.r + 587u * c.g + 114u * c.b;
  return static_cast<std::uint8_t>(weighted / 1000u);
}

GrayImage to_gray(const RgbImage& image) {
  GrayImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) out.set(x, y, luma(image.at(x, y)));
  }
  return out;
}

RgbImage crop(const RgbImage& image, const Box& box) {
  const Box clipped{std::max(box.x0, 0), std::max(box.y0, 0), std::min(box.x1, image.width()),
                    std::min(box.y1, image.height())};
  if (clipped.empty()) return {};
  RgbImage out(clipped.width(), clipped.height());
  for (int y = 0; y < clipped.height(); ++y) {
    for (int x = 0; x < clipped.width(); ++x) {
      out.set(x, y, image.at(clipped.x0 + x, clipped.y0 + y));
    }
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int i = 0; i < dst; ++i) {
    double pos = (i + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, src - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, pos - lo};
  }
  return taps;
}

std::uint8_t blend(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d, double fx, double fy) {
  const double top = a + (b - a) * fx;
  const double bottom = c + (d - c) * fx;
  const double v = top + (bottom - top) * fy;
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (image.empty()) throw Error(ErrorKind::EmptyInput, "cannot resize an empty image");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::RangeError, "resize target must be positive");
  const auto xs = bilinear_taps(image.width(), width);
  const auto ys = bilinear_taps(image.height(), height);
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      const Rgb a = image.at(tx.lo, ty.lo);
      const Rgb b = image.at(tx.hi, ty.lo);
      const Rgb c = image.at(tx.lo, ty.hi);
      const Rgb d = image.at(tx.hi, ty.hi);
      out.set(x, y, {blend(a.r, b.r, c.r, d.r, tx.frac, ty.frac),
                     blend(a.g, b.g, c.g, d.g, tx.frac, ty.frac),
                     blend(a.b, b.b, c.b, d.b, tx.frac, ty.frac)});
    }
  }
  return out;
}

RgbImage read_image(const std::filesystem::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw Error(ErrorKind::DecodeFailure, "cannot decode image " + path.string());
  }
  RgbImage out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) out.set(x, y, {row[x][2], row[x][1], row[x][0]});
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb c = image.at(x, y);
      row[x] = cv::Vec3b(c.b, c.g, c.r);
    }
  }
  std::vector<std::uint8_t> buffer;
  if (!cv::imencode(".png", bgr, buffer)) {
    throw Error(ErrorKind::IoError, "PNG encoding failed");
  }
  return buffer;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_file_atomic(path, encode_png(image));
}

}  // namespace fef
