#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fef/face_track.hpp"
#include "fef/frame_ingest.hpp"
#include "fef/image.hpp"

namespace fef {

struct CannyParams {
  double sigma = 1.0;  // 5x5 Gaussian pre-smoothing
  double low = 50.0;   // hysteresis thresholds on the 8-bit Sobel magnitude
  double high = 150.0;
};

struct MetricParams {
  int glcm_levels = 16;
  CannyParams canny;
  double high_freq_radius = 0.25;  // fraction of min(H, W)
  unsigned threads = 1;
};

struct FrameMetrics {
  std::size_t frame_index = 0;
  double blur_sigma = 0.0;
  double lab_mu = 0.0;
  double lab_sigma = 0.0;
  double glcm_contrast = 0.0;
  double gradient_mean = 0.0;
  double edge_density = 0.0;
  double freq_ratio = 0.0;

  friend bool operator==(const FrameMetrics&, const FrameMetrics&) = default;
};

struct PairDeltas {
  std::size_t clip_index = 0;
  std::size_t first = 0;   // frame index t
  std::size_t second = 0;  // frame index t+1 within the clip
  double delta_blur = 0.0;
  double delta_color = 0.0;
  double delta_texture = 0.0;
  double delta_gradient = 0.0;
  double delta_edge_density = 0.0;
  double delta_freq_ratio = 0.0;
  double delta_boundary = 0.0;

  friend bool operator==(const PairDeltas&, const PairDeltas&) = default;
};

struct MetricSummary {
  double mean = 0.0;
  double max = 0.0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

inline constexpr const char* kDeltaMetricNames[] = {"delta_blur", "delta_color", "delta_texture",
                                                    "delta_boundary"};

struct IntegrityMetrics {
  std::vector<FrameMetrics> per_frame;  // sorted by frame_index
  std::vector<PairDeltas> per_pair;     // clip order, then position in clip
  std::map<std::string, MetricSummary> summary;

  friend bool operator==(const IntegrityMetrics&, const IntegrityMetrics&) = default;
};

struct LabStats {
  double mu = 0.0;
  double sigma = 0.0;
};

// Mean of the squared 4-neighbour Laplacian response (replicated border).
double laplacian_blur(const GrayImage& crop);
double delta_blur(double a, double b);

// CIE L* of an sRGB colour under D65.
double lab_lightness(Rgb c);
// Mean and population standard deviation of L* over the crop.
LabStats lab_stats(const RgbImage& crop);
double delta_color(LabStats a, LabStats b);

// Symmetric, normalised horizontal (dx = 1) co-occurrence contrast.
double glcm_contrast(const GrayImage& crop, int levels = 16);
double delta_texture(double a, double b);

// Mean 3x3 Sobel gradient magnitude (replicated border).
double gradient_mean(const GrayImage& crop);

// Binary Canny edge map, row-major, one byte per pixel (0 or 1).
std::vector<std::uint8_t> canny_edges(const GrayImage& image, const CannyParams& params = {});
double edge_density(const GrayImage& crop, const CannyParams& params = {});

// Share of spectral magnitude outside radius fraction * min(H, W) of the
// centred DC bin.
double freq_ratio(const GrayImage& crop, double radius_fraction = 0.25);

double boundary_artifact(const FrameMetrics& a, const FrameMetrics& b);

FrameMetrics frame_metrics(const RgbImage& crop, std::size_t frame_index, const MetricParams& params = {});
PairDeltas pair_deltas(const FrameMetrics& a, const FrameMetrics& b, std::size_t clip_index);

IntegrityMetrics compute_integrity(const FrameSequence& seq, const ClipSet& clips, const FaceTrack& track,
                                   const MetricParams& params = {});

// Recomputes means and maxima over per_pair.
std::map<std::string, MetricSummary> summarize_pairs(const std::vector<PairDeltas>& pairs);

}  // namespace fef
