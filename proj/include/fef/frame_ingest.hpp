#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fef/image.hpp"

namespace fef {

struct FrameSequence {
  std::vector<RgbImage> frames;
  std::optional<double> frame_rate;
  std::string source_id;

  std::size_t size() const { return frames.size(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
};

using Clip = std::vector<std::size_t>;

struct ClipSet {
  std::vector<Clip> clips;
  std::size_t n_clips = 0;
  std::size_t frames_per_clip = 0;

  friend bool operator==(const ClipSet&, const ClipSet&) = default;
};

struct CellSize {
  int height = 224;
  int width = 224;
};

struct FrameGrid {
  RgbImage image;
  std::size_t clip_index = 0;
  std::vector<std::size_t> cell_map;  // 9 source frame indices, row-major
};

inline constexpr std::size_t kGridSide = 3;
inline constexpr std::size_t kGridCells = kGridSide * kGridSide;

// Loads a directory of numbered PNG/BMP frames, or a video file decoded by
// an external command. The template must contain `{input}` and `{outdir}`;
// the decoder is expected to write numbered PNG frames into outdir.
FrameSequence load_frames(const std::filesystem::path& source,
                          const std::optional<std::string>& decode_command = std::nullopt);

// Builds a sequence from in-memory frames, validating the shared-dimension
// invariant.
FrameSequence make_sequence(std::vector<RgbImage> frames, std::string source_id = {});

// Uniform deterministic sampling: the timeline is cut into n_clips
// contiguous segments and each segment is strided into frames_per_clip
// indices. Short segments repeat indices instead of failing.
ClipSet sample_clips(std::size_t frame_count, std::size_t n_clips = 8, std::size_t frames_per_clip = 9);
ClipSet sample_clips(const FrameSequence& seq, std::size_t n_clips = 8, std::size_t frames_per_clip = 9);

// Cell (r, c) holds clip frame 3r + c, each resized to cell_size.
FrameGrid compose_grid(const FrameSequence& seq, const Clip& clip, CellSize cell_size,
                       std::size_t clip_index = 0);

// One grid per clip, ordered by clip index regardless of thread count.
std::vector<FrameGrid> compose_grids(const FrameSequence& seq, const ClipSet& clips, CellSize cell_size,
                                     unsigned threads = 1);

}  // namespace fef
