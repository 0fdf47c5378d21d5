#include "fef/frame_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <random>
#include <sys/wait.h>

#include "fef/error.hpp"
#include "fef/parallel.hpp"

namespace fs = std::filesystem;

namespace fef {

namespace {

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext != ".png" && ext != ".bmp") return false;
  const std::string stem = p.stem().string();
  return !stem.empty() && std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); });
}

FrameSequence load_directory(const fs::path& dir) {
  std::vector<std::pair<unsigned long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) {
      files.emplace_back(std::stoull(entry.path().stem().string()), entry.path());
    }
  }
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no numbered frames in " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<RgbImage> frames;
  frames.reserve(files.size());
  for (const auto& [number, path] : files) frames.push_back(read_image(path));
  return make_sequence(std::move(frames), dir.filename().string());
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

FrameSequence decode_video(const fs::path& video, const std::string& command_template) {
  if (command_template.find("{input}") == std::string::npos ||
      command_template.find("{outdir}") == std::string::npos) {
    throw Error(ErrorKind::ConfigError, "decoder template needs {input} and {outdir} placeholders");
  }
  std::random_device rd;
  const fs::path outdir = fs::temp_directory_path() / ("fef-decode-" + std::to_string(rd()));
  fs::create_directories(outdir);

  std::string command = substitute(command_template, "{input}", shell_quote(video.string()));
  command = substitute(command, "{outdir}", shell_quote(outdir.string()));
  const int status = std::system(command.c_str());
  const bool ok = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;

  FrameSequence seq;
  try {
    if (!ok) throw Error(ErrorKind::DecodeFailure, "decoder command failed for " + video.string());
    seq = load_directory(outdir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(outdir, ec);
    throw;
  }
  std::error_code ec;
  fs::remove_all(outdir, ec);
  seq.source_id = video.filename().string();
  return seq;
}

}  // namespace

FrameSequence make_sequence(std::vector<RgbImage> frames, std::string source_id) {
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "frame sequence is empty");
  const int w = frames.front().width();
  const int h = frames.front().height();
  if (w == 0 || h == 0) throw Error(ErrorKind::EmptyInput, "frame 0 has zero size");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].width() != w || frames[i].height() != h) {
      throw Error(ErrorKind::DimensionMismatch,
                  "frame " + std::to_string(i) + " is " + std::to_string(frames[i].width()) + "x" +
                      std::to_string(frames[i].height()) + ", expected " + std::to_string(w) + "x" +
                      std::to_string(h));
    }
  }
  FrameSequence seq;
  seq.frames = std::move(frames);
  seq.source_id = std::move(source_id);
  return seq;
}

FrameSequence load_frames(const fs::path& source, const std::optional<std::string>& decode_command) {
  std::error_code ec;
  if (!fs::exists(source, ec)) throw Error(ErrorKind::IoError, "no such path: " + source.string());
  if (fs::is_directory(source, ec)) return load_directory(source);
  if (!decode_command) {
    throw Error(ErrorKind::ConfigError, source.string() + " is not a directory and no decoder is configured");
  }
  return decode_video(source, *decode_command);
}

ClipSet sample_clips(std::size_t frame_count, std::size_t n_clips, std::size_t frames_per_clip) {
  if (frame_count == 0) throw Error(ErrorKind::EmptyInput, "cannot sample an empty sequence");
  if (n_clips == 0 || frames_per_clip == 0) {
    throw Error(ErrorKind::RangeError, "n_clips and frames_per_clip must be at least 1");
  }
  ClipSet set;
  set.n_clips = n_clips;
  set.frames_per_clip = frames_per_clip;
  set.clips.reserve(n_clips);
  for (std::size_t i = 0; i < n_clips; ++i) {
    const std::size_t start = i * frame_count / n_clips;
    const std::size_t stop = (i + 1) * frame_count / n_clips;
    const std::size_t length = stop - start;
    Clip clip(frames_per_clip);
    for (std::size_t j = 0; j < frames_per_clip; ++j) clip[j] = start + j * length / frames_per_clip;
    set.clips.push_back(std::move(clip));
  }
  return set;
}

ClipSet sample_clips(const FrameSequence& seq, std::size_t n_clips, std::size_t frames_per_clip) {
  return sample_clips(seq.size(), n_clips, frames_per_clip);
}

FrameGrid compose_grid(const FrameSequence& seq, const Clip& clip, CellSize cell_size, std::size_t clip_index) {
  if (clip.size() != kGridCells) {
    throw Error(ErrorKind::ArityError, "a grid needs exactly 9 frames, got " + std::to_string(clip.size()));
  }
  if (cell_size.width <= 0 || cell_size.height <= 0) {
    throw Error(ErrorKind::RangeError, "cell size must be positive");
  }
  FrameGrid grid;
  grid.clip_index = clip_index;
  grid.cell_map = clip;
  grid.image = RgbImage(cell_size.width * 3, cell_size.height * 3);
  for (std::size_t cell = 0; cell < kGridCells; ++cell) {
    const std::size_t index = clip[cell];
    if (index >= seq.size()) {
      throw Error(ErrorKind::RangeError, "frame index " + std::to_string(index) + " out of range");
    }
    const RgbImage resized = resize_bilinear(seq.frames[index], cell_size.width, cell_size.height);
    const int ox = static_cast<int>(cell % kGridSide) * cell_size.width;
    const int oy = static_cast<int>(cell / kGridSide) * cell_size.height;
    for (int y = 0; y < cell_size.height; ++y) {
      for (int x = 0; x < cell_size.width; ++x) grid.image.set(ox + x, oy + y, resized.at(x, y));
    }
  }
  return grid;
}

std::vector<FrameGrid> compose_grids(const FrameSequence& seq, const ClipSet& clips, CellSize cell_size,
                                     unsigned threads) {
  return parallel_map(clips.clips.size(), threads,
                      [&](std::size_t i) { return compose_grid(seq, clips.clips[i], cell_size, i); });
}

}  // namespace fef
