#pragma once

// Command implementations behind the `fef` binary. main() only parses
// arguments; everything else lives here so tests can drive it in-process.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fef/face_track.hpp"
#include "fef/frame_ingest.hpp"
#include "fef/integrity.hpp"
#include "fef/reasoning.hpp"

namespace fef::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEndpoint = 3;

struct RunConfig {
  std::optional<fs::path> frames;
  std::optional<fs::path> landmarks;
  std::optional<fs::path> out;
  std::optional<fs::path> input;
  std::optional<fs::path> profile;
  std::optional<fs::path> manifest;
  std::optional<fs::path> templates;
  std::optional<std::string> decode_command;

  std::size_t n_clips = 8;
  std::size_t frames_per_clip = 9;
  CellSize cell_size;
  double expand_factor = kDefaultExpandFactor;
  MetricParams metrics;
  unsigned threads = 1;
  double threshold = kDefaultDecisionThreshold;

  // Endpoint mode is on when base_url is non-empty.
  EndpointConfig endpoint;
  std::size_t samples = 1;
  bool stage2_evidence = false;

  double diff_threshold = 25.0;
  double region_padding = 0.10;

  bool has_endpoint() const { return !endpoint.base_url.empty(); }
  // Range checks shared by every command.
  void validate() const;
};

// Reads a JSON config. Relative paths resolve against base_dir; unknown
// keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir = {});
RunConfig load_config(const fs::path& path);

struct ExtractOutput {
  FacialEvidence evidence;
  std::string evidence_bytes;
  std::vector<FrameGrid> grids;
};

// Steps 1-3 in memory: frames, landmarks, clips, grids, integrity metrics.
ExtractOutput run_extract(const RunConfig& config);

// Writes <out>/evidence.json, <out>/grids/clip_NN.png and <out>/grids.json.
void cmd_extract(const RunConfig& config, std::ostream& log);
// Writes the verdict JSON to --out (stdout when absent).
void cmd_detect(const RunConfig& config, std::ostream& log);
void cmd_build_dataset(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);

// Full command line: `fef <command> [flags]`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fef::cli
