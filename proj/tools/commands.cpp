#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>

#include "fef/canonical_json.hpp"
#include "fef/dataset.hpp"
#include "fef/error.hpp"
#include "fef/eval.hpp"
#include "fef/evidence.hpp"
#include "fef/fsutil.hpp"
#include "fef/heuristic.hpp"
#include "fef/parallel.hpp"

using nlohmann::json;

namespace fef::cli {

namespace {

const char* kTopKeys[] = {"frames",          "landmarks",      "out",           "input",       "profile",
                          "manifest",        "templates",      "decode_command", "n_clips",    "frames_per_clip",
                          "cell_width",      "cell_height",    "expand_factor", "threads",     "threshold",
                          "metrics",         "endpoint",       "samples",       "stage2_evidence",
                          "diff_threshold",  "region_padding"};
const char* kMetricKeys[] = {"glcm_levels", "canny_sigma", "canny_low", "canny_high", "high_freq_radius"};
const char* kEndpointKeys[] = {"base_url",    "model",       "supports_images", "timeout_seconds",
                               "max_inflight", "temperature", "retries"};

template <std::size_t N>
void reject_unknown(const json& obj, const char* (&known)[N], const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::ConfigError, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known)) {
      throw Error(ErrorKind::ConfigError, "unknown config key \"" + key + "\" in " + where);
    }
  }
}

template <class T>
void read_key(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void read_path(const json& obj, const char* key, const fs::path& base, std::optional<fs::path>& dst) {
  if (!obj.contains(key)) return;
  fs::path p = obj.at(key).get<std::string>();
  dst = p.is_relative() && !base.empty() ? base / p : p;
}

const fs::path& require(const std::optional<fs::path>& p, const char* flag) {
  if (!p) throw Error(ErrorKind::ConfigError, std::string("missing required ") + flag);
  return *p;
}

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(ErrorKind::IoError, std::string(what) + " not found: " + p.string());
}

std::string grid_file_name(std::size_t clip_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%02zu.png", clip_index);
  return buf;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void emit(const std::optional<fs::path>& out, const std::string& text, std::ostream& log) {
  if (out) {
    write_file_atomic(*out, text);
    log << "wrote " << out->string() << "\n";
  } else {
    log << text;
  }
}

std::vector<FrameGrid> load_grids(const fs::path& dir) {
  const fs::path index = dir / "grids.json";
  std::vector<FrameGrid> grids;
  if (!fs::exists(index)) return grids;
  try {
    const json doc = json::parse(read_text_file(index));
    for (const auto& g : doc.at("grids")) {
      FrameGrid grid;
      grid.clip_index = g.at("clip_index").get<std::size_t>();
      grid.cell_map = g.at("cell_map").get<std::vector<std::size_t>>();
      grid.image = read_image(dir / g.at("file").get<std::string>());
      grids.push_back(std::move(grid));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, "malformed " + index.string() + ": " + e.what());
  }
  return grids;
}

json heuristic_verdict(const FacialEvidence& evidence, const RunConfig& config) {
  const ThresholdProfile profile = config.profile ? load_profile(*config.profile) : ThresholdProfile::defaults();
  const AnomalyBreakdown b = anomaly_breakdown(evidence.integrity, profile);
  const Label label = classify(b.score, config.threshold);

  json fractions = json::object();
  std::string think = "Share of " + std::to_string(b.pairs) + " consecutive frame pairs above threshold:";
  for (std::size_t i = 0; i < 4; ++i) {
    fractions[kDeltaMetricNames[i]] = b.exceed_fraction[i];
    think += std::string(i ? ", " : " ") + kDeltaMetricNames[i] + " " + fixed3(b.exceed_fraction[i]);
  }
  think += ". Weighted anomaly score " + fixed3(b.score) + (label == Label::Fake ? " >= " : " < ") +
           "decision threshold " + fixed3(config.threshold) + ".";
  return {{"mode", "heuristic"},
          {"label", std::string(to_string(label))},
          {"score", b.score},
          {"threshold", config.threshold},
          {"pairs", b.pairs},
          {"exceed_fraction", std::move(fractions)},
          {"think", think},
          {"answer", std::string(to_string(label)) + " (score " + fixed3(b.score) + ")"}};
}

json endpoint_verdict(const FacialEvidence& evidence, const std::vector<FrameGrid>& grids, const RunConfig& config) {
  HttpEndpoint endpoint(config.endpoint);
  ReasoningOptions options;
  options.sample_count = config.samples;
  options.verdict.threshold = config.threshold;
  options.verdict.include_evidence = config.stage2_evidence;
  const ReasoningResult r = run_reasoning(grids, evidence, ThoughtPrompt::defaults(), QuestionPrompt::defaults(),
                                          config.endpoint, endpoint, options);
  json doc = to_json(r.final_verdict);
  doc["mode"] = "endpoint";
  doc["model"] = config.endpoint.model_name;
  json samples = json::array();
  for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
    samples.push_back({{"label", std::string(to_string(r.verdicts[i].label))},
                       {"rationale", r.rationales[i].text},
                       {"cited_evidence_keys", r.rationales[i].cited_evidence_keys}});
  }
  doc["samples"] = std::move(samples);
  return doc;
}

struct ManifestEntry {
  std::string video_ref;
  ForgeryType type = ForgeryType::Real;
  fs::path frames;
  fs::path landmarks;
  std::optional<fs::path> source_frames;
};

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  require_exists(path, "manifest");
  std::vector<ManifestEntry> entries;
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? base / p : fs::path(p); };
  try {
    const json doc = json::parse(read_text_file(path));
    const json& videos = doc.is_array() ? doc : doc.at("videos");
    for (const auto& v : videos) {
      ManifestEntry e;
      e.type = parse_forgery_type(v.at("forgery_type").get<std::string>());
      e.frames = resolve(v.at("frames").get<std::string>());
      e.landmarks = resolve(v.at("landmarks").get<std::string>());
      e.video_ref = v.contains("video_ref") ? v.at("video_ref").get<std::string>() : e.frames.filename().string();
      if (v.contains("source_frames")) e.source_frames = resolve(v.at("source_frames").get<std::string>());
      if (e.type != ForgeryType::Real && !e.source_frames) {
        throw Error(ErrorKind::SchemaError, "manifest entry " + e.video_ref + " needs source_frames");
      }
      entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, "malformed manifest " + path.string() + ": " + e.what());
  }
  if (entries.empty()) throw Error(ErrorKind::EmptyInput, "manifest lists no videos");
  return entries;
}

// Routes annotation through the endpoint instead of the deterministic
// template when one is configured.
std::string endpoint_rationale(const StructuredLabel& label, const std::string& question, InferenceEndpoint& endpoint,
                               const EndpointConfig& config) {
  ChatRequest req;
  req.model = config.model_name;
  req.temperature = config.temperature;
  req.messages.push_back({"system",
                          "You annotate deepfake training data. Given a question and the ground-truth structured "
                          "label, write the reasoning an analyst would give inside <think></think>.",
                          {}});
  req.messages.push_back({"user",
                          question + "\n\nStructured label: forgery type " +
                              std::string(to_string(label.forgery_type)) + "; forgery degree by region: " +
                              format_region_scores(label.region_scores) + ".",
                          {}});
  return generate_rationale(req, endpoint, {"eyes", "face", "mouth", "nose"}).text;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
  if (n_clips < 1) fail("n_clips must be at least 1");
  if (frames_per_clip < 1) fail("frames_per_clip must be at least 1");
  if (cell_size.width < 1 || cell_size.height < 1) fail("cell size must be positive");
  if (!(expand_factor >= 0.0)) fail("expand_factor must be non-negative");
  if (threads < 1) fail("threads must be at least 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail("threshold must lie in [0, 1]");
  if (metrics.glcm_levels < 2 || metrics.glcm_levels > 256) fail("glcm_levels must lie in [2, 256]");
  if (!(metrics.canny.low >= 0.0 && metrics.canny.low <= metrics.canny.high)) fail("need 0 <= canny_low <= canny_high");
  if (!(metrics.canny.sigma > 0.0)) fail("canny_sigma must be positive");
  if (!(metrics.high_freq_radius > 0.0 && metrics.high_freq_radius <= 1.0)) fail("high_freq_radius must lie in (0, 1]");
  if (samples < 1) fail("samples must be at least 1");
  if (!(diff_threshold >= 0.0)) fail("diff_threshold must be non-negative");
  if (!(region_padding >= 0.0)) fail("region_padding must be non-negative");
  if (has_endpoint()) {
    endpoint.validate();
    if (endpoint.model_name.empty()) fail("an endpoint needs a model name (--model)");
  }
}

RunConfig config_from_json(const json& doc, const fs::path& base) {
  reject_unknown(doc, kTopKeys, "config");
  RunConfig c;
  try {
    read_path(doc, "frames", base, c.frames);
    read_path(doc, "landmarks", base, c.landmarks);
    read_path(doc, "out", base, c.out);
    read_path(doc, "input", base, c.input);
    read_path(doc, "profile", base, c.profile);
    read_path(doc, "manifest", base, c.manifest);
    read_path(doc, "templates", base, c.templates);
    if (doc.contains("decode_command")) c.decode_command = doc.at("decode_command").get<std::string>();
    read_key(doc, "n_clips", c.n_clips);
    read_key(doc, "frames_per_clip", c.frames_per_clip);
    read_key(doc, "cell_width", c.cell_size.width);
    read_key(doc, "cell_height", c.cell_size.height);
    read_key(doc, "expand_factor", c.expand_factor);
    read_key(doc, "threads", c.threads);
    read_key(doc, "threshold", c.threshold);
    read_key(doc, "samples", c.samples);
    read_key(doc, "stage2_evidence", c.stage2_evidence);
    read_key(doc, "diff_threshold", c.diff_threshold);
    read_key(doc, "region_padding", c.region_padding);
    if (doc.contains("metrics")) {
      const json& m = doc.at("metrics");
      reject_unknown(m, kMetricKeys, "metrics");
      read_key(m, "glcm_levels", c.metrics.glcm_levels);
      read_key(m, "canny_sigma", c.metrics.canny.sigma);
      read_key(m, "canny_low", c.metrics.canny.low);
      read_key(m, "canny_high", c.metrics.canny.high);
      read_key(m, "high_freq_radius", c.metrics.high_freq_radius);
    }
    if (doc.contains("endpoint")) {
      const json& e = doc.at("endpoint");
      reject_unknown(e, kEndpointKeys, "endpoint");
      read_key(e, "base_url", c.endpoint.base_url);
      read_key(e, "model", c.endpoint.model_name);
      read_key(e, "supports_images", c.endpoint.supports_images);
      read_key(e, "timeout_seconds", c.endpoint.timeout_seconds);
      read_key(e, "max_inflight", c.endpoint.max_inflight);
      read_key(e, "temperature", c.endpoint.temperature);
      read_key(e, "retries", c.endpoint.retries);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  require_exists(path, "config file");
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

ExtractOutput run_extract(const RunConfig& config) {
  const fs::path& frames = require(config.frames, "--frames");
  const fs::path& landmarks = require(config.landmarks, "--landmarks");
  require_exists(frames, "frames");
  require_exists(landmarks, "landmark file");

  const FrameSequence seq = load_frames(frames, config.decode_command);
  const FaceTrack track =
      build_face_track(ingest_landmarks(landmarks), {seq.height(), seq.width()}, config.expand_factor, seq.size());
  const ClipSet clips = sample_clips(seq, config.n_clips, config.frames_per_clip);

  ExtractOutput out;
  out.grids = compose_grids(seq, clips, config.cell_size, config.threads);
  MetricParams params = config.metrics;
  params.threads = config.threads;
  SerializedEvidence s = serialize_evidence(track, compute_integrity(seq, clips, track, params));
  out.evidence = std::move(s.evidence);
  out.evidence_bytes = std::move(s.bytes);
  return out;
}

void cmd_extract(const RunConfig& config, std::ostream& log) {
  config.validate();
  const fs::path& out_dir = require(config.out, "--out");
  const ExtractOutput x = run_extract(config);

  json index = json::array();
  for (const auto& g : x.grids) {
    const std::string name = "grids/" + grid_file_name(g.clip_index);
    write_file_atomic(out_dir / name, encode_png(g.image));
    index.push_back({{"clip_index", g.clip_index}, {"file", name}, {"cell_map", g.cell_map}});
  }
  write_file_atomic(out_dir / "grids.json",
                    canonical_dump({{"n_clips", config.n_clips},
                                    {"frames_per_clip", config.frames_per_clip},
                                    {"grids", std::move(index)}}) +
                        "\n");
  write_file_atomic(out_dir / "evidence.json", x.evidence_bytes);
  log << "wrote " << (out_dir / "evidence.json").string() << " and " << x.grids.size() << " grid images\n";
}

void cmd_detect(const RunConfig& config, std::ostream& log) {
  config.validate();
  FacialEvidence evidence;
  std::vector<FrameGrid> grids;
  if (config.input) {
    require_exists(*config.input, "evidence");
    const bool dir = fs::is_directory(*config.input);
    const fs::path file = dir ? *config.input / "evidence.json" : *config.input;
    require_exists(file, "evidence");
    evidence = parse_evidence(read_text_file(file));
    if (config.has_endpoint()) grids = load_grids(dir ? *config.input : file.parent_path());
  } else if (config.frames && config.landmarks) {
    ExtractOutput x = run_extract(config);
    evidence = std::move(x.evidence);
    grids = std::move(x.grids);
  } else {
    throw Error(ErrorKind::ConfigError, "detect needs --input, or --frames together with --landmarks");
  }

  const json verdict = config.has_endpoint() ? endpoint_verdict(evidence, grids, config)
                                             : heuristic_verdict(evidence, config);
  emit(config.out, canonical_dump(verdict) + "\n", log);
}

void cmd_build_dataset(const RunConfig& config, std::ostream& log) {
  config.validate();
  const fs::path& out = require(config.out, "--out");
  const std::vector<ManifestEntry> entries = load_manifest(require(config.manifest, "--manifest"));
  const PromptTemplates templates =
      config.templates ? PromptTemplates::load(*config.templates) : PromptTemplates::defaults();

  std::optional<HttpEndpoint> endpoint;
  unsigned workers = config.threads;
  if (config.has_endpoint()) {
    endpoint.emplace(config.endpoint);
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.endpoint.max_inflight));
  }

  const auto rows = parallel_map(entries.size(), workers, [&](std::size_t i) {
    const ManifestEntry& e = entries[i];
    require_exists(e.frames, "frames");
    require_exists(e.landmarks, "landmark file");
    const FrameSequence seq = load_frames(e.frames, config.decode_command);
    std::optional<FrameSequence> source;
    if (e.type != ForgeryType::Real) {
      require_exists(*e.source_frames, "source frames");
      source = load_frames(*e.source_frames, config.decode_command);
    }
    const FaceTrack track =
        build_face_track(ingest_landmarks(e.landmarks), {seq.height(), seq.width()}, config.expand_factor, seq.size());
    const StructuredLabel label = build_structured_label(e.type, seq, source ? &*source : nullptr, track,
                                                         config.diff_threshold, config.region_padding);
    std::string rationale = templated_rationale(label);
    if (endpoint) {
      const std::string question = assemble_quadruple(e.video_ref, label, templates, rationale).question;
      rationale = endpoint_rationale(label, question, *endpoint, config.endpoint);
    }
    return assemble_quadruple(e.video_ref, label, templates, rationale);
  });

  std::string corpus;
  for (const auto& r : rows) corpus += to_jsonl_row(r) + "\n";
  if (parse_corpus(corpus) != rows) throw Error(ErrorKind::SerializationError, "corpus rows do not round-trip");
  write_file_atomic(out, corpus);

  fs::path stats_path = out;
  stats_path.replace_extension(".stats.json");
  const std::string stats = canonical_dump(to_json(corpus_stats(rows))) + "\n";
  write_file_atomic(stats_path, stats);
  log << "wrote " << rows.size() << " rows to " << out.string() << "\n" << stats;
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate();
  const fs::path& input = require(config.input, "--input");
  require_exists(input, "evaluation input");
  const std::vector<EvalRow> rows = parse_eval_rows(read_text_file(input));
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation rows in " + input.string());
  emit(config.out, canonical_dump(to_json(evaluate(rows, config.threshold))) + "\n", log);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable deepfake video analysis: evidence extraction, detection, corpus building, evaluation",
               "fef"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, frames, landmarks, out, input, profile, manifest, templates, decode, url, model;
    double threshold = 0.0;
    std::size_t n_clips = 0, frames_per_clip = 0, samples = 0;
    int cell = 0;
    unsigned threads = 0;
    bool stage2_evidence = false;
  } f;
  std::vector<CLI::Option*> opts;
  auto path_opt = [&](CLI::App* cmd, const char* name, std::string& dst, const char* help) {
    opts.push_back(cmd->add_option(name, dst, help));
  };
  auto common = [&](CLI::App* cmd) {
    path_opt(cmd, "--config", f.config, "JSON config file; flags override its values");
    path_opt(cmd, "--out", f.out, "Output path");
    opts.push_back(cmd->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber));
  };
  auto extraction = [&](CLI::App* cmd) {
    path_opt(cmd, "--frames", f.frames, "Directory of numbered frames, or a video with --decode-command");
    path_opt(cmd, "--landmarks", f.landmarks, "Landmark JSON file");
    path_opt(cmd, "--decode-command", f.decode, "External decoder template with {input} and {outdir}");
    opts.push_back(cmd->add_option("--n-clips", f.n_clips, "Number of clips"));
    opts.push_back(cmd->add_option("--frames-per-clip", f.frames_per_clip, "Frames per clip"));
    opts.push_back(cmd->add_option("--cell-size", f.cell, "Grid cell edge in pixels"));
  };
  auto endpoint = [&](CLI::App* cmd) {
    path_opt(cmd, "--endpoint-url", f.url, "Chat-completions base URL; enables model reasoning");
    path_opt(cmd, "--model", f.model, "Model name sent to the endpoint");
  };

  CLI::App* extract = app.add_subcommand("extract", "Frames and landmarks to canonical evidence and grid images");
  common(extract);
  extraction(extract);

  CLI::App* detect = app.add_subcommand("detect", "Verdict from evidence, via an endpoint or the heuristic");
  common(detect);
  extraction(detect);
  endpoint(detect);
  path_opt(detect, "--input", f.input, "evidence.json or an extract output directory");
  path_opt(detect, "--profile", f.profile, "Heuristic threshold profile JSON");
  opts.push_back(detect->add_option("--threshold", f.threshold, "Decision threshold on P(fake)"));
  opts.push_back(detect->add_option("--samples", f.samples, "Rationale samples for majority voting"));
  opts.push_back(detect->add_flag("--stage2-evidence", f.stage2_evidence, "Also send evidence to the answer stage"));

  CLI::App* build = app.add_subcommand("build-dataset", "Reasoning-quadruple corpus from a manifest");
  common(build);
  endpoint(build);
  path_opt(build, "--manifest", f.manifest, "Manifest JSON listing videos");
  path_opt(build, "--templates", f.templates, "Directory of <ForgeryType>.txt prompt templates");
  path_opt(build, "--decode-command", f.decode, "External decoder template with {input} and {outdir}");

  CLI::App* eval = app.add_subcommand("evaluate", "Detection and rationale metrics from a JSONL file");
  common(eval);
  path_opt(eval, "--input", f.input, "Evaluation rows (JSONL)");
  opts.push_back(eval->add_option("--threshold", f.threshold, "Decision threshold on P(fake)"));

  std::vector<const char*> argv{"fef"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fef: " << e.what() << "\n";
    return kExitInput;
  }

  auto given = [&](const char* name) {
    for (CLI::Option* o : opts) {
      if (o->count() > 0 && o->check_name(name)) return true;
    }
    return false;
  };

  try {
    RunConfig c = given("--config") ? load_config(f.config) : RunConfig{};
    if (given("--frames")) c.frames = f.frames;
    if (given("--landmarks")) c.landmarks = f.landmarks;
    if (given("--out")) c.out = f.out;
    if (given("--input")) c.input = f.input;
    if (given("--profile")) c.profile = f.profile;
    if (given("--manifest")) c.manifest = f.manifest;
    if (given("--templates")) c.templates = f.templates;
    if (given("--decode-command")) c.decode_command = f.decode;
    if (given("--endpoint-url")) c.endpoint.base_url = f.url;
    if (given("--model")) c.endpoint.model_name = f.model;
    if (given("--threshold")) c.threshold = f.threshold;
    if (given("--n-clips")) c.n_clips = f.n_clips;
    if (given("--frames-per-clip")) c.frames_per_clip = f.frames_per_clip;
    if (given("--cell-size")) c.cell_size = {f.cell, f.cell};
    if (given("--threads")) c.threads = f.threads;
    if (given("--samples")) c.samples = f.samples;
    if (f.stage2_evidence) c.stage2_evidence = true;
    if (const char* token = std::getenv("FEF_AUTH_TOKEN"); token && *token) c.endpoint.auth_token = token;

    if (extract->parsed()) cmd_extract(c, out);
    if (detect->parsed()) cmd_detect(c, out);
    if (build->parsed()) cmd_build_dataset(c, out);
    if (eval->parsed()) cmd_evaluate(c, out);
    return kExitOk;
  } catch (const Error& e) {
    err << "fef: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::EndpointError:
      case ErrorKind::MissingTagError:
      case ErrorKind::LabelParseError: return kExitEndpoint;
      default: return kExitInput;
    }
  } catch (const std::exception& e) {
    err << "fef: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace fef::cli
