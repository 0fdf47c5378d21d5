#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "commands.hpp"
#include "fef/canonical_json.hpp"
#include "fef/dataset.hpp"
#include "fef/evidence.hpp"
#include "fef/fsutil.hpp"
#include "synth.hpp"

using namespace fef;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result fef_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Writes frames/ and landmarks.json for a synthetic video under dir/name.
fs::path stage_video(const synth::Video& v, const fs::path& dir, const std::string& name) {
  const fs::path root = dir / name;
  synth::write_frames(v.seq, root / "frames");
  std::ofstream(root / "landmarks.json") << synth::landmarks_json(v.landmarks);
  return root;
}

synth::Video still_video() {
  synth::Video v = synth::real_video(9, {64, 64, 72});
  for (auto& f : v.seq.frames) f = v.seq.frames[0];
  for (auto& lf : v.landmarks) lf.faces = v.landmarks[0].faces;
  return v;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

class LocalServer {
 public:
  explicit LocalServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void reply(httplib::Response& res, const std::string& content) {
  res.set_content(json{{"choices", json::array({{{"message", {{"content", content}}}}})}}.dump(), "application/json");
}

}  // namespace

TEST(CliExtract, EvidenceAndEightGrids) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::real_video(1, {64, 64, 72}), tmp.path(), "v");
  const Result r = fef_run({"extract", "--frames", (v / "frames").string(), "--landmarks",
                            (v / "landmarks.json").string(), "--out", (tmp.path() / "x").string(), "--cell-size", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  const FacialEvidence e = parse_evidence(slurp(tmp.path() / "x" / "evidence.json"));
  EXPECT_EQ(e.integrity.per_pair.size(), 64u);
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%02d.png", i);
    const RgbImage g = read_image(tmp.path() / "x" / "grids" / name);
    EXPECT_EQ(g.width(), 96);
  }
  EXPECT_EQ(json::parse(slurp(tmp.path() / "x" / "grids.json")).at("grids").size(), 8u);
}

TEST(CliExtract, RerunIsByteIdentical) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::fake_video(2, {48, 48, 72}), tmp.path(), "v");
  std::vector<std::string> outputs;
  for (const char* threads : {"1", "4", "1"}) {
    const fs::path out = tmp.path() / ("out" + std::to_string(outputs.size()));
    ASSERT_EQ(fef_run({"extract", "--frames", (v / "frames").string(), "--landmarks", (v / "landmarks.json").string(),
                       "--out", out.string(), "--threads", threads, "--cell-size", "16"})
                  .code,
              0);
    std::string all;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (entry.is_regular_file()) all += fs::relative(entry.path(), out).string() + "\n" + slurp(entry.path());
    }
    outputs.push_back(all);
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
}

TEST(CliExtract, MissingLandmarksNamesPath) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::real_video(3, {32, 32, 9}), tmp.path(), "v");
  const std::string missing = (tmp.path() / "nope.json").string();
  const Result r = fef_run({"extract", "--frames", (v / "frames").string(), "--landmarks", missing, "--out",
                            (tmp.path() / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(CliExtract, ConfigFileAndFlagOverride) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::real_video(4, {32, 32, 40}), tmp.path(), "v");
  std::ofstream(tmp.path() / "cfg.json") << json{{"frames", "v/frames"},
                                                 {"landmarks", "v/landmarks.json"},
                                                 {"out", "x"},
                                                 {"n_clips", 4},
                                                 {"cell_width", 8},
                                                 {"cell_height", 8}}
                                                .dump();
  ASSERT_EQ(fef_run({"extract", "--config", (tmp.path() / "cfg.json").string()}).code, 0);
  EXPECT_EQ(json::parse(slurp(tmp.path() / "x" / "grids.json")).at("grids").size(), 4u);
  ASSERT_EQ(fef_run({"extract", "--config", (tmp.path() / "cfg.json").string(), "--n-clips", "2"}).code, 0);
  EXPECT_EQ(json::parse(slurp(tmp.path() / "x" / "grids.json")).at("grids").size(), 2u);

  std::ofstream(tmp.path() / "bad.json") << R"({"n_clip": 3})";
  const Result bad = fef_run({"extract", "--config", (tmp.path() / "bad.json").string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("n_clip"), std::string::npos);
  EXPECT_EQ(fef_run({"extract", "--bogus-flag"}).code, 2);
}

TEST(CliDetect, HeuristicOnStillVideoIsReal) {
  synth::TempDir tmp;
  const fs::path v = stage_video(still_video(), tmp.path(), "v");
  ASSERT_EQ(fef_run({"extract", "--frames", (v / "frames").string(), "--landmarks", (v / "landmarks.json").string(),
                     "--out", (tmp.path() / "x").string(), "--cell-size", "16"})
                .code,
            0);
  const Result r = fef_run({"detect", "--input", (tmp.path() / "x").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json verdict = json::parse(r.out);
  EXPECT_EQ(verdict.at("label"), "real");
  EXPECT_EQ(verdict.at("score"), 0.0);
  EXPECT_TRUE(verdict.contains("think"));
  EXPECT_TRUE(verdict.contains("answer"));
}

TEST(CliDetect, HeuristicOneShotOnFakeWritesFile) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::fake_video(300), tmp.path(), "v");
  const fs::path out = tmp.path() / "verdict.json";
  const Result r = fef_run({"detect", "--frames", (v / "frames").string(), "--landmarks",
                            (v / "landmarks.json").string(), "--out", out.string(), "--cell-size", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(out)).at("label"), "fake");
}

TEST(CliDetect, MockEndpointLabelAndAuth) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::real_video(5, {48, 48, 72}), tmp.path(), "v");
  ASSERT_EQ(fef_run({"extract", "--frames", (v / "frames").string(), "--landmarks", (v / "landmarks.json").string(),
                     "--out", (tmp.path() / "x").string(), "--cell-size", "16"})
                .code,
            0);
  std::vector<json> bodies;
  std::string auth;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    bodies.push_back(json::parse(req.body));
    auth = req.get_header_value("Authorization");
    reply(res, bodies.size() == 1 ? "<think>delta_color is flat</think>" : "<answer>Real (confidence 0.31)</answer>");
  });
  ::setenv("FEF_AUTH_TOKEN", "tok", 1);
  const Result r = fef_run({"detect", "--input", (tmp.path() / "x").string(), "--endpoint-url", server.url(),
                            "--model", "mock-vlm"});
  ::unsetenv("FEF_AUTH_TOKEN");
  ASSERT_EQ(r.code, 0) << r.err;
  const json verdict = json::parse(r.out);
  EXPECT_EQ(verdict.at("label"), "real");
  EXPECT_EQ(verdict.at("confidence"), 0.31);
  EXPECT_EQ(verdict.at("think"), "delta_color is flat");
  EXPECT_EQ(auth, "Bearer tok");
  ASSERT_EQ(bodies.size(), 2u);
  EXPECT_EQ(bodies[0].at("model"), "mock-vlm");
  EXPECT_EQ(bodies[0].at("messages")[1].at("content").size(), 9u);  // text + 8 grids
  const std::string evidence = slurp(tmp.path() / "x" / "evidence.json");
  EXPECT_NE(bodies[0].at("messages")[1].at("content")[0].at("text").get<std::string>().find(evidence),
            std::string::npos);
}

TEST(CliDetect, UnreachableEndpointExits3) {
  synth::TempDir tmp;
  const fs::path v = stage_video(synth::real_video(6, {32, 32, 18}), tmp.path(), "v");
  const Result r = fef_run({"detect", "--frames", (v / "frames").string(), "--landmarks",
                            (v / "landmarks.json").string(), "--endpoint-url", "http://127.0.0.1:1", "--model", "m",
                            "--cell-size", "8"});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(CliDetect, MissingInputsExit2) {
  EXPECT_EQ(fef_run({"detect"}).code, 2);
  EXPECT_EQ(fef_run({"detect", "--input", "/definitely/not/here"}).code, 2);
  EXPECT_EQ(fef_run({"detect", "--input", "x", "--endpoint-url", "http://h"}).code, 2);  // no model
}

namespace {

fs::path stage_manifest(const fs::path& dir, bool with_fake_types) {
  json videos = json::array();
  for (std::uint32_t seed : {20u, 21u}) {
    const fs::path real = stage_video(synth::real_video(seed, {48, 48, 18}), dir, "real" + std::to_string(seed));
    videos.push_back({{"video_ref", "real/" + std::to_string(seed)},
                      {"forgery_type", "Real"},
                      {"frames", fs::relative(real / "frames", dir).string()},
                      {"landmarks", fs::relative(real / "landmarks.json", dir).string()}});
    if (!with_fake_types) continue;
    const fs::path fake = stage_video(synth::fake_video(seed, {48, 48, 18}), dir, "fake" + std::to_string(seed));
    videos.push_back({{"video_ref", "fake/" + std::to_string(seed)},
                      {"forgery_type", seed == 20 ? "NeuralTexture" : "FaceSwap"},
                      {"frames", (fake / "frames").string()},
                      {"landmarks", (fake / "landmarks.json").string()},
                      {"source_frames", (real / "frames").string()}});
  }
  std::ofstream(dir / "manifest.json") << json{{"videos", videos}}.dump(2);
  return dir / "manifest.json";
}

}  // namespace

TEST(CliBuildDataset, RowsAndStats) {
  synth::TempDir tmp;
  const fs::path manifest = stage_manifest(tmp.path(), true);
  const fs::path out = tmp.path() / "corpus.jsonl";
  const Result r = fef_run({"build-dataset", "--manifest", manifest.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_corpus(slurp(out));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].video_ref, "real/20");
  EXPECT_EQ(rows[0].answer, Label::Real);
  EXPECT_EQ(rows[1].answer, Label::Fake);
  EXPECT_NE(rows[1].question.find("edge artifacts"), std::string::npos);
  EXPECT_GT(rows[1].region_scores.at(FaceRegion::Face), 0.0);
  const json stats = json::parse(slurp(tmp.path() / "corpus.stats.json"));
  EXPECT_EQ(stats, json::parse(canonical_dump(to_json(corpus_stats(rows)))));
  EXPECT_EQ(stats.at("fake_count"), 2);

  const std::string first = slurp(out);
  ASSERT_EQ(fef_run({"build-dataset", "--manifest", manifest.string(), "--out", out.string(), "--threads", "3"}).code,
            0);
  EXPECT_EQ(slurp(out), first);
}

TEST(CliBuildDataset, MissingTemplateExit2) {
  synth::TempDir tmp;
  const fs::path manifest = stage_manifest(tmp.path(), false);
  fs::create_directories(tmp.path() / "templates");
  std::ofstream(tmp.path() / "templates" / "DeepFake.txt") << "Is this {forgery_type}?";
  const Result r = fef_run({"build-dataset", "--manifest", manifest.string(), "--templates",
                            (tmp.path() / "templates").string(), "--out", (tmp.path() / "c.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("template"), std::string::npos) << r.err;
}

TEST(CliEvaluate, PerfectPredictionsAndEmptyInput) {
  synth::TempDir tmp;
  std::ofstream(tmp.path() / "rows.jsonl")
      << R"({"truth":"fake","score":0.9,"candidate":"the mouth region shows visible blur","references":["the mouth region shows visible blur"]})"
      << "\n"
      << R"({"truth":"real","score":0.1,"candidate":"eyes appear natural across all frames","references":["eyes appear natural across all frames"]})"
      << "\n"
      << R"({"truth":"fake","score":0.7,"candidate":"edge artifacts run along the jaw line","references":["edge artifacts run along the jaw line"]})"
      << "\n";
  const Result r = fef_run({"evaluate", "--input", (tmp.path() / "rows.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report.at("detection").at("acc"), 1.0);
  EXPECT_EQ(report.at("detection").at("auc"), 1.0);
  EXPECT_EQ(report.at("detection").at("f1"), 1.0);
  EXPECT_NEAR(report.at("text").at("bleu4").get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(report.at("text").at("rouge_l").get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(report.at("text").at("cider").get<double>(), 10.0, 1e-6);

  std::ofstream(tmp.path() / "empty.jsonl") << "\n";
  EXPECT_EQ(fef_run({"evaluate", "--input", (tmp.path() / "empty.jsonl").string()}).code, 2);
}
