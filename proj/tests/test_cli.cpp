// Drives the crossview binary end to end as a subprocess: the full
// fixtures -> split -> train -> infer -> evaluate walkthrough, config
// resolution (file, environment variable, --set overrides), and the
// documented exit-code contract (0 ok, 1 usage/config, 2 runtime).

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "crossview/pipeline/pipeline.hpp"

using namespace crossview;
namespace fs = std::filesystem;
using nlohmann::json;

#ifndef CROSSVIEW_CLI_PATH
#error "CROSSVIEW_CLI_PATH must point at the crossview binary"
#endif

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& cli_root() {
  static const fs::path root = [] {
    const fs::path r = fs::temp_directory_path() / "xv_cli_tests";
    fs::remove_all(r);
    fs::create_directories(r);
    return r;
  }();
  return root;
}

// Runs `crossview <args>` through the shell, capturing exit code and both
// streams. `env_prefix` may set variables, e.g. "CROSSVIEW_CONFIG=/x.json".
CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path out_path = cli_root() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err_path = cli_root() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = env_prefix.empty() ? std::string() : env_prefix + " ";
  cmd += std::string(CROSSVIEW_CLI_PATH) + " " + args + " > " + out_path.string() + " 2> " +
         err_path.string();
  const int raw = std::system(cmd.c_str());
  CmdResult result;
  result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

// Shared corpus generated through the CLI itself: 1 video x 30 frames at
// 16x16 in clips of 3 -> 10 clips.
const fs::path& corpus() {
  static const fs::path dir = [] {
    const fs::path d = cli_root() / "corpus";
    const CmdResult r = run_cli("make-fixtures --out " + d.string() +
                                " --videos 1 --frames 30 --size 16 --clip-len 3 --seed 4");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("manifest.json"), std::string::npos);
    EXPECT_NE(r.err.find("config_hash="), std::string::npos);
    return d;
  }();
  return dir;
}

// Pipeline config sized for the 16x16 corpus, written once as JSON.
const fs::path& config_path() {
  static const fs::path path = [] {
    PipelineConfig cfg;
    cfg.translator.height = 16;
    cfg.translator.width = 16;
    cfg.translator.patch = 8;
    cfg.translator.dim = 16;
    cfg.translator.encoder_blocks = 1;
    cfg.translator.decoder_blocks = 1;
    cfg.translator.heads = 2;
    cfg.translator.mlp_ratio = 1;
    cfg.translator.queries = 42;
    cfg.translator.input_channels = 6;
    cfg.translator.mode = LayoutMode::pose;
    cfg.denoiser.latent_h = 16;
    cfg.denoiser.latent_w = 16;
    cfg.denoiser.latent_c = 3;
    cfg.denoiser.cond_c = 6;
    cfg.denoiser.patch = 4;
    cfg.denoiser.width = 16;
    cfg.denoiser.blocks = 1;
    cfg.denoiser.heads = 2;
    cfg.denoiser.mlp_ratio = 1;
    cfg.denoiser.temb_width = 4;
    cfg.codec = "identity";
    cfg.schedule_steps = 8;
    cfg.beta_min = 2e-3;
    cfg.beta_max = 0.3;
    cfg.batch_size = 2;
    cfg.checkpoint_every = 100;
    cfg.log_every = 1;
    const fs::path p = cli_root() / "pipeline.json";
    std::ofstream out(p);
    out << to_json(cfg).dump(2) << "\n";
    return p;
  }();
  return path;
}

// Trained run shared by the infer/evaluate tests.
const fs::path& trained_run() {
  static const fs::path dir = [] {
    const fs::path d = cli_root() / "run_a";
    const CmdResult r = run_cli("--config " + config_path().string() + " train " +
                                (corpus() / "manifest.json").string() + " --out " + d.string() +
                                " --steps 2 --seed 3");
    EXPECT_EQ(r.code, 0) << r.err;
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, HelpExitsCleanAndNoArgsIsUsageError) {
  const CmdResult help = run_cli("--help");
  EXPECT_EQ(help.code, 0);
  for (const char* sub : {"make-fixtures", "build-manifest", "split", "train", "infer",
                          "evaluate"}) {
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  }
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("no-such-command").code, 1);
}

TEST(Cli, SplitPartitionsTheCorpusAndRejectsUnknownStrategy) {
  const fs::path manifest = corpus() / "manifest.json";
  const CmdResult r = run_cli("split " + manifest.string() + " --strategy new-actions");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "train=8 test=2\n");
  EXPECT_TRUE(fs::exists(corpus() / "train.json"));
  EXPECT_TRUE(fs::exists(corpus() / "test.json"));
  // Split manifests load and stay disjoint by clip start.
  const DatasetManifest train = load_manifest(corpus() / "train.json");
  const DatasetManifest test = load_manifest(corpus() / "test.json");
  EXPECT_EQ(train.clips.size() + test.clips.size(), 10u);

  const CmdResult bad = run_cli("split " + manifest.string() + " --strategy bogus");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("error:"), std::string::npos);
}

TEST(Cli, TrainWritesCheckpointsAndRerunsAreByteIdentical) {
  const fs::path& run_a = trained_run();
  ASSERT_TRUE(fs::exists(run_a / "stage1.ckpt"));
  ASSERT_TRUE(fs::exists(run_a / "stage2.ckpt"));

  const fs::path run_b = cli_root() / "run_b";
  const CmdResult r = run_cli("--config " + config_path().string() + " train " +
                              (corpus() / "manifest.json").string() + " --out " +
                              run_b.string() + " --steps 2 --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const json summary = json::parse(r.out);
  EXPECT_EQ(summary.at("stage1_steps").get<int>(), 2);
  EXPECT_EQ(summary.at("stage2_steps").get<int>(), 2);
  EXPECT_TRUE(summary.contains("stage1_final_loss"));
  EXPECT_EQ(hash_file(run_a / "stage1.ckpt"), hash_file(run_b / "stage1.ckpt"));
  EXPECT_EQ(hash_file(run_a / "stage2.ckpt"), hash_file(run_b / "stage2.ckpt"));
  EXPECT_NE(r.err.find("step=1"), std::string::npos);
}

TEST(Cli, TrainResumeContinuesFromCheckpoint) {
  const fs::path run = cli_root() / "run_resume";
  const std::string base = "--config " + config_path().string() + " train " +
                           (corpus() / "manifest.json").string() + " --out " + run.string() +
                           " --seed 3 --stage layout";
  ASSERT_EQ(run_cli(base + " --steps 2").code, 0);
  const CmdResult r = run_cli(base + " --steps 4 --resume");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("stage1: resuming from step 2"), std::string::npos);
  EXPECT_EQ(json::parse(r.out).at("stage1_steps").get<int>(), 4);
  // Matches a straight 4-step run bit for bit.
  const fs::path straight = cli_root() / "run_straight";
  const std::string base2 = "--config " + config_path().string() + " train " +
                            (corpus() / "manifest.json").string() + " --out " +
                            straight.string() + " --seed 3 --stage layout";
  ASSERT_EQ(run_cli(base2 + " --steps 4").code, 0);
  EXPECT_EQ(hash_file(run / "stage1.ckpt"), hash_file(straight / "stage1.ckpt"));
}

TEST(Cli, InferWritesFramesAndRunMetadata) {
  const fs::path out = cli_root() / "infer_a";
  const std::string cmd = "--config " + config_path().string() + " infer " +
                          (corpus() / "manifest.json").string() + " --translator " +
                          (trained_run() / "stage1.ckpt").string() + " --denoiser " +
                          (trained_run() / "stage2.ckpt").string() + " --out " + out.string() +
                          " --video video_0 --clip 1 --seed 21";
  const CmdResult r = run_cli(cmd);
  ASSERT_EQ(r.code, 0) << r.err;
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.png", i);
    EXPECT_TRUE(fs::exists(out / "pred" / name)) << name;
    EXPECT_TRUE(fs::exists(out / "gt" / name)) << name;
  }
  const json meta = json::parse(slurp(out / "run.json"));
  EXPECT_EQ(meta.at("video_id").get<std::string>(), "video_0");
  EXPECT_EQ(meta.at("clip_index").get<int>(), 1);
  EXPECT_EQ(meta.at("frames").get<int>(), 3);
  EXPECT_EQ(meta.at("sampler").get<std::string>(), "deterministic");
  EXPECT_TRUE(meta.at("checkpoints").at("translator").contains("hash"));

  // Same command, new directory: byte-identical predictions.
  const fs::path out_b = cli_root() / "infer_b";
  const std::string cmd_b = "--config " + config_path().string() + " infer " +
                            (corpus() / "manifest.json").string() + " --translator " +
                            (trained_run() / "stage1.ckpt").string() + " --denoiser " +
                            (trained_run() / "stage2.ckpt").string() + " --out " +
                            out_b.string() + " --video video_0 --clip 1 --seed 21";
  ASSERT_EQ(run_cli(cmd_b).code, 0);
  EXPECT_EQ(hash_file(out / "pred" / "frame_000.png"),
            hash_file(out_b / "pred" / "frame_000.png"));

  const CmdResult missing = run_cli(
      "--config " + config_path().string() + " infer " + (corpus() / "manifest.json").string() +
      " --translator /nonexistent.ckpt --denoiser " + (trained_run() / "stage2.ckpt").string() +
      " --out " + (cli_root() / "infer_c").string());
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
}

TEST(Cli, EvaluateScoresIdentityPerfectlyAndChecksCounts) {
  const fs::path gt = cli_root() / "infer_a" / "gt";
  ASSERT_TRUE(fs::exists(gt)) << "infer test must run first in registration order";
  const fs::path report = cli_root() / "identity_report.json";
  const CmdResult r = run_cli("evaluate " + gt.string() + " " + gt.string() + " --report " +
                              report.string() + " --dataset synthetic --split demo " +
                              "--detector constant:0.9");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SSIM"), std::string::npos);
  const json doc = json::parse(slurp(report));
  EXPECT_EQ(doc.at("ssim").get<double>(), 1.0);
  EXPECT_EQ(doc.at("psnr").get<double>(), 100.0);
  EXPECT_NEAR(doc.at("fid").get<double>(), 0.0, 1e-6);
  EXPECT_EQ(doc.at("feasibility").get<double>(), 0.9);
  EXPECT_EQ(doc.at("dataset").get<std::string>(), "synthetic");
  EXPECT_EQ(doc.at("frames").get<int>(), 3);

  // Frame-count mismatch is a runtime failure, not a usage error.
  const fs::path short_dir = cli_root() / "short_pred";
  fs::create_directories(short_dir);
  fs::copy_file(gt / "frame_000.png", short_dir / "frame_000.png",
                fs::copy_options::overwrite_existing);
  const CmdResult mismatch = run_cli("evaluate " + short_dir.string() + " " + gt.string());
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.err.find("frame count mismatch"), std::string::npos);
}

TEST(Cli, BuildManifestIndexesADirectoryTree) {
  // Re-index the fixture corpus from its files alone; meta.json is absent so
  // ids fall back to the video directory name.
  const fs::path manifest = cli_root() / "rebuilt_manifest.json";
  const CmdResult r = run_cli("build-manifest " + corpus().string() + " --out " +
                              manifest.string() + " --clip-len 5 --dataset rebuilt");
  ASSERT_EQ(r.code, 0) << r.err;
  const DatasetManifest rebuilt = load_manifest(manifest);
  EXPECT_EQ(rebuilt.dataset_name, "rebuilt");
  EXPECT_EQ(rebuilt.clips.size(), 6u);  // 30 frames / clip-len 5
  EXPECT_EQ(rebuilt.clips[0].video_id, "video_0");
  EXPECT_EQ(rebuilt.clips[0].subject_id, "video_0");
  EXPECT_EQ(rebuilt.clips[0].frame_count(), 5);
  // Paths were stored relative to the manifest and resolve on load.
  EXPECT_TRUE(fs::exists(rebuilt.clips[0].exo_frames[0]));

  const CmdResult empty = run_cli("build-manifest " + (cli_root() / "nowhere").string());
  EXPECT_EQ(empty.code, 2);
}

TEST(Cli, ConfigComesFromEnvironmentAndSetOverridesWin) {
  // Config file supplies fixtures.size=24 through CROSSVIEW_CONFIG.
  const fs::path cfg = cli_root() / "fixtures_cfg.json";
  {
    std::ofstream out(cfg);
    out << R"({"fixtures": {"size": 24}})" << "\n";
  }
  const fs::path env_dir = cli_root() / "env_fixtures";
  const CmdResult r =
      run_cli("make-fixtures --out " + env_dir.string() + " --videos 1 --frames 3 --clip-len 3",
              "CROSSVIEW_CONFIG=" + cfg.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_png(env_dir / "video_0" / "exo_000.png").h, 24);

  // --set overrides the file, flags override both.
  const fs::path set_dir = cli_root() / "set_fixtures";
  const CmdResult r2 = run_cli("make-fixtures --out " + set_dir.string() +
                                   " --videos 1 --frames 3 --clip-len 3 --set fixtures.size=20",
                               "CROSSVIEW_CONFIG=" + cfg.string());
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(load_png(set_dir / "video_0" / "exo_000.png").h, 20);

  // Malformed config file and malformed --set are usage errors.
  const fs::path broken = cli_root() / "broken.json";
  {
    std::ofstream out(broken);
    out << "{not json";
  }
  EXPECT_EQ(run_cli("split x.json --strategy new-actions", "CROSSVIEW_CONFIG=" + broken.string())
                .code,
            1);
  EXPECT_EQ(run_cli("make-fixtures --out " + (cli_root() / "never").string() +
                    " --set novalue")
                .code,
            1);
}
