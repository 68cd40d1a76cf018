#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "qe/pipeline/config.hpp"
#include "qe/weights.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const fs::path& work) {
  const fs::path out = work / "stdout.txt";
  const std::string cmd = std::string(QE_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + (work / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = qe::read_text_file(out);
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("end-to-end command line workflow and exit codes") {
  const fs::path work = fs::temp_directory_path() / "qe_cli_tests";
  fs::remove_all(work);
  fs::create_directories(work);

  std::ofstream(work / "synth.json") << R"({"sequences": 1, "frames": 6, "width": 24, "height": 24, "seed": 3})";
  std::ofstream(work / "degrade.json") << R"({"quality_cycle": [6, 22, 14, 22], "seed": 5})";
  REQUIRE(run("make-synthetic --out " + (work / "data").string() + " --config " + (work / "synth.json").string() +
                  " --degrade " + (work / "degrade.json").string(),
              work)
              .code == 0);
  CHECK(fs::exists(work / "data" / "compressed" / "seq0" / "manifest.json"));

  CHECK(run("degrade --in " + (work / "data" / "truth").string() + " --out " + (work / "redo").string() + " --config " +
                (work / "degrade.json").string(),
            work)
            .code == 0);
  CHECK(fs::exists(work / "redo" / "seq0" / "frame_0005.y"));

  const std::string manifest = (work / "data" / "compressed" / "seq0" / "manifest.json").string();
  const Run refs = run("propose-refs --manifest " + manifest + " --target 3 --radius 2 --track fixed-qp", work);
  REQUIRE(refs.code == 0);
  const auto j = nlohmann::json::parse(refs.out);
  CHECK(j["preceding"] == nlohmann::json::array({2, 2}));
  CHECK(j["following"] == nlohmann::json::array({4, 4}));

  std::ofstream(work / "train.json") << R"({"dataset": "data", "radius": 2, "iqe": {"blocks": 1, "width": 8},
      "iterations": 3, "batch_size": 1, "patch_size": 16, "base_lr": 0.001, "seed": 1})";
  REQUIRE(run("train --config " + (work / "train.json").string() + " --out " + (work / "m.qew").string() + " --log " +
                  (work / "loss.csv").string(),
              work)
              .code == 0);
  CHECK(fs::exists(work / "m.qew"));
  REQUIRE(run("train --config " + (work / "train.json").string() + " --out " + (work / "m2.qew").string(), work).code == 0);
  CHECK(qe::read_file_bytes(work / "m.qew") == qe::read_file_bytes(work / "m2.qew"));
  CHECK(run("train-mask --config " + (work / "train.json").string() + " --first " + (work / "m.qew").string() +
                " --second " + (work / "m2.qew").string() + " --out " + (work / "mask.qew").string(),
            work)
            .code == 0);

  REQUIRE(run("enhance --weights " + (work / "m.qew").string() + " --manifest " + manifest + " --out " +
                  (work / "enh" / "seq0").string() + " --self-ensemble --fuse-with " + (work / "m2.qew").string() +
                  " --mask " + (work / "mask.qew").string(),
              work)
              .code == 0);
  REQUIRE(run("evaluate --compressed " + (work / "data" / "compressed").string() + " --enhanced " +
                  (work / "enh").string() + " --truth " + (work / "data" / "truth").string() + " --report " +
                  (work / "report.json").string(),
              work)
              .code == 0);
  const auto report = nlohmann::json::parse(qe::read_text_file(work / "report.json"));
  CHECK(report["provenance"]["weights_hash"] == qe::content_hash(qe::read_file_bytes(work / "m.qew")));
  CHECK(run("plot --report " + (work / "report.json").string() + " --out " + (work / "plots").string(), work).code == 0);
  CHECK(fs::exists(work / "plots" / "seq0_psnr.svg"));

  std::ofstream(work / "a.csv") << "bitrate,psnr\n1200,38.2\n680,36.4\n390,34.5\n230,32.6\n140,30.9\n";
  const Run bd = run("bdbr --anchor " + (work / "a.csv").string() + " --test " + (work / "a.csv").string(), work);
  REQUIRE(bd.code == 0);
  CHECK(std::abs(nlohmann::json::parse(bd.out)["bd_rate_percent"].get<double>()) < 1e-9);

  // Exit codes: usage 1, data 2, numeric 3.
  CHECK(run("propose-refs --manifest " + manifest, work).code == 1);
  CHECK(run("frobnicate", work).code == 1);
  CHECK(run("propose-refs --manifest " + manifest + " --target 3 --radius 0", work).code == 1);
  CHECK(run("propose-refs --manifest /nonexistent/manifest.json --target 0 --radius 1", work).code == 2);
  std::ofstream(work / "bad.qew") << "XXXX";
  CHECK(run("enhance --weights " + (work / "bad.qew").string() + " --manifest " + manifest + " --out " +
                (work / "never").string(),
            work)
            .code == 2);
  CHECK_FALSE(fs::exists(work / "never"));
  std::ofstream(work / "unknown.json") << R"({"dataset": "data", "epochs": 3})";
  CHECK(run("train --config " + (work / "unknown.json").string() + " --out " + (work / "x.qew").string(), work).code == 1);
  std::ofstream(work / "nan.json") << R"({"dataset": "data", "radius": 1, "iqe": {"blocks": 1, "width": 8},
      "iterations": 5, "batch_size": 1, "patch_size": 16, "base_lr": 1e30, "seed": 1})";
  CHECK(run("train --config " + (work / "nan.json").string() + " --out " + (work / "nan.qew").string(), work).code == 3);
  CHECK_FALSE(fs::exists(work / "nan.qew"));
}

}  // TEST_SUITE
