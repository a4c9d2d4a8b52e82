#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "transtext/cli.hpp"
#include "json.hpp"

using namespace transtext;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

std::vector<std::string> tiny_sets(const fs::path& data) {
  return {"--set", "data.train_clips=4", "--set", "data.val_clips=2", "--set", "data.frames=3", "--set", "data.height=8",
          "--set", "data.width=8", "--set", "model.embed_dim=8", "--set", "model.heads=2", "--set", "model.blocks=1",
          "--set", "train.steps=6", "--set", "train.batch_size=2", "--set", "train.log_every=2", "--set",
          "sample.num_steps=3", "--set", "paths.dataset=" + data.string()};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--config", "/nonexistent/config.json"}).code == kExitUsage);
  CHECK(cli({"train", "--set", "train.stepz=3"}).code == kExitUsage);
  const Result r = cli({"train", "--set", "train.steps=\"x\""});
  CHECK(r.code == kExitUsage);
  CHECK(!r.err.empty());
  CHECK(cli({"eval"}).code == kExitUsage);
}

TEST_CASE("synth, train, sample and eval are byte-reproducible") {
  const fs::path root = testing::scratch_dir("cli");
  const auto sets = tiny_sets(root / "data");

  auto run_all = [&](const std::string& tag) {
    REQUIRE(cli(with({"synth"}, sets)).code == kExitOk);
    const fs::path run = root / tag / "run";
    REQUIRE(cli(with({"train", "--out", run.string()}, sets)).code == kExitOk);
    const fs::path smp = root / tag / "sample";
    const Result s = cli(with({"sample", "--out", smp.string(), "--set", "paths.checkpoint=" + (run / "checkpoint.ttxt").string()}, sets));
    REQUIRE(s.code == kExitOk);
    const fs::path ev = root / tag / "eval";
    REQUIRE(cli(with({"eval", "--pred", smp.string(), "--gt", (root / "data" / "clip_00000").string(), "--out", ev.string()}, sets)).code ==
            kExitOk);
    return std::vector<std::string>{slurp(root / "data" / "manifest.json"), slurp(run / "checkpoint.ttxt"),
                                    slurp(run / "loss.jsonl"), slurp(smp / "alpha_000.png"), slurp(ev / "metrics.json")};
  };
  const auto first = run_all("a");
  const auto second = run_all("b");
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CAPTURE(i);
    CHECK(first[i] == second[i]);
  }
  CHECK(fs::exists(root / "a" / "sample" / "preview_002.png"));
  CHECK(fs::exists(root / "a" / "sample" / "joint_000.png"));

  const auto metrics = nlohmann::json::parse(first[4]);
  CHECK(metrics["mean"]["fvd"].is_null());
  CHECK(metrics["clips"].size() == 1);
  CHECK(metrics["mean"]["rgba_alignment"].contains("final_score"));

  // a different training seed changes the checkpoint
  REQUIRE(cli(with({"train", "--seed", "99", "--out", (root / "run_c").string()}, sets)).code == kExitOk);
  CHECK(slurp(root / "run_c" / "checkpoint.ttxt") != first[1]);
  fs::remove_all(root);
}

TEST_CASE("eval of ground truth against itself is perfect") {
  const fs::path root = testing::scratch_dir("cli_eval");
  const auto sets = tiny_sets(root / "data");
  REQUIRE(cli(with({"synth", "--set", "data.height=32", "--set", "data.width=32", "--set", "data.frames=5"}, sets)).code == kExitOk);
  const Result r = cli({"eval", "--pred", (root / "data").string(), "--gt", (root / "data").string(), "--out", (root / "ev").string()});
  REQUIRE(r.code == kExitOk);
  const auto m = nlohmann::json::parse(slurp(root / "ev" / "metrics.json"));
  CHECK(m["clips"].size() == 6);
  CHECK(m["mean"]["soft_alpha_miou"].get<double>() == 100.0);
  CHECK(m["mean"]["rgba_alignment"]["final_score"].get<double>() > 90.0);
  fs::remove_all(root);
}

TEST_CASE("gradcheck subcommand passes on the default model") {
  const Result r = cli({"gradcheck", "--params", "40", "--set", "model.embed_dim=16", "--set", "model.heads=2"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("max relative error") != std::string::npos);
}

TEST_CASE("a locked output directory is refused") {
  const fs::path root = testing::scratch_dir("cli_lock");
  const auto sets = tiny_sets(root / "data");
  fs::create_directories(root / "data");
  { std::ofstream(root / "data" / ".transtext.lock") << "1"; }
  CHECK(cli(with({"synth"}, sets)).code != kExitOk);
  fs::remove_all(root);
}
