#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "transtext/config.hpp"

using namespace transtext;
using nlohmann::json;

TEST_CASE("defaults survive a json round trip") {
  const RunConfig d;
  const RunConfig back = run_config_from_json(to_json(d));
  CHECK(to_json(back) == to_json(d));
  CHECK(d.train.core.lambda_rec == 0.3);
  CHECK(d.sample.core.cfg_scale == 5.0);
  CHECK(d.layout.beta == 5);
  CHECK(d.data.train_clips == 256);
  CHECK(d.data.val_clips == 32);
}

TEST_CASE("partial configs merge over the defaults") {
  const RunConfig c = run_config_from_json(json::parse(R"({"train": {"steps": 12}, "layout": {"mode": "temporal"}})"));
  CHECK(c.train.core.steps == 12);
  CHECK(c.train.core.batch_size == RunConfig{}.train.core.batch_size);
  CHECK(c.layout.mode == LayoutMode::TemporalWise);
  CHECK(effective_train_config(c).layout == LayoutMode::TemporalWise);
}

TEST_CASE("unknown keys and wrong types are errors") {
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"trian": {}})")), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"train": {"stepz": 1}})")), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"train": {"steps": "many"}})")), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"layout": {"mode": "diagonal"}})")), std::invalid_argument);
}

TEST_CASE("overrides parse json values and fall back to strings") {
  json j = json::object();
  apply_override(j, "train.steps=7");
  apply_override(j, "train.lambda_rec=0.5");
  apply_override(j, "layout.mode=height");
  apply_override(j, "ablate.seeds=[4,5]");
  const RunConfig c = run_config_from_json(j);
  CHECK(c.train.core.steps == 7);
  CHECK(c.train.core.lambda_rec == 0.5);
  CHECK(c.layout.mode == LayoutMode::HeightWise);
  CHECK(c.ablate.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK_THROWS(apply_override(j, "no_equals_sign"));
}

TEST_CASE("validation rejects out-of-range settings") {
  RunConfig c;
  c.train.core.cond_drop_prob = 1.5;
  CHECK_THROWS(validate(c));
  c = RunConfig{};
  c.data.height = 30;  // not a multiple of the pooling and patch sizes
  CHECK_THROWS(validate(c));
  c = RunConfig{};
  c.data.frames = 8;  // the reference is the middle frame
  CHECK_THROWS(validate(c));
  CHECK_NOTHROW(validate(RunConfig{}));
}

TEST_CASE("load_run_config reads files and applies overrides last") {
  const auto dir = testing::scratch_dir("config");
  {
    std::ofstream os(dir / "c.json");
    os << R"({"train": {"steps": 20, "seed": 3}})";
  }
  const RunConfig c = load_run_config(dir / "c.json", {"train.steps=30"});
  CHECK(c.train.core.steps == 30);
  CHECK(c.train.core.seed == 3);
  {
    std::ofstream os(dir / "broken.json");
    os << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(dir / "broken.json", {}), std::invalid_argument);
  CHECK_THROWS_AS(load_run_config(dir / "absent.json", {}), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("enum names round trip") {
  CHECK(parse_reference_style(to_string(ReferenceStyle::Duplicate)) == ReferenceStyle::Duplicate);
  CHECK(parse_temporal_reference(to_string(TemporalReference::Trimap)) == TemporalReference::Trimap);
  CHECK_THROWS(parse_reference_style("mirror"));
}
