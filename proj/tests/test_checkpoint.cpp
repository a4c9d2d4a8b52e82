#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "transtext/checkpoint.hpp"

using namespace transtext;

TEST_CASE("checkpoint round trip preserves names, shapes and bits") {
  const auto dir = testing::scratch_dir("ckpt");
  ParamStore p;
  p.add("embed.w", {3, 4});
  p.add("blocks.0.ln.g", {4}, 1.0);
  p.add("scalar", {1});
  Rng rng(1);
  for (double& v : p.data()) v = rng.normal() * 1e-3;
  p.data().back() = -0.0;
  save_checkpoint(dir / "a.ttxt", R"({"k": 1})", p);
  const Checkpoint c = load_checkpoint(dir / "a.ttxt");
  CHECK(c.config_json == R"({"k": 1})");
  CHECK(c.params == p);
  CHECK(c.params.entries()[1].name == "blocks.0.ln.g");
  CHECK(c.params.entries()[0].shape == std::vector<std::size_t>{3, 4});
  CHECK(std::signbit(c.params.data().back()));

  // same input, same bytes
  save_checkpoint(dir / "b.ttxt", R"({"k": 1})", p);
  std::ifstream a(dir / "a.ttxt", std::ios::binary), b(dir / "b.ttxt", std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto dir = testing::scratch_dir("ckpt_bad");
  {
    std::ofstream os(dir / "bad.ttxt", std::ios::binary);
    os << "NOPE and some more bytes";
  }
  CHECK_THROWS(load_checkpoint(dir / "bad.ttxt"));
  CHECK_THROWS(load_checkpoint(dir / "missing.ttxt"));

  ParamStore p;
  p.add("w", {8, 8}, 0.5);
  save_checkpoint(dir / "ok.ttxt", "{}", p);
  const auto size = std::filesystem::file_size(dir / "ok.ttxt");
  std::filesystem::resize_file(dir / "ok.ttxt", size - 9);
  CHECK_THROWS(load_checkpoint(dir / "ok.ttxt"));
  std::filesystem::remove_all(dir);
}
