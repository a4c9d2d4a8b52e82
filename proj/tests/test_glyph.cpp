#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "transtext/font.hpp"
#include "transtext/glyph.hpp"
#include "transtext/image_io.hpp"

using namespace transtext;

namespace {

std::size_t count_on(const AlphaMatte& a) {
  std::size_t n = 0;
  for (double v : a.data) n += v > 0.0;
  return n;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ClipSpec make_spec(EffectKind effect, std::string text, std::uint64_t seed) {
  ClipSpec s;
  s.glyph.text = std::move(text);
  s.glyph.color = {0.9, 0.4, 0.3};
  s.effect = effect;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("rasterize_text: space is empty") {
  GlyphSpec g;
  g.text = " ";
  const AlphaMatte a = rasterize_text(g, 16, 16);
  CHECK(count_on(a) == 0);
}

TEST_CASE("rasterize_text: 'I' is a 7-pixel vertical bar") {
  // oracle: count set bits of the committed bitmap
  const auto& bitmap = font::glyph('I');
  std::size_t bits = 0;
  for (int r = 0; r < font::kGlyphHeight; ++r)
    for (int c = 0; c < font::kGlyphWidth; ++c) bits += font::pixel(bitmap, r, c);
  REQUIRE(bits == 7);

  GlyphSpec g;
  g.text = "I";
  const AlphaMatte a = rasterize_text(g, 16, 16);
  CHECK(count_on(a) == 7);
  std::size_t col = 99;
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x)
      if (a.at(y, x) > 0.0) {
        if (col == 99) col = x;
        CHECK(x == col);
        CHECK(a.at(y, x) == 1.0);
      }
}

TEST_CASE("rasterize_text: scale multiplies area and output is binary") {
  GlyphSpec g;
  g.text = "A1";
  const std::size_t one = count_on(rasterize_text(g, 32, 32));
  g.scale = 2;
  const AlphaMatte big = rasterize_text(g, 32, 32);
  CHECK(count_on(big) == 4 * one);
  for (double v : big.data) CHECK((v == 0.0 || v == 1.0));
  CHECK(big == rasterize_text(g, 32, 32));
}

TEST_CASE("rasterize_text: too-wide text reports required and available width") {
  GlyphSpec g;
  g.text = "ABCDEFG";
  CHECK_THROWS_WITH_AS(rasterize_text(g, 16, 16), doctest::Contains("needs 41 px but width is 16"), std::invalid_argument);
}

TEST_CASE("glyph spec validation") {
  GlyphSpec g;
  g.text = "";
  CHECK_THROWS_AS(validate(g), std::invalid_argument);
  g.text = "abc";
  CHECK_THROWS_AS(validate(g), std::invalid_argument);
  g.text = std::string(17, 'A');
  CHECK_THROWS_AS(validate(g), std::invalid_argument);
  ClipSpec s = make_spec(EffectKind::FadeInOut, "A", 0);
  s.frames = 8;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s.frames = 9;
  s.width = 31;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

TEST_CASE("fade envelope: zero at the ends, stencil at the middle") {
  const ClipSpec s = make_spec(EffectKind::FadeInOut, "HI", 3);
  const RgbaClip clip = render_effect(s);
  const AlphaMatte stencil = rasterize_text(s.glyph, s.height, s.width);
  CHECK(count_on(clip.frames[0].alpha) == 0);
  CHECK(count_on(clip.frames[8].alpha) == 0);
  CHECK(clip.frames[4].alpha == stencil);
}

TEST_CASE("letters collect: assembled at the middle frame") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ClipSpec s = make_spec(EffectKind::LettersCollect, "AB7", seed);
    const RgbaClip clip = render_effect(s);
    CHECK(clip.frames[4].alpha == rasterize_text(s.glyph, s.height, s.width));
    CHECK(!(clip.frames[0].alpha == clip.frames[4].alpha));
  }
}

TEST_CASE("every effect: values in range, deterministic, middle support equals stencil") {
  for (int e = 0; e < kEffectCount; ++e) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const ClipSpec s = make_spec(static_cast<EffectKind>(e), "K2", seed);
      const RgbaClip clip = render_effect(s);
      CHECK_NOTHROW(validate(clip));
      const RgbaClip again = render_effect(s);
      for (std::size_t i = 0; i < clip.size(); ++i) {
        CHECK(clip.frames[i].alpha == again.frames[i].alpha);
        CHECK(clip.frames[i].foreground == again.frames[i].foreground);
      }
      const AlphaMatte stencil = rasterize_text(s.glyph, s.height, s.width);
      const AlphaMatte& mid = clip.frames[s.frames / 2].alpha;
      for (std::size_t i = 0; i < stencil.data.size(); ++i) CHECK((mid.data[i] > 0.0) == (stencil.data[i] > 0.0));
    }
  }
}

TEST_CASE("flicker multiplier stays in [0.5, 1]") {
  const ClipSpec s = make_spec(EffectKind::Flicker, "O", 9);
  const RgbaClip clip = render_effect(s);
  const AlphaMatte stencil = rasterize_text(s.glyph, s.height, s.width);
  for (const auto& f : clip.frames)
    for (std::size_t i = 0; i < stencil.data.size(); ++i)
      if (stencil.data[i] > 0.0) CHECK((f.alpha.data[i] >= 0.5 && f.alpha.data[i] <= 1.0));
}

TEST_CASE("snow flakes appear before the middle and fade out") {
  const ClipSpec s = make_spec(EffectKind::SnowFall, "A", 4);
  const RgbaClip clip = render_effect(s);
  const AlphaMatte stencil = rasterize_text(s.glyph, s.height, s.width);
  CHECK(count_on(clip.frames[0].alpha) > count_on(stencil));
  CHECK(clip.frames[8].alpha == stencil);
}

TEST_CASE("foreground is the glyph colour on the support and black elsewhere") {
  const ClipSpec s = make_spec(EffectKind::LettersCollect, "Z", 1);
  const RgbaClip clip = render_effect(s);
  for (const auto& f : clip.frames) {
    const std::size_t n = f.alpha.data.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(f.foreground.data[c * n + i] == (f.alpha.data[i] > 0.0 ? s.glyph.color[c] : 0.0));
  }
}

TEST_CASE("middle_reference") {
  ClipSpec s = make_spec(EffectKind::FadeInOut, "Q", 0);
  s.frames = 5;
  const RgbaClip clip = render_effect(s);
  CHECK(middle_reference(clip) == premultiply(clip.frames[2].foreground, clip.frames[2].alpha));
  // fade peaks at 1 in the middle, so the reference is the colour on the stencil
  const AlphaMatte stencil = rasterize_text(s.glyph, s.height, s.width);
  const RgbFrame ref = middle_reference(clip);
  for (std::size_t i = 0; i < stencil.data.size(); ++i) CHECK(ref.data[i] == stencil.data[i] * s.glyph.color[0]);

  RgbaClip empty;
  for (int i = 0; i < 3; ++i) empty.frames.push_back({RgbFrame(4, 4, 0.7), AlphaMatte(4, 4, 0.0)});
  CHECK(middle_reference(empty) == RgbFrame(4, 4, 0.0));
  empty.frames.pop_back();
  CHECK_THROWS_AS(middle_reference(empty), std::invalid_argument);
}

TEST_CASE("split_indices: 10 at 0.8 gives 8/2, disjoint and covering") {
  const auto [train, val] = split_indices(10, 0.8, 5);
  CHECK(train.size() == 8);
  CHECK(val.size() == 2);
  std::vector<int> seen(10, 0);
  for (auto i : train) ++seen[i];
  for (auto i : val) ++seen[i];
  for (int v : seen) CHECK(v == 1);
  CHECK(split_indices(10, 0.8, 5) == split_indices(10, 0.8, 5));
  CHECK_THROWS_AS(split_indices(10, 1.0, 5), std::invalid_argument);
}

TEST_CASE("build_dataset writes PNG pairs and a reproducible manifest") {
  const auto dir = testing::scratch_dir("dataset");
  auto specs = random_clip_specs(10, 5, 16, 16, 42);
  const DatasetManifest m = build_dataset(specs, 0.8, dir / "a", 42);
  build_dataset(specs, 0.8, dir / "b", 42);
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));

  std::size_t n_train = 0;
  std::map<EffectKind, int> in, out;
  for (const auto& s : specs) ++in[s.effect];
  for (const auto& e : m.clips) {
    n_train += e.split == "train";
    ++out[e.effect];
  }
  CHECK(n_train == 8);
  CHECK(in == out);

  const DatasetManifest back = read_manifest(dir / "a" / "manifest.json");
  REQUIRE(back.clips.size() == 10);
  CHECK(back.clips[3].text == m.clips[3].text);
  CHECK(back.clips[3].seed == specs[3].seed);

  // frames on disk are the premultiplied composite and the alpha-as-RGB matte
  const RgbaClip clip = render_effect(specs[3]);
  const auto [rgb, alpha] = load_clip_frames(dir / "a" / m.clips[3].id, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(rgb[i] == quantize8(premultiply(clip.frames[i].foreground, clip.frames[i].alpha)));
    CHECK(alpha[i] == alpha_as_rgb_encode(clip.frames[i].alpha));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("build_dataset fails on an unwritable directory") {
  const auto specs = random_clip_specs(2, 3, 16, 16, 1);
  CHECK_THROWS(build_dataset(specs, 0.5, "/proc/transtext_cannot_write_here", 1));
}

TEST_CASE("random specs cover every effect and fit the canvas") {
  const auto specs = random_clip_specs(64, 9, 32, 32, 3);
  std::map<EffectKind, int> hist;
  for (const auto& s : specs) {
    ++hist[s.effect];
    CHECK_NOTHROW(rasterize_text(s.glyph, s.height, s.width));
  }
  CHECK(hist.size() == static_cast<std::size_t>(kEffectCount));
}
