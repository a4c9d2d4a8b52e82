#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "transtext/image_io.hpp"
#include "transtext/rgba.hpp"

using namespace transtext;

TEST_CASE("composite_over: opaque and transparent extremes") {
  Rng rng(1);
  const RgbFrame fg = testing::random_frame(4, 5, rng);
  const RgbFrame bg = testing::random_frame(4, 5, rng);
  CHECK(composite_over(fg, AlphaMatte(4, 5, 1.0), bg) == fg);
  CHECK(composite_over(fg, AlphaMatte(4, 5, 0.0), bg) == bg);
}

TEST_CASE("composite_over: half alpha of 0.8 over 0.2 is 0.5") {
  const RgbFrame out = composite_over(RgbFrame(3, 3, 0.8), AlphaMatte(3, 3, 0.5), RgbFrame(3, 3, 0.2));
  for (double v : out.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("composite_over: dimension mismatch names the axis") {
  CHECK_THROWS_WITH_AS(composite_over(RgbFrame(3, 4), AlphaMatte(2, 4), RgbFrame(3, 4)),
                       doctest::Contains("height"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(composite_over(RgbFrame(3, 4), AlphaMatte(3, 4), RgbFrame(3, 5)),
                       doctest::Contains("width"), std::invalid_argument);
}

TEST_CASE("composite_over over black equals the premultiplied foreground") {
  Rng rng(2);
  const RgbFrame fg = testing::random_frame(6, 7, rng);
  const AlphaMatte a = testing::random_matte(6, 7, rng);
  const RgbFrame out = composite_over(fg, a, RgbFrame(6, 7, 0.0));
  const RgbFrame pre = premultiply(fg, a);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 7; ++x) {
        CHECK(out.at(c, y, x) == doctest::Approx(a.at(y, x) * fg.at(c, y, x)).epsilon(1e-15));
        CHECK(pre.at(c, y, x) == doctest::Approx(a.at(y, x) * fg.at(c, y, x)).epsilon(1e-15));
      }
}

TEST_CASE("alpha_as_rgb_encode rounds half away from zero") {
  AlphaMatte a(1, 3);
  a.data = {0.0, 1.0, 0.5};
  const RgbFrame e = alpha_as_rgb_encode(a);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(e.at(c, 0, 0) == 0.0);
    CHECK(e.at(c, 0, 1) == 255.0 / 255.0);
    CHECK(e.at(c, 0, 2) == 128.0 / 255.0);
  }
  CHECK(is_gray(e));
}

TEST_CASE("alpha_decode takes the clamped channel mean") {
  RgbFrame f(1, 3);
  const double px[3][3] = {{0.4, 0.4, 0.4}, {0.3, 0.6, 0.9}, {1.2, 1.5, 0.9}};
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t c = 0; c < 3; ++c) f.at(c, 0, x) = px[x][c];
  const AlphaMatte a = alpha_decode(f);
  CHECK(a.at(0, 0) == 0.4);
  CHECK(a.at(0, 1) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a.at(0, 2) == 1.0);
}

TEST_CASE("codec round trip on the 8-bit grid is exact") {
  for (int k = 0; k <= 255; ++k) {
    AlphaMatte a(1, 1, static_cast<double>(k) / 255.0);
    CHECK(alpha_decode(alpha_as_rgb_encode(a)) == a);
  }
}

TEST_CASE("encoding is idempotent through decode") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const AlphaMatte a = testing::random_matte(5, 5, rng);
    const RgbFrame e = alpha_as_rgb_encode(a);
    CHECK(alpha_as_rgb_encode(alpha_decode(e)) == e);
  }
}

TEST_CASE("to_byte clamps and rounds") {
  CHECK(to_byte(-0.3) == 0);
  CHECK(to_byte(1.7) == 255);
  CHECK(to_byte(127.5 / 255.0) == 128);
  CHECK(from_byte(128) == 128.0 / 255.0);
}

TEST_CASE("validate rejects ragged clips and out-of-range values") {
  RgbaClip clip;
  CHECK_THROWS_AS(validate(clip), std::invalid_argument);
  clip.frames.push_back({RgbFrame(2, 2, 0.5), AlphaMatte(2, 2, 0.5)});
  CHECK_NOTHROW(validate(clip));
  clip.frames.push_back({RgbFrame(2, 3, 0.5), AlphaMatte(2, 3, 0.5)});
  CHECK_THROWS_AS(validate(clip), std::invalid_argument);
  clip.frames.pop_back();
  clip.frames[0].alpha.data[0] = 1.5;
  CHECK_THROWS_AS(validate(clip), std::invalid_argument);
}

TEST_CASE("PNG round trip preserves 8-bit frames") {
  const auto dir = testing::scratch_dir("png");
  Rng rng(4);
  const RgbFrame f = quantize8(testing::random_frame(5, 9, rng));
  write_rgb_png(dir / "f.png", f);
  CHECK(read_rgb_png(dir / "f.png") == f);

  const AlphaMatte a = testing::grid_matte(5, 9, rng);
  write_rgba_png(dir / "p.png", f, a);
  CHECK(read_rgb_png(dir / "p.png") == f);  // alpha channel is dropped on read
  std::filesystem::remove_all(dir);
}

TEST_CASE("unpremultiply inverts premultiply where alpha is positive") {
  Rng rng(5);
  const RgbFrame fg = testing::random_frame(3, 3, rng);
  AlphaMatte a = testing::random_matte(3, 3, rng);
  a.data[0] = 0.0;
  const RgbFrame back = unpremultiply(premultiply(fg, a), a);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(back.at(c, 0, 0) == 0.0);
    for (std::size_t i = 1; i < 9; ++i) CHECK(back.data[c * 9 + i] == doctest::Approx(fg.data[c * 9 + i]).epsilon(1e-12));
  }
}
