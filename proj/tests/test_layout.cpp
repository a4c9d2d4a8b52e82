#include <algorithm>

#include "doctest.h"
#include "support.hpp"
#include "transtext/latent.hpp"
#include "transtext/layout.hpp"

using namespace transtext;

namespace {

Clip random_clip(std::size_t f, std::size_t h, std::size_t w, Rng& rng) {
  Clip c;
  for (std::size_t i = 0; i < f; ++i) c.push_back(quantize8(testing::random_frame(h, w, rng)));
  return c;
}

Clip gray_clip(std::size_t f, std::size_t h, std::size_t w, Rng& rng) {
  Clip c;
  for (std::size_t i = 0; i < f; ++i) c.push_back(alpha_as_rgb_encode(testing::random_matte(h, w, rng)));
  return c;
}

RgbFrame pixel_frame(int r, int g, int b) {
  RgbFrame f(1, 1);
  f.data = {r / 255.0, g / 255.0, b / 255.0};
  return f;
}

}  // namespace

TEST_CASE("make_trimap: beta 5 splits max channel 4 and 5") {
  CHECK(make_trimap(pixel_frame(4, 0, 2), 5) == RgbFrame(1, 1, 0.0));
  CHECK(make_trimap(pixel_frame(0, 5, 0), 5) == RgbFrame(1, 1, 1.0));
  CHECK(make_trimap(pixel_frame(0, 0, 0), 0) == RgbFrame(1, 1, 1.0));
}

TEST_CASE("make_trimap output is binary, monotone in beta and idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const RgbFrame ref = quantize8(testing::random_frame(6, 6, rng));
    RgbFrame prev = make_trimap(ref, 0);
    for (int beta = 1; beta <= 255; beta += 7) {
      const RgbFrame t = make_trimap(ref, beta);
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        CHECK((t.data[i] == 0.0 || t.data[i] == 1.0));
        if (prev.data[i] == 0.0) CHECK(t.data[i] == 0.0);
      }
      CHECK(is_gray(t));
      for (int beta2 = 1; beta2 <= 255; beta2 += 31) CHECK(make_trimap(t, beta2) == t);
      prev = t;
    }
  }
}

TEST_CASE("concat_joint: width-wise places RGB left and alpha right") {
  Rng rng(12);
  const Clip rgb = random_clip(1, 2, 2, rng);
  const Clip alpha = gray_clip(1, 2, 2, rng);
  const CompositeClip comp = concat_joint(rgb, alpha, LayoutMode::WidthWise);
  REQUIRE(comp.frames.size() == 1);
  CHECK(comp.frames[0].height == 2);
  CHECK(comp.frames[0].width == 4);
  CHECK(comp.boundary == 2);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x) {
        CHECK(comp.frames[0].at(c, y, x) == rgb[0].at(c, y, x));
        CHECK(comp.frames[0].at(c, y, x + 2) == alpha[0].at(c, y, x));
      }
}

TEST_CASE("concat_joint: height-wise stacks RGB on top") {
  Rng rng(13);
  const Clip rgb = random_clip(2, 3, 2, rng);
  const Clip alpha = gray_clip(2, 3, 2, rng);
  const CompositeClip comp = concat_joint(rgb, alpha, LayoutMode::HeightWise);
  CHECK(comp.frames[1].height == 6);
  CHECK(comp.boundary == 3);
  CHECK(comp.frames[1].at(2, 4, 1) == alpha[1].at(2, 1, 1));
  CHECK(comp.frames[1].at(0, 2, 0) == rgb[1].at(0, 2, 0));
}

TEST_CASE("concat_joint: temporal appends alpha frames") {
  Rng rng(14);
  const Clip rgb = random_clip(3, 2, 2, rng);
  const Clip alpha = gray_clip(3, 2, 2, rng);
  const CompositeClip comp = concat_joint(rgb, alpha, LayoutMode::TemporalWise);
  REQUIRE(comp.frames.size() == 6);
  CHECK(comp.boundary == 3);
  CHECK(comp.frames[3] == alpha[0]);  // fourth frame is the first alpha frame
  CHECK(comp.frames[2] == rgb[2]);
}

TEST_CASE("split_joint inverts concat_joint in every mode") {
  Rng rng(15);
  for (auto mode : {LayoutMode::WidthWise, LayoutMode::HeightWise, LayoutMode::TemporalWise}) {
    const Clip rgb = random_clip(3, 4, 6, rng);
    const Clip alpha = gray_clip(3, 4, 6, rng);
    const auto [r, a] = split_joint(concat_joint(rgb, alpha, mode), mode);
    CHECK(r == rgb);
    CHECK(a == alpha);
  }
}

TEST_CASE("split_joint: width 8 gives two width-4 halves") {
  CompositeClip comp{{RgbFrame(2, 8, 0.25)}, LayoutMode::WidthWise, 4};
  const auto [r, a] = split_joint(comp, LayoutMode::WidthWise);
  CHECK(r[0].width == 4);
  CHECK(a[0].width == 4);
}

TEST_CASE("split_joint rejects inconsistent boundaries and layouts") {
  CompositeClip comp{{RgbFrame(2, 8, 0.25)}, LayoutMode::WidthWise, 3};
  CHECK_THROWS_AS(split_joint(comp, LayoutMode::WidthWise), std::invalid_argument);
  comp.boundary = 4;
  CHECK_THROWS_AS(split_joint(comp, LayoutMode::HeightWise), std::invalid_argument);
  CompositeClip temporal{{RgbFrame(2, 2), RgbFrame(2, 2), RgbFrame(2, 2)}, LayoutMode::TemporalWise, 1};
  CHECK_THROWS_AS(split_joint(temporal, LayoutMode::TemporalWise), std::invalid_argument);
}

TEST_CASE("concat_joint rejects shape mismatches") {
  Rng rng(16);
  CHECK_THROWS_AS(concat_joint(random_clip(2, 4, 4, rng), gray_clip(3, 4, 4, rng), LayoutMode::WidthWise),
                  std::invalid_argument);
  CHECK_THROWS_AS(concat_joint(random_clip(2, 4, 4, rng), gray_clip(2, 4, 6, rng), LayoutMode::TemporalWise),
                  std::invalid_argument);
}

TEST_CASE("width-wise and height-wise composites hold the same pixel multiset") {
  Rng rng(17);
  const Clip rgb = random_clip(2, 4, 4, rng);
  const Clip alpha = gray_clip(2, 4, 4, rng);
  auto values = [](const CompositeClip& c) {
    std::vector<double> v;
    for (const auto& f : c.frames) v.insert(v.end(), f.data.begin(), f.data.end());
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(values(concat_joint(rgb, alpha, LayoutMode::WidthWise)) == values(concat_joint(rgb, alpha, LayoutMode::HeightWise)));
}

TEST_CASE("compose_reference shapes and contents") {
  SUBCASE("width-wise black reference has a black trimap half") {
    const ReferenceImage r = compose_reference(RgbFrame(4, 5, 0.0), 5, LayoutMode::WidthWise);
    CHECK(r.composed.height == 4);
    CHECK(r.composed.width == 10);
    for (double v : r.composed.data) CHECK(v == 0.0);
  }
  SUBCASE("height-wise stacks the trimap below") {
    Rng rng(18);
    const RgbFrame ref = quantize8(testing::random_frame(4, 5, rng));
    const ReferenceImage r = compose_reference(ref, 5, LayoutMode::HeightWise);
    CHECK(r.composed == join_frames(ref, make_trimap(ref, 5), LayoutMode::HeightWise));
    CHECK(r.composed.height == 8);
  }
  SUBCASE("temporal keeps a single image") {
    Rng rng(19);
    const RgbFrame ref = quantize8(testing::random_frame(4, 5, rng));
    CHECK(compose_reference(ref, 5, LayoutMode::TemporalWise, TemporalReference::Rgb).composed == ref);
    const RgbFrame t = compose_reference(ref, 5, LayoutMode::TemporalWise, TemporalReference::Trimap).composed;
    for (double v : t.data) CHECK((v == 0.0 || v == 1.0));
  }
  SUBCASE("duplicate style repeats the RGB reference") {
    Rng rng(20);
    const RgbFrame ref = quantize8(testing::random_frame(4, 5, rng));
    const ReferenceImage r = compose_reference(ref, 5, LayoutMode::WidthWise, TemporalReference::Rgb, ReferenceStyle::Duplicate);
    CHECK(r.composed == join_frames(ref, ref, LayoutMode::WidthWise));
  }
}

TEST_CASE("pooling commutes with spatial concatenation bit for bit") {
  Rng rng(21);
  const Clip rgb = random_clip(3, 8, 6, rng);
  const Clip alpha = gray_clip(3, 8, 6, rng);
  for (auto mode : {LayoutMode::WidthWise, LayoutMode::HeightWise}) {
    const LatentGrid joint = encode_latent(concat_joint(rgb, alpha, mode));
    // concatenate the pooled halves directly in latent space
    const LatentGrid lr = encode_frames(rgb), la = encode_frames(alpha);
    LatentGrid manual = mode == LayoutMode::WidthWise ? LatentGrid(3, 3, lr.height, 2 * lr.width)
                                                      : LatentGrid(3, 3, 2 * lr.height, lr.width);
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < lr.height; ++y)
          for (std::size_t x = 0; x < lr.width; ++x) {
            manual.at(f, c, y, x) = lr.at(f, c, y, x);
            if (mode == LayoutMode::WidthWise) manual.at(f, c, y, x + lr.width) = la.at(f, c, y, x);
            else manual.at(f, c, y + lr.height, x) = la.at(f, c, y, x);
          }
    CHECK(joint == manual);
  }
}

TEST_CASE("layout names parse") {
  CHECK(parse_layout("width") == LayoutMode::WidthWise);
  CHECK(parse_layout("h") == LayoutMode::HeightWise);
  CHECK(parse_layout("temporal") == LayoutMode::TemporalWise);
  CHECK_THROWS_AS(parse_layout("diagonal"), std::invalid_argument);
  for (auto m : {LayoutMode::WidthWise, LayoutMode::HeightWise, LayoutMode::TemporalWise}) CHECK(parse_layout(to_string(m)) == m);
}
