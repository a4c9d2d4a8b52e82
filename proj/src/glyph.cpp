#include "transtext/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "transtext/font.hpp"
#include "transtext/image_io.hpp"
#include "transtext/latent.hpp"
#include "transtext/rng.hpp"

namespace transtext {

using nlohmann::json;

std::string to_string(EffectKind effect) {
  switch (effect) {
    case EffectKind::FadeInOut: return "fade_in_out";
    case EffectKind::LettersCollect: return "letters_collect";
    case EffectKind::SnowFall: return "snow_fall";
    case EffectKind::Flicker: return "flicker";
  }
  return "?";
}

EffectKind parse_effect(std::string_view name) {
  for (int i = 0; i < kEffectCount; ++i) {
    if (to_string(static_cast<EffectKind>(i)) == name) return static_cast<EffectKind>(i);
  }
  throw std::invalid_argument("unknown effect '" + std::string(name) + "'");
}

void validate(const GlyphSpec& spec) {
  if (spec.text.empty() || spec.text.size() > 16) {
    throw std::invalid_argument("GlyphSpec: text must have 1 to 16 characters");
  }
  for (char c : spec.text) {
    if (!font::supported(c)) throw std::invalid_argument(std::string("GlyphSpec: unsupported character '") + c + "'");
  }
  if (spec.scale < 1) throw std::invalid_argument("GlyphSpec: scale must be >= 1");
  for (double v : spec.color) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("GlyphSpec: colour outside [0, 1]");
  }
}

void validate(const ClipSpec& spec) {
  validate(spec.glyph);
  if (spec.frames < 3 || spec.frames % 2 == 0) {
    throw std::invalid_argument("ClipSpec: frame count must be odd and >= 3");
  }
  if (spec.height == 0 || spec.width == 0 || spec.height % kPoolFactor != 0 || spec.width % kPoolFactor != 0) {
    throw std::invalid_argument("ClipSpec: height and width must be positive multiples of the pool factor");
  }
}

namespace {

struct TextBox {
  long top = 0;
  long left = 0;
  long height = 0;
  long width = 0;
};

TextBox text_box(const GlyphSpec& spec, std::size_t height, std::size_t width) {
  const long scale = spec.scale;
  const long n = static_cast<long>(spec.text.size());
  TextBox box;
  box.width = (n * font::kAdvance - 1) * scale;
  box.height = font::kGlyphHeight * scale;
  if (box.width > static_cast<long>(width)) {
    throw std::invalid_argument("rasterize_text: text needs " + std::to_string(box.width) + " px but width is " +
                                std::to_string(width));
  }
  if (box.height > static_cast<long>(height)) {
    throw std::invalid_argument("rasterize_text: text needs " + std::to_string(box.height) +
                                " px but height is " + std::to_string(height));
  }
  box.top = (static_cast<long>(height) - box.height) / 2;
  box.left = (static_cast<long>(width) - box.width) / 2;
  return box;
}

// Stamps one character with its top-left corner at (top, left), clipping to the canvas.
void stamp(AlphaMatte& matte, char c, long top, long left, int scale, double value) {
  const auto& g = font::glyph(c);
  for (int r = 0; r < font::kGlyphHeight; ++r) {
    for (int col = 0; col < font::kGlyphWidth; ++col) {
      if (!font::pixel(g, r, col)) continue;
      for (int sy = 0; sy < scale; ++sy) {
        for (int sx = 0; sx < scale; ++sx) {
          const long y = top + r * scale + sy;
          const long x = left + col * scale + sx;
          if (y < 0 || x < 0 || y >= static_cast<long>(matte.height) || x >= static_cast<long>(matte.width)) continue;
          double& px = matte.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
          px = std::max(px, value);
        }
      }
    }
  }
}

RgbFrame colour_support(const AlphaMatte& alpha, const std::array<double, 3>& color) {
  RgbFrame fg(alpha.height, alpha.width);
  const std::size_t n = fg.plane();
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha.data[i] > 0.0) {
      for (std::size_t c = 0; c < 3; ++c) fg.data[c * n + i] = color[c];
    }
  }
  return fg;
}

AlphaMatte scaled(const AlphaMatte& m, double k) {
  AlphaMatte out = m;
  for (double& v : out.data) v *= k;
  return out;
}

}  // namespace

AlphaMatte rasterize_text(const GlyphSpec& spec, std::size_t height, std::size_t width) {
  validate(spec);
  const TextBox box = text_box(spec, height, width);
  AlphaMatte matte(height, width);
  for (std::size_t i = 0; i < spec.text.size(); ++i) {
    stamp(matte, spec.text[i], box.top, box.left + static_cast<long>(i) * font::kAdvance * spec.scale, spec.scale,
          1.0);
  }
  return matte;
}

RgbaClip render_effect(const ClipSpec& spec) {
  validate(spec);
  const AlphaMatte stencil = rasterize_text(spec.glyph, spec.height, spec.width);
  const TextBox box = text_box(spec.glyph, spec.height, spec.width);
  const std::size_t f = spec.frames;
  const std::size_t mid = f / 2;
  Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(spec.effect));

  std::vector<AlphaMatte> alphas;
  alphas.reserve(f);

  switch (spec.effect) {
    case EffectKind::FadeInOut: {
      for (std::size_t i = 0; i < f; ++i) {
        const double dist = std::abs(static_cast<double>(i) - static_cast<double>(mid));
        alphas.push_back(scaled(stencil, 1.0 - dist / static_cast<double>(mid)));
      }
      break;
    }
    case EffectKind::LettersCollect: {
      const long scale = spec.glyph.scale;
      const long cw = font::kGlyphWidth * scale;
      const long ch = font::kGlyphHeight * scale;
      const long h = static_cast<long>(spec.height);
      const long w = static_cast<long>(spec.width);
      struct Track {
        long sy, sx, fy, fx;
      };
      std::vector<Track> tracks;
      for (std::size_t k = 0; k < spec.glyph.text.size(); ++k) {
        Track t{};
        t.fy = box.top;
        t.fx = box.left + static_cast<long>(k) * font::kAdvance * scale;
        const long extra = static_cast<long>(rng.below(4));
        switch (rng.below(4)) {
          case 0: t.sy = t.fy; t.sx = -cw - extra; break;
          case 1: t.sy = t.fy; t.sx = w + extra; break;
          case 2: t.sy = -ch - extra; t.sx = t.fx; break;
          default: t.sy = h + extra; t.sx = t.fx; break;
        }
        tracks.push_back(t);
      }
      for (std::size_t i = 0; i < f; ++i) {
        AlphaMatte a(spec.height, spec.width);
        const double progress = i >= mid ? 1.0 : static_cast<double>(i) / static_cast<double>(mid);
        for (std::size_t k = 0; k < tracks.size(); ++k) {
          const auto& t = tracks[k];
          const long y = t.sy + std::lround(progress * static_cast<double>(t.fy - t.sy));
          const long x = t.sx + std::lround(progress * static_cast<double>(t.fx - t.sx));
          stamp(a, spec.glyph.text[k], y, x, spec.glyph.scale, 1.0);
        }
        alphas.push_back(std::move(a));
      }
      break;
    }
    case EffectKind::SnowFall: {
      // Flakes start above the text and melt away by the middle frame, so the
      // reference frame shows only the glyphs.
      struct Flake {
        std::size_t x;
        long y0;
        long speed;
      };
      std::vector<Flake> flakes;
      const std::size_t count = 4 + rng.below(6);
      const std::uint64_t ceiling = static_cast<std::uint64_t>(std::max<long>(1, box.top));
      for (std::size_t k = 0; k < count; ++k) {
        Flake fl{};
        fl.x = rng.below(spec.width);
        fl.y0 = static_cast<long>(rng.below(ceiling));
        fl.speed = 1 + static_cast<long>(rng.below(2));
        flakes.push_back(fl);
      }
      for (std::size_t i = 0; i < f; ++i) {
        AlphaMatte a = stencil;
        const double fade = std::max(0.0, 1.0 - static_cast<double>(i) / static_cast<double>(mid));
        if (fade > 0.0) {
          for (const auto& fl : flakes) {
            const long y = fl.y0 + fl.speed * static_cast<long>(i);
            if (y < 0 || y >= static_cast<long>(spec.height)) continue;
            double& px = a.at(static_cast<std::size_t>(y), fl.x);
            px = std::max(px, fade);
          }
        }
        alphas.push_back(std::move(a));
      }
      break;
    }
    case EffectKind::Flicker: {
      for (std::size_t i = 0; i < f; ++i) alphas.push_back(scaled(stencil, rng.uniform(0.5, 1.0)));
      break;
    }
  }

  RgbaClip clip;
  clip.frames.reserve(f);
  for (auto& a : alphas) {
    RgbaFrame frame;
    frame.foreground = colour_support(a, spec.glyph.color);
    frame.alpha = std::move(a);
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

RgbFrame middle_reference(const RgbaClip& clip) {
  if (clip.size() == 0 || clip.size() % 2 == 0) {
    throw std::invalid_argument("middle_reference: clip needs an odd number of frames, got " +
                                std::to_string(clip.size()));
  }
  const auto& mid = clip.frames[clip.size() / 2];
  return premultiply(mid.foreground, mid.alpha);
}

std::vector<ClipSpec> random_clip_specs(std::size_t count, std::size_t frames, std::size_t height, std::size_t width,
                                        std::uint64_t seed) {
  static constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::vector<ClipSpec> specs;
  specs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, i);
    ClipSpec s;
    s.frames = frames;
    s.height = height;
    s.width = width;
    s.effect = static_cast<EffectKind>(rng.below(kEffectCount));
    const bool big = height >= 2 * font::kGlyphHeight && width >= 2 * font::kGlyphWidth && rng.uniform() < 0.3;
    s.glyph.scale = big ? 2 : 1;
    const std::size_t fit = (width / static_cast<std::size_t>(s.glyph.scale) + 1) / font::kAdvance;
    if (fit == 0 || font::kGlyphHeight * static_cast<std::size_t>(s.glyph.scale) > height) {
      throw std::invalid_argument("random_clip_specs: canvas too small for a single glyph");
    }
    const std::size_t len = 1 + rng.below(std::min<std::size_t>(fit, 4));
    for (std::size_t k = 0; k < len; ++k) s.glyph.text.push_back(kAlphabet[rng.below(kAlphabet.size())]);
    for (double& c : s.glyph.color) c = rng.uniform(0.25, 1.0);
    s.seed = rng.next_u64();
    specs.push_back(std::move(s));
  }
  return specs;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, double split_fraction,
                                                                            std::uint64_t shuffle_seed) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(count) * split_fraction));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {std::move(train), std::move(val)};
}

std::string frame_name(std::string_view prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%03zu.png", index);
  return std::string(prefix) + buf;
}

std::string clip_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%05zu", i);
  return buf;
}

DatasetManifest build_dataset(const std::vector<ClipSpec>& specs, double split_fraction,
                              const std::filesystem::path& out_dir, std::uint64_t shuffle_seed) {
  for (const auto& s : specs) {
    validate(s);
    rasterize_text(s.glyph, s.height, s.width);
  }
  auto [train, val] = split_indices(specs.size(), split_fraction, shuffle_seed);

  std::vector<RgbaClip> clips(specs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(specs.size()); ++i) {
    clips[static_cast<std::size_t>(i)] = render_effect(specs[static_cast<std::size_t>(i)]);
  }

  DatasetManifest manifest;
  manifest.split_fraction = split_fraction;
  manifest.shuffle_seed = shuffle_seed;
  std::vector<bool> is_train(specs.size(), false);
  for (auto i : train) is_train[i] = true;

  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    DatasetEntry e;
    e.id = clip_id(i);
    e.effect = s.effect;
    e.text = s.glyph.text;
    e.seed = s.seed;
    e.split = is_train[i] ? "train" : "val";
    e.scale = s.glyph.scale;
    e.color = s.glyph.color;
    e.frames = s.frames;
    e.height = s.height;
    e.width = s.width;

    const auto dir = out_dir / e.id;
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < clips[i].size(); ++k) {
      const auto& fr = clips[i].frames[k];
      write_rgb_png(dir / frame_name("rgb", k), premultiply(fr.foreground, fr.alpha));
      write_rgb_png(dir / frame_name("alpha", k), alpha_as_rgb_encode(fr.alpha));
    }
    manifest.clips.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json j;
  j["split_fraction"] = manifest.split_fraction;
  j["shuffle_seed"] = manifest.shuffle_seed;
  json clips = json::array();
  for (const auto& e : manifest.clips) {
    clips.push_back({{"id", e.id},
                     {"effect", to_string(e.effect)},
                     {"text", e.text},
                     {"seed", e.seed},
                     {"split", e.split},
                     {"scale", e.scale},
                     {"color", e.color},
                     {"frames", e.frames},
                     {"height", e.height},
                     {"width", e.width}});
  }
  j["clips"] = std::move(clips);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const json j = json::parse(in);
  DatasetManifest m;
  m.split_fraction = j.at("split_fraction").get<double>();
  m.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
  for (const auto& c : j.at("clips")) {
    DatasetEntry e;
    e.id = c.at("id").get<std::string>();
    e.effect = parse_effect(c.at("effect").get<std::string>());
    e.text = c.at("text").get<std::string>();
    e.seed = c.at("seed").get<std::uint64_t>();
    e.split = c.at("split").get<std::string>();
    e.scale = c.at("scale").get<int>();
    e.color = c.at("color").get<std::array<double, 3>>();
    e.frames = c.at("frames").get<std::size_t>();
    e.height = c.at("height").get<std::size_t>();
    e.width = c.at("width").get<std::size_t>();
    m.clips.push_back(std::move(e));
  }
  return m;
}

std::pair<Clip, Clip> load_clip_frames(const std::filesystem::path& clip_dir, std::size_t frames) {
  Clip rgb;
  Clip alpha;
  for (std::size_t k = 0; k < frames; ++k) {
    rgb.push_back(read_rgb_png(clip_dir / frame_name("rgb", k)));
    alpha.push_back(read_rgb_png(clip_dir / frame_name("alpha", k)));
  }
  return {std::move(rgb), std::move(alpha)};
}

}  // namespace transtext
