#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "transtext/rgba.hpp"

namespace transtext {

struct GlyphSpec {
  std::string text;
  int scale = 1;
  std::array<double, 3> color{1.0, 1.0, 1.0};
};

enum class EffectKind { FadeInOut = 0, LettersCollect = 1, SnowFall = 2, Flicker = 3 };
inline constexpr int kEffectCount = 4;

std::string to_string(EffectKind effect);
EffectKind parse_effect(std::string_view name);

struct ClipSpec {
  GlyphSpec glyph;
  EffectKind effect = EffectKind::FadeInOut;
  std::size_t frames = 9;
  std::size_t height = 32;
  std::size_t width = 32;
  std::uint64_t seed = 0;
};

void validate(const GlyphSpec& spec);
void validate(const ClipSpec& spec);

/// Binary stencil of `spec.text`, centred. Each character is a 5x7 cell plus one
/// unit of spacing, all multiplied by `scale`.
AlphaMatte rasterize_text(const GlyphSpec& spec, std::size_t height, std::size_t width);

RgbaClip render_effect(const ClipSpec& spec);

/// Premultiplied middle frame of an odd-length clip.
RgbFrame middle_reference(const RgbaClip& clip);

/// Random but seed-determined specs covering all effects.
std::vector<ClipSpec> random_clip_specs(std::size_t count, std::size_t frames, std::size_t height,
                                        std::size_t width, std::uint64_t seed);

struct DatasetEntry {
  std::string id;
  EffectKind effect = EffectKind::FadeInOut;
  std::string text;
  std::uint64_t seed = 0;
  std::string split;  // "train" or "val"
  int scale = 1;
  std::array<double, 3> color{};
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

struct DatasetManifest {
  double split_fraction = 0.0;
  std::uint64_t shuffle_seed = 0;
  std::vector<DatasetEntry> clips;
};

/// Seeded Fisher-Yates shuffle; the first round(n * fraction) indices form the
/// training split. Returns (train, val) index lists, each sorted ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, double split_fraction,
                                                                            std::uint64_t shuffle_seed);

/// Renders every spec and writes `<out>/<id>/rgb_%03d.png`, `<out>/<id>/alpha_%03d.png`
/// and `<out>/manifest.json`. RGB frames hold the premultiplied composite over black.
DatasetManifest build_dataset(const std::vector<ClipSpec>& specs, double split_fraction,
                              const std::filesystem::path& out_dir, std::uint64_t shuffle_seed);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Directory name of the i-th spec, "clip_%05d".
std::string clip_id(std::size_t i);

std::string frame_name(std::string_view prefix, std::size_t index);

/// Loads the RGB frames and alpha-as-RGB frames of one clip directory.
std::pair<Clip, Clip> load_clip_frames(const std::filesystem::path& clip_dir, std::size_t frames);

}  // namespace transtext
