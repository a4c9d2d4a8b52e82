#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "transtext/layout.hpp"
#include "transtext/rgba.hpp"

namespace transtext {

/// Spatial downsampling factor of the pooling encoder.
inline constexpr std::size_t kPoolFactor = 2;

/// Dense (frames, channels, height, width) tensor.
struct LatentGrid {
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  LatentGrid() = default;
  LatentGrid(std::size_t f, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : frames(f), channels(c), height(h), width(w), data(f * c * h * w, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t index(std::size_t f, std::size_t c, std::size_t y, std::size_t x) const {
    return ((f * channels + c) * height + y) * width + x;
  }
  double& at(std::size_t f, std::size_t c, std::size_t y, std::size_t x) { return data[index(f, c, y, x)]; }
  double at(std::size_t f, std::size_t c, std::size_t y, std::size_t x) const { return data[index(f, c, y, x)]; }

  bool same_shape(const LatentGrid& o) const {
    return frames == o.frames && channels == o.channels && height == o.height && width == o.width;
  }
  bool operator==(const LatentGrid&) const = default;
};

/// 2x2 average pooling per frame, channels preserved.
LatentGrid encode_frames(const Clip& frames);
LatentGrid encode_latent(const CompositeClip& comp);
LatentGrid encode_frame(const RgbFrame& frame);

/// Nearest-neighbour upsampling, clamped to [0, 1].
Clip decode_frames(const LatentGrid& latent);
CompositeClip decode_latent(const LatentGrid& latent, LayoutMode layout);

/// t * x1 + (1 - t) * x0.
LatentGrid interpolate_path(const LatentGrid& x0, const LatentGrid& x1, double t);
/// x1 - x0.
LatentGrid velocity_target(const LatentGrid& x0, const LatentGrid& x1);

/// True where the latent position (frame, row, col) belongs to the alpha half.
bool in_alpha_half(LayoutMode layout, const LatentGrid& shape, std::size_t f, std::size_t y, std::size_t x);

/// Per-element 0/1 mask of the alpha half, same layout as `shape.data`.
std::vector<std::uint8_t> alpha_half_mask(const LatentGrid& shape, LayoutMode layout);

void check_finite(const LatentGrid& grid, const char* what);

}  // namespace transtext
