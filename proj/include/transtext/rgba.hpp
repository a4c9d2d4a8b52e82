#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace transtext {

/// Three-channel frame, channel-major (c, y, x), values nominally in [0, 1].
struct RgbFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  RgbFrame() = default;
  RgbFrame(std::size_t h, std::size_t w, double fill = 0.0);

  std::size_t plane() const { return height * width; }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[c * plane() + y * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data[c * plane() + y * width + x]; }

  bool operator==(const RgbFrame&) const = default;
};

/// Single-channel opacity map; 1 is opaque.
struct AlphaMatte {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  AlphaMatte() = default;
  AlphaMatte(std::size_t h, std::size_t w, double fill = 0.0);

  double& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return data[y * width + x]; }

  bool operator==(const AlphaMatte&) const = default;
};

struct RgbaFrame {
  RgbFrame foreground;  // straight (non-premultiplied) colour
  AlphaMatte alpha;
};

/// Ground-truth transparent clip: f >= 1 frames of equal size.
struct RgbaClip {
  std::vector<RgbaFrame> frames;

  std::size_t size() const { return frames.size(); }
  std::size_t height() const { return frames.empty() ? 0 : frames.front().alpha.height; }
  std::size_t width() const { return frames.empty() ? 0 : frames.front().alpha.width; }
};

/// Ordered RGB frames. A "gray clip" is a Clip where every pixel has three equal channels.
using Clip = std::vector<RgbFrame>;
using MatteClip = std::vector<AlphaMatte>;

/// out = alpha * fg + (1 - alpha) * bg, alpha broadcast over channels.
RgbFrame composite_over(const RgbFrame& fg, const AlphaMatte& alpha, const RgbFrame& bg);

/// Premultiplied foreground, i.e. composite over black.
RgbFrame premultiply(const RgbFrame& fg, const AlphaMatte& alpha);

/// Replicates round(alpha * 255) / 255 into all three channels.
RgbFrame alpha_as_rgb_encode(const AlphaMatte& alpha);

/// Per-pixel channel mean, clamped to [0, 1].
AlphaMatte alpha_decode(const RgbFrame& frame);

/// round-half-away-from-zero of v * 255 after clamping to [0, 1].
std::uint8_t to_byte(double v);
inline double from_byte(std::uint8_t b) { return static_cast<double>(b) / 255.0; }

/// Snaps every value onto the 8-bit grid {k / 255}.
RgbFrame quantize8(const RgbFrame& frame);

bool is_gray(const RgbFrame& frame);
bool in_unit_range(const RgbFrame& frame);
bool in_unit_range(const AlphaMatte& alpha);

/// Validates the RgbaClip invariants (non-empty, uniform size, values in range).
void validate(const RgbaClip& clip);

Clip premultiplied_clip(const RgbaClip& clip);
Clip alpha_rgb_clip(const RgbaClip& clip);
MatteClip alpha_clip(const RgbaClip& clip);
MatteClip decode_alpha_clip(const Clip& gray);

}  // namespace transtext
