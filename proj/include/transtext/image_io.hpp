#pragma once

#include <filesystem>

#include "transtext/rgba.hpp"

namespace transtext {

/// 8-bit RGB PNG. Grayscale or RGBA inputs are converted (alpha is dropped).
RgbFrame read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const RgbFrame& frame);

/// 8-bit RGBA PNG with straight (non-premultiplied) alpha.
void write_rgba_png(const std::filesystem::path& path, const RgbFrame& straight, const AlphaMatte& alpha);

/// Recovers straight colour from a premultiplied frame; transparent pixels become black.
RgbFrame unpremultiply(const RgbFrame& premultiplied, const AlphaMatte& alpha);

}  // namespace transtext
