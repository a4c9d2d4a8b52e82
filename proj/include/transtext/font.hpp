#pragma once

#include <array>
#include <cstdint>

namespace transtext::font {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kAdvance = kGlyphWidth + 1;

/// Row bitmaps, bit 4 is the leftmost column.
using Glyph = std::array<std::uint8_t, kGlyphHeight>;

bool supported(char c);

/// Bitmap for A-Z, 0-9 and space; throws for anything else.
const Glyph& glyph(char c);

inline bool pixel(const Glyph& g, int row, int col) { return (g[row] >> (kGlyphWidth - 1 - col)) & 1U; }

}  // namespace transtext::font
