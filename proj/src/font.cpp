#include "transtext/font.hpp"

#include <stdexcept>
#include <string>

namespace transtext::font {
namespace {

constexpr std::uint8_t row(const char (&bits)[6]) {
  std::uint8_t v = 0;
  for (int i = 0; i < 5; ++i) v = static_cast<std::uint8_t>((v << 1) | (bits[i] == '#' ? 1 : 0));
  return v;
}

#define GLYPH(a, b, c, d, e, f, g) Glyph{row(a), row(b), row(c), row(d), row(e), row(f), row(g)}

// clang-format off
const std::array<Glyph, 26> kLetters = {
  GLYPH(".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),  // A
  GLYPH("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),  // B
  GLYPH(".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),  // C
  GLYPH("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),  // D
  GLYPH("#####", "#....", "#....", "####.", "#....", "#....", "#####"),  // E
  GLYPH("#####", "#....", "#....", "####.", "#....", "#....", "#...."),  // F
  GLYPH(".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"),  // G
  GLYPH("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),  // H
  GLYPH("..#..", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),  // I
  GLYPH("....#", "....#", "....#", "....#", "#...#", "#...#", ".###."),  // J
  GLYPH("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),  // K
  GLYPH("#....", "#....", "#....", "#....", "#....", "#....", "#####"),  // L
  GLYPH("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),  // M
  GLYPH("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),  // N
  GLYPH(".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),  // O
  GLYPH("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),  // P
  GLYPH(".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),  // Q
  GLYPH("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),  // R
  GLYPH(".####", "#....", "#....", ".###.", "....#", "....#", "####."),  // S
  GLYPH("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),  // T
  GLYPH("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),  // U
  GLYPH("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),  // V
  GLYPH("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."),  // W
  GLYPH("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),  // X
  GLYPH("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),  // Y
  GLYPH("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),  // Z
};

const std::array<Glyph, 10> kDigits = {
  GLYPH(".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),  // 0
  GLYPH("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),  // 1
  GLYPH(".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),  // 2
  GLYPH("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),  // 3
  GLYPH("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),  // 4
  GLYPH("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),  // 5
  GLYPH("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),  // 6
  GLYPH("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),  // 7
  GLYPH(".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),  // 8
  GLYPH(".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),  // 9
};
// clang-format on

#undef GLYPH

const Glyph kSpace{};

}  // namespace

bool supported(char c) { return c == ' ' || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

const Glyph& glyph(char c) {
  if (c == ' ') return kSpace;
  if (c >= 'A' && c <= 'Z') return kLetters[static_cast<std::size_t>(c - 'A')];
  if (c >= '0' && c <= '9') return kDigits[static_cast<std::size_t>(c - '0')];
  throw std::invalid_argument(std::string("font: unsupported character '") + c + "'");
}

}  // namespace transtext::font
