#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "transtext/flow.hpp"
#include "transtext/rgba.hpp"
#include "transtext/rng.hpp"

namespace testing {

inline transtext::RgbFrame random_frame(std::size_t h, std::size_t w, transtext::Rng& rng) {
  transtext::RgbFrame f(h, w);
  for (double& v : f.data) v = rng.uniform();
  return f;
}

inline transtext::AlphaMatte random_matte(std::size_t h, std::size_t w, transtext::Rng& rng) {
  transtext::AlphaMatte a(h, w);
  for (double& v : a.data) v = rng.uniform();
  return a;
}

inline transtext::AlphaMatte grid_matte(std::size_t h, std::size_t w, transtext::Rng& rng) {
  transtext::AlphaMatte a(h, w);
  for (double& v : a.data) v = static_cast<double>(rng.below(256)) / 255.0;
  return a;
}

// Sum of a few Gaussian blobs evaluated at (x - dx, y - dy); a smooth
// pattern whose exact translation is available in closed form.
inline transtext::GrayImage blob_pattern(std::size_t h, std::size_t w, double dx, double dy, std::uint64_t seed = 7) {
  transtext::Rng rng(seed);
  struct Blob { double cx, cy, s, a; };
  Blob blobs[12];
  for (auto& b : blobs) b = {rng.uniform(8.0, w - 8.0), rng.uniform(8.0, h - 8.0), rng.uniform(3.0, 6.0), rng.uniform(0.3, 1.0)};
  transtext::GrayImage img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0.0;
      for (const auto& b : blobs) {
        const double ex = static_cast<double>(x) - dx - b.cx, ey = static_cast<double>(y) - dy - b.cy;
        v += b.a * std::exp(-(ex * ex + ey * ey) / (2.0 * b.s * b.s));
      }
      img.at(y, x) = std::min(1.0, v);
    }
  }
  return img;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("transtext_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
