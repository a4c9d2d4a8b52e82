#include "transtext/rgba.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace transtext {

RgbFrame::RgbFrame(std::size_t h, std::size_t w, double fill) : height(h), width(w), data(3 * h * w, fill) {}

AlphaMatte::AlphaMatte(std::size_t h, std::size_t w, double fill) : height(h), width(w), data(h * w, fill) {}

namespace {

void check_dims(const char* op, const char* what, std::size_t h0, std::size_t w0, std::size_t h1, std::size_t w1) {
  if (h0 != h1) {
    throw std::invalid_argument(std::string(op) + ": height mismatch for " + what + " (" + std::to_string(h0) +
                                " vs " + std::to_string(h1) + ")");
  }
  if (w0 != w1) {
    throw std::invalid_argument(std::string(op) + ": width mismatch for " + what + " (" + std::to_string(w0) +
                                " vs " + std::to_string(w1) + ")");
  }
}

}  // namespace

RgbFrame composite_over(const RgbFrame& fg, const AlphaMatte& alpha, const RgbFrame& bg) {
  check_dims("composite_over", "alpha", fg.height, fg.width, alpha.height, alpha.width);
  check_dims("composite_over", "background", fg.height, fg.width, bg.height, bg.width);
  RgbFrame out(fg.height, fg.width);
  const std::size_t n = fg.plane();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = alpha.data[i];
      out.data[c * n + i] = a * fg.data[c * n + i] + (1.0 - a) * bg.data[c * n + i];
    }
  }
  return out;
}

RgbFrame premultiply(const RgbFrame& fg, const AlphaMatte& alpha) {
  check_dims("premultiply", "alpha", fg.height, fg.width, alpha.height, alpha.width);
  RgbFrame out(fg.height, fg.width);
  const std::size_t n = fg.plane();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) out.data[c * n + i] = alpha.data[i] * fg.data[c * n + i];
  }
  return out;
}

std::uint8_t to_byte(double v) {
  const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
  // std::round is half-away-from-zero.
  return static_cast<std::uint8_t>(std::round(scaled));
}

RgbFrame alpha_as_rgb_encode(const AlphaMatte& alpha) {
  RgbFrame out(alpha.height, alpha.width);
  const std::size_t n = out.plane();
  for (std::size_t i = 0; i < n; ++i) {
    const double q = from_byte(to_byte(alpha.data[i]));
    out.data[i] = q;
    out.data[n + i] = q;
    out.data[2 * n + i] = q;
  }
  return out;
}

AlphaMatte alpha_decode(const RgbFrame& frame) {
  AlphaMatte out(frame.height, frame.width);
  const std::size_t n = frame.plane();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = frame.data[i];
    const double g = frame.data[n + i];
    const double b = frame.data[2 * n + i];
    // Exact on gray pixels: (v + v + v) / 3 can round away from v, so short-circuit.
    const double mean = (r == g && g == b) ? r : (r + g + b) / 3.0;
    out.data[i] = std::clamp(mean, 0.0, 1.0);
  }
  return out;
}

RgbFrame quantize8(const RgbFrame& frame) {
  RgbFrame out = frame;
  for (double& v : out.data) v = from_byte(to_byte(v));
  return out;
}

bool is_gray(const RgbFrame& frame) {
  const std::size_t n = frame.plane();
  for (std::size_t i = 0; i < n; ++i) {
    if (frame.data[i] != frame.data[n + i] || frame.data[i] != frame.data[2 * n + i]) return false;
  }
  return true;
}

bool in_unit_range(const RgbFrame& frame) {
  return std::all_of(frame.data.begin(), frame.data.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

bool in_unit_range(const AlphaMatte& alpha) {
  return std::all_of(alpha.data.begin(), alpha.data.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

void validate(const RgbaClip& clip) {
  if (clip.frames.empty()) throw std::invalid_argument("RgbaClip: needs at least one frame");
  const std::size_t h = clip.height();
  const std::size_t w = clip.width();
  if (h == 0 || w == 0) throw std::invalid_argument("RgbaClip: empty frame dimensions");
  for (const auto& f : clip.frames) {
    check_dims("RgbaClip", "alpha", h, w, f.alpha.height, f.alpha.width);
    check_dims("RgbaClip", "foreground", h, w, f.foreground.height, f.foreground.width);
    if (!in_unit_range(f.alpha) || !in_unit_range(f.foreground)) {
      throw std::invalid_argument("RgbaClip: values outside [0, 1]");
    }
  }
}

Clip premultiplied_clip(const RgbaClip& clip) {
  Clip out;
  out.reserve(clip.size());
  for (const auto& f : clip.frames) out.push_back(premultiply(f.foreground, f.alpha));
  return out;
}

Clip alpha_rgb_clip(const RgbaClip& clip) {
  Clip out;
  out.reserve(clip.size());
  for (const auto& f : clip.frames) out.push_back(alpha_as_rgb_encode(f.alpha));
  return out;
}

MatteClip alpha_clip(const RgbaClip& clip) {
  MatteClip out;
  out.reserve(clip.size());
  for (const auto& f : clip.frames) out.push_back(f.alpha);
  return out;
}

MatteClip decode_alpha_clip(const Clip& gray) {
  MatteClip out;
  out.reserve(gray.size());
  for (const auto& f : gray) out.push_back(alpha_decode(f));
  return out;
}

}  // namespace transtext
