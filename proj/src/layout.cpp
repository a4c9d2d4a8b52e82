#include "transtext/layout.hpp"

#include <algorithm>
#include <stdexcept>

namespace transtext {

std::string to_string(LayoutMode mode) {
  switch (mode) {
    case LayoutMode::WidthWise: return "width";
    case LayoutMode::HeightWise: return "height";
    case LayoutMode::TemporalWise: return "temporal";
  }
  return "?";
}

LayoutMode parse_layout(std::string_view name) {
  if (name == "width" || name == "w") return LayoutMode::WidthWise;
  if (name == "height" || name == "h") return LayoutMode::HeightWise;
  if (name == "temporal" || name == "t") return LayoutMode::TemporalWise;
  throw std::invalid_argument("unknown layout '" + std::string(name) + "' (expected width, height or temporal)");
}

RgbFrame make_trimap(const RgbFrame& ref, int beta) {
  if (beta < 0 || beta > 255) throw std::invalid_argument("make_trimap: beta must lie in [0, 255]");
  RgbFrame out(ref.height, ref.width);
  const std::size_t n = ref.plane();
  for (std::size_t i = 0; i < n; ++i) {
    const int peak = std::max({to_byte(ref.data[i]), to_byte(ref.data[n + i]), to_byte(ref.data[2 * n + i])});
    const double v = peak < beta ? 0.0 : 1.0;
    out.data[i] = v;
    out.data[n + i] = v;
    out.data[2 * n + i] = v;
  }
  return out;
}

RgbFrame join_frames(const RgbFrame& first, const RgbFrame& second, LayoutMode mode) {
  if (first.height != second.height || first.width != second.width) {
    throw std::invalid_argument("join_frames: halves differ in size");
  }
  const std::size_t h = first.height;
  const std::size_t w = first.width;
  if (mode == LayoutMode::WidthWise) {
    RgbFrame out(h, 2 * w);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          out.at(c, y, x) = first.at(c, y, x);
          out.at(c, y, w + x) = second.at(c, y, x);
        }
      }
    }
    return out;
  }
  if (mode == LayoutMode::HeightWise) {
    RgbFrame out(2 * h, w);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          out.at(c, y, x) = first.at(c, y, x);
          out.at(c, h + y, x) = second.at(c, y, x);
        }
      }
    }
    return out;
  }
  throw std::invalid_argument("join_frames: temporal layout has no spatial join");
}

namespace {

RgbFrame crop(const RgbFrame& src, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  RgbFrame out(h, w);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = src.at(c, y0 + y, x0 + x);
    }
  }
  return out;
}

}  // namespace

CompositeClip concat_joint(const Clip& rgb, const Clip& alpha_rgb, LayoutMode mode) {
  if (rgb.empty()) throw std::invalid_argument("concat_joint: empty clip");
  if (rgb.size() != alpha_rgb.size()) {
    throw std::invalid_argument("concat_joint: frame count mismatch (" + std::to_string(rgb.size()) + " vs " +
                                std::to_string(alpha_rgb.size()) + ")");
  }
  const std::size_t h = rgb.front().height;
  const std::size_t w = rgb.front().width;
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    if (rgb[i].height != h || rgb[i].width != w || alpha_rgb[i].height != h || alpha_rgb[i].width != w) {
      throw std::invalid_argument("concat_joint: frame " + std::to_string(i) + " has mismatched dimensions");
    }
  }

  CompositeClip out;
  out.layout = mode;
  if (mode == LayoutMode::TemporalWise) {
    out.frames = rgb;
    out.frames.insert(out.frames.end(), alpha_rgb.begin(), alpha_rgb.end());
    out.boundary = rgb.size();
    return out;
  }
  out.boundary = mode == LayoutMode::WidthWise ? w : h;
  out.frames.reserve(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) out.frames.push_back(join_frames(rgb[i], alpha_rgb[i], mode));
  return out;
}

std::pair<Clip, Clip> split_joint(const CompositeClip& comp, LayoutMode mode) {
  if (comp.layout != mode) throw std::invalid_argument("split_joint: composite was built with a different layout");
  if (comp.frames.empty()) throw std::invalid_argument("split_joint: empty composite");
  Clip rgb;
  Clip alpha;
  if (mode == LayoutMode::TemporalWise) {
    if (comp.boundary == 0 || 2 * comp.boundary != comp.frames.size()) {
      throw std::invalid_argument("split_joint: temporal boundary inconsistent with frame count");
    }
    rgb.assign(comp.frames.begin(), comp.frames.begin() + static_cast<std::ptrdiff_t>(comp.boundary));
    alpha.assign(comp.frames.begin() + static_cast<std::ptrdiff_t>(comp.boundary), comp.frames.end());
    return {std::move(rgb), std::move(alpha)};
  }
  for (const auto& f : comp.frames) {
    const std::size_t extent = mode == LayoutMode::WidthWise ? f.width : f.height;
    if (comp.boundary == 0 || 2 * comp.boundary != extent) {
      throw std::invalid_argument("split_joint: spatial boundary inconsistent with frame size");
    }
    if (mode == LayoutMode::WidthWise) {
      rgb.push_back(crop(f, 0, 0, f.height, comp.boundary));
      alpha.push_back(crop(f, 0, comp.boundary, f.height, comp.boundary));
    } else {
      rgb.push_back(crop(f, 0, 0, comp.boundary, f.width));
      alpha.push_back(crop(f, comp.boundary, 0, comp.boundary, f.width));
    }
  }
  return {std::move(rgb), std::move(alpha)};
}

ReferenceImage compose_reference(const RgbFrame& ref, int beta, LayoutMode mode, TemporalReference temporal_choice,
                                 ReferenceStyle style) {
  ReferenceImage out;
  out.rgb = ref;
  out.trimap = make_trimap(ref, beta);
  if (mode == LayoutMode::TemporalWise) {
    out.composed = temporal_choice == TemporalReference::Rgb ? out.rgb : out.trimap;
  } else {
    out.composed = join_frames(out.rgb, style == ReferenceStyle::Trimap ? out.trimap : out.rgb, mode);
  }
  return out;
}

}  // namespace transtext
