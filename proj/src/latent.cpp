#include "transtext/latent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "transtext/kernels.hpp"

namespace transtext {

LatentGrid encode_frames(const Clip& frames) {
  if (frames.empty()) throw std::invalid_argument("encode_latent: empty clip");
  const std::size_t h = frames.front().height;
  const std::size_t w = frames.front().width;
  if (h % kPoolFactor != 0 || w % kPoolFactor != 0) {
    throw std::invalid_argument("encode_latent: frame size " + std::to_string(h) + "x" + std::to_string(w) +
                                " not divisible by pool factor " + std::to_string(kPoolFactor));
  }
  LatentGrid out(frames.size(), 3, h / kPoolFactor, w / kPoolFactor);
  const std::size_t plane_in = h * w;
  const std::size_t plane_out = out.height * out.width;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].height != h || frames[f].width != w) {
      throw std::invalid_argument("encode_latent: frame " + std::to_string(f) + " has a different size");
    }
    for (std::size_t c = 0; c < 3; ++c) {
      kernels::avg_pool2x2(std::span(frames[f].data).subspan(c * plane_in, plane_in), h, w,
                           std::span(out.data).subspan(out.index(f, c, 0, 0), plane_out));
    }
  }
  return out;
}

LatentGrid encode_latent(const CompositeClip& comp) { return encode_frames(comp.frames); }

LatentGrid encode_frame(const RgbFrame& frame) { return encode_frames(Clip{frame}); }

Clip decode_frames(const LatentGrid& latent) {
  if (latent.channels != 3) throw std::invalid_argument("decode_latent: expected 3 channels");
  Clip out;
  out.reserve(latent.frames);
  for (std::size_t f = 0; f < latent.frames; ++f) {
    RgbFrame frame(latent.height * kPoolFactor, latent.width * kPoolFactor);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < frame.height; ++y) {
        for (std::size_t x = 0; x < frame.width; ++x) {
          frame.at(c, y, x) = std::clamp(latent.at(f, c, y / kPoolFactor, x / kPoolFactor), 0.0, 1.0);
        }
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

CompositeClip decode_latent(const LatentGrid& latent, LayoutMode layout) {
  CompositeClip out;
  out.frames = decode_frames(latent);
  out.layout = layout;
  switch (layout) {
    case LayoutMode::WidthWise: out.boundary = latent.width * kPoolFactor / 2; break;
    case LayoutMode::HeightWise: out.boundary = latent.height * kPoolFactor / 2; break;
    case LayoutMode::TemporalWise: out.boundary = latent.frames / 2; break;
  }
  return out;
}

LatentGrid interpolate_path(const LatentGrid& x0, const LatentGrid& x1, double t) {
  if (!x0.same_shape(x1)) throw std::invalid_argument("interpolate_path: shape mismatch");
  LatentGrid out = x0;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = t * x1.data[i] + (1.0 - t) * x0.data[i];
  return out;
}

LatentGrid velocity_target(const LatentGrid& x0, const LatentGrid& x1) {
  if (!x0.same_shape(x1)) throw std::invalid_argument("velocity_target: shape mismatch");
  LatentGrid out = x0;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = x1.data[i] - x0.data[i];
  return out;
}

bool in_alpha_half(LayoutMode layout, const LatentGrid& shape, std::size_t f, std::size_t y, std::size_t x) {
  switch (layout) {
    case LayoutMode::WidthWise: return x >= shape.width / 2;
    case LayoutMode::HeightWise: return y >= shape.height / 2;
    case LayoutMode::TemporalWise: return f >= shape.frames / 2;
  }
  return false;
}

std::vector<std::uint8_t> alpha_half_mask(const LatentGrid& shape, LayoutMode layout) {
  std::vector<std::uint8_t> mask(shape.size(), 0);
  for (std::size_t f = 0; f < shape.frames; ++f) {
    for (std::size_t c = 0; c < shape.channels; ++c) {
      for (std::size_t y = 0; y < shape.height; ++y) {
        for (std::size_t x = 0; x < shape.width; ++x) {
          mask[shape.index(f, c, y, x)] = in_alpha_half(layout, shape, f, y, x) ? 1 : 0;
        }
      }
    }
  }
  return mask;
}

void check_finite(const LatentGrid& grid, const char* what) {
  for (double v : grid.data) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite value");
  }
}

}  // namespace transtext
