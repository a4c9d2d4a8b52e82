#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

#include "transtext/rgba.hpp"

namespace transtext {

enum class LayoutMode { WidthWise, HeightWise, TemporalWise };

std::string to_string(LayoutMode mode);
LayoutMode parse_layout(std::string_view name);

/// Joint RGB + alpha clip as the generator sees it. RGB always occupies the
/// left / top / first half; `boundary` is the column, row or frame index where
/// the alpha half starts.
struct CompositeClip {
  Clip frames;
  LayoutMode layout = LayoutMode::WidthWise;
  std::size_t boundary = 0;
};

/// Which single image stands in for the reference under temporal concatenation.
enum class TemporalReference { Rgb, Trimap };

/// What fills the alpha half of a spatial reference: the binarised trimap or a
/// plain copy of the RGB reference.
enum class ReferenceStyle { Trimap, Duplicate };

struct ReferenceImage {
  RgbFrame rgb;
  RgbFrame trimap;
  RgbFrame composed;
};

/// Default binarisation threshold at 8-bit scale.
inline constexpr int kDefaultTrimapBeta = 5;

/// White where the pixel's maximum 8-bit channel is >= beta, black elsewhere.
RgbFrame make_trimap(const RgbFrame& ref, int beta);

/// Places two equally sized frames side by side (width) or stacked (height).
RgbFrame join_frames(const RgbFrame& first, const RgbFrame& second, LayoutMode mode);

CompositeClip concat_joint(const Clip& rgb, const Clip& alpha_rgb, LayoutMode mode);
std::pair<Clip, Clip> split_joint(const CompositeClip& comp, LayoutMode mode);

ReferenceImage compose_reference(const RgbFrame& ref, int beta, LayoutMode mode,
                                 TemporalReference temporal_choice = TemporalReference::Rgb,
                                 ReferenceStyle style = ReferenceStyle::Trimap);

}  // namespace transtext
