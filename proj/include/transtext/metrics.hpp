#pragma once

#include <span>

#include "transtext/flow.hpp"
#include "transtext/rgba.hpp"

namespace transtext {

/// Threshold (pixels) on both flow magnitudes for the direction term.
inline constexpr double kDefaultValidTau = 0.1;

struct FlowPairMetrics {
  double epe = 0.0;
  double angle_deg = 0.0;
  double mag_corr = 1.0;
  double dir_cos = 1.0;
};

struct AlignmentReport {
  double epe = 0.0;
  double angle_deg = 0.0;
  double mag_corr = 1.0;
  double dir_cos = 1.0;
  double s_epe = 1.0;
  double s_angle = 1.0;
  double s_mag = 1.0;
  double s_dir = 1.0;
  double final_score = 100.0;
};

FlowPairMetrics flow_pair_metrics(const FlowField& f1, const FlowField& f2, double tau);

/// Pearson correlation; 1 when both inputs are constant, 0 when exactly one is.
double pearson(std::span<const double> x, std::span<const double> y);

/// Maps averaged raw errors onto the four sub-scores and the 0-100 total.
AlignmentReport normalize_alignment(const FlowPairMetrics& raw);

/// Unweighted channel mean.
GrayImage to_gray(const RgbFrame& frame);

/// Flow of each consecutive pair in both clips, raw metrics averaged over the
/// pairs, then normalised.
AlignmentReport alignment_score(const Clip& rgb, const Clip& alpha, const FlowConfig& cfg, double tau);

/// 100 * mean over frames of sum(min) / sum(max); a frame where both sums are 0 counts as 1.
double soft_alpha_miou(const MatteClip& pred, const MatteClip& gt);

}  // namespace transtext
