#include "transtext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace transtext {

namespace {

void check_same(const FlowField& a, const FlowField& b) {
  if (a.height != b.height) throw std::invalid_argument("flow fields differ in height");
  if (a.width != b.width) throw std::invalid_argument("flow fields differ in width");
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("pearson: mismatched or empty inputs");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const bool cx = sxx / n < 1e-12, cy = syy / n < 1e-12;
  if (cx && cy) return 1.0;
  if (cx || cy) return 0.0;
  if (sxx == syy && sxy == sxx) return 1.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

FlowPairMetrics flow_pair_metrics(const FlowField& f1, const FlowField& f2, double tau) {
  check_same(f1, f2);
  if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
  const std::size_t n = f1.pixels();
  std::vector<double> m1(n), m2(n);
  double epe = 0.0, angle = 0.0, cos_sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const double u1 = f1.data[p], v1 = f1.data[n + p];
    const double u2 = f2.data[p], v2 = f2.data[n + p];
    epe += std::hypot(u1 - u2, v1 - v2);

    // angle between (u1, v1, 1) and (u2, v2, 1) via atan2(|a x b|, a . b)
    const double cx = v1 - v2, cy = u2 - u1, cz = u1 * v2 - v1 * u2;
    const double dot = u1 * u2 + v1 * v2 + 1.0;
    angle += std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot) * 180.0 / std::numbers::pi;

    m1[p] = std::hypot(u1, v1);
    m2[p] = std::hypot(u2, v2);
    if (m1[p] > tau && m2[p] > tau) {
      const double c = (u1 * u2 + v1 * v2) / (m1[p] * m2[p]);
      cos_sum += (u1 == u2 && v1 == v2) ? 1.0 : std::clamp(c, -1.0, 1.0);
      ++valid;
    }
  }
  FlowPairMetrics out;
  out.epe = epe / static_cast<double>(n);
  out.angle_deg = angle / static_cast<double>(n);
  out.mag_corr = pearson(m1, m2);
  out.dir_cos = valid == 0 ? 1.0 : cos_sum / static_cast<double>(valid);
  return out;
}

AlignmentReport normalize_alignment(const FlowPairMetrics& raw) {
  AlignmentReport r;
  r.epe = raw.epe;
  r.angle_deg = raw.angle_deg;
  r.mag_corr = raw.mag_corr;
  r.dir_cos = raw.dir_cos;
  r.s_epe = std::exp(-raw.epe / 10.0);
  r.s_angle = std::exp(-raw.angle_deg / 45.0);
  r.s_mag = (raw.mag_corr + 1.0) / 2.0;
  r.s_dir = (raw.dir_cos + 1.0) / 2.0;
  r.final_score = 100.0 * 0.25 * (r.s_epe + r.s_angle + r.s_mag + r.s_dir);
  return r;
}

GrayImage to_gray(const RgbFrame& frame) {
  GrayImage g(frame.height, frame.width);
  for (std::size_t y = 0; y < frame.height; ++y) {
    for (std::size_t x = 0; x < frame.width; ++x) {
      const double r = frame.at(0, y, x), gr = frame.at(1, y, x), b = frame.at(2, y, x);
      g.at(y, x) = (r == gr && gr == b) ? r : (r + gr + b) / 3.0;
    }
  }
  return g;
}

AlignmentReport alignment_score(const Clip& rgb, const Clip& alpha, const FlowConfig& cfg, double tau) {
  if (rgb.size() != alpha.size()) throw std::invalid_argument("rgb and alpha clips differ in frame count");
  if (rgb.size() < 2) throw std::invalid_argument("alignment score needs at least 2 frames, got " + std::to_string(rgb.size()));
  validate(cfg);
  const std::size_t pairs = rgb.size() - 1;
  std::vector<FlowPairMetrics> per(pairs);
  // pairs are independent; each result lands in its own slot
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pairs; ++i) {
    const FlowField fr = farneback_flow(to_gray(rgb[i]), to_gray(rgb[i + 1]), cfg);
    const FlowField fa = farneback_flow(to_gray(alpha[i]), to_gray(alpha[i + 1]), cfg);
    per[i] = flow_pair_metrics(fr, fa, tau);
  }
  FlowPairMetrics mean{0.0, 0.0, 0.0, 0.0};
  for (const auto& m : per) {
    mean.epe += m.epe;
    mean.angle_deg += m.angle_deg;
    mean.mag_corr += m.mag_corr;
    mean.dir_cos += m.dir_cos;
  }
  const double k = static_cast<double>(pairs);
  mean.epe /= k;
  mean.angle_deg /= k;
  mean.mag_corr /= k;
  mean.dir_cos /= k;
  return normalize_alignment(mean);
}

double soft_alpha_miou(const MatteClip& pred, const MatteClip& gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("soft_alpha_miou: frame counts differ");
  if (pred.empty()) throw std::invalid_argument("soft_alpha_miou: empty clips");
  double total = 0.0;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    if (pred[f].height != gt[f].height) throw std::invalid_argument("soft_alpha_miou: frame heights differ");
    if (pred[f].width != gt[f].width) throw std::invalid_argument("soft_alpha_miou: frame widths differ");
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < pred[f].data.size(); ++i) {
      inter += std::min(pred[f].data[i], gt[f].data[i]);
      uni += std::max(pred[f].data[i], gt[f].data[i]);
    }
    total += (uni == 0.0) ? 1.0 : inter / uni;
  }
  return 100.0 * total / static_cast<double>(pred.size());
}

}  // namespace transtext
