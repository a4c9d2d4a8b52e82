#pragma once

#include <cstddef>
#include <vector>

namespace transtext {

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}
  double& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

/// Per-pixel displacement (u along x, v along y) in pixels, planes [u | v].
struct FlowField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FlowField() = default;
  FlowField(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(2 * h * w, fill) {}
  double& u(std::size_t y, std::size_t x) { return data[y * width + x]; }
  double& v(std::size_t y, std::size_t x) { return data[(height + y) * width + x]; }
  double u(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  double v(std::size_t y, std::size_t x) const { return data[(height + y) * width + x]; }
  std::size_t pixels() const { return height * width; }
  bool operator==(const FlowField&) const = default;
};

struct FlowConfig {
  std::size_t pyramid_levels = 3;
  double pyramid_scale = 0.5;
  std::size_t window = 15;
  std::size_t iterations = 3;
  std::size_t poly_n = 5;
  double poly_sigma = 1.1;
};

void validate(const FlowConfig& cfg);

/// Pyramid levels whose shorter side falls below this are dropped.
inline constexpr std::size_t kMinPyramidSide = 16;

/// Dense flow from `a` to `b`: b(p + flow(p)) ~ a(p).
FlowField farneback_flow(const GrayImage& a, const GrayImage& b, const FlowConfig& cfg);

/// Quadratic expansion coefficients (1, x, y, x^2, y^2, xy) per pixel from a
/// Gaussian-weighted least-squares fit over a poly_n x poly_n window.
/// Returns 6 planes of height*width values.
std::vector<double> polynomial_expansion(const GrayImage& img, std::size_t poly_n, double poly_sigma);

}  // namespace transtext
