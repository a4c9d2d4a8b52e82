#include "transtext/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "transtext/kernels.hpp"

namespace transtext {

void validate(const FlowConfig& cfg) {
  if (!(cfg.pyramid_scale > 0.0 && cfg.pyramid_scale < 1.0)) throw std::invalid_argument("flow.pyramid_scale must lie in (0, 1)");
  if (cfg.pyramid_levels < 1) throw std::invalid_argument("flow.pyramid_levels must be >= 1");
  if (cfg.window < 1 || cfg.window % 2 == 0) throw std::invalid_argument("flow.window must be odd");
  if (cfg.poly_n < 3 || cfg.poly_n % 2 == 0) throw std::invalid_argument("flow.poly_n must be odd and >= 3");
  if (!(cfg.poly_sigma > 0.0)) throw std::invalid_argument("flow.poly_sigma must be positive");
  if (cfg.iterations < 1) throw std::invalid_argument("flow.iterations must be >= 1");
}

namespace {

std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  std::vector<double> k(size);
  const double c = static_cast<double>(size / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Inverts a small dense symmetric positive-definite system by Gauss-Jordan.
template <std::size_t N>
std::array<double, N * N> invert(std::array<double, N * N> m) {
  std::array<double, N * N> inv{};
  for (std::size_t i = 0; i < N; ++i) inv[i * N + i] = 1.0;
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(m[r * N + col]) > std::abs(m[piv * N + col])) piv = r;
    if (std::abs(m[piv * N + col]) < 1e-300) throw std::runtime_error("singular polynomial basis");
    for (std::size_t j = 0; j < N; ++j) {
      std::swap(m[col * N + j], m[piv * N + j]);
      std::swap(inv[col * N + j], inv[piv * N + j]);
    }
    const double d = m[col * N + col];
    for (std::size_t j = 0; j < N; ++j) {
      m[col * N + j] /= d;
      inv[col * N + j] /= d;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == col) continue;
      const double f = m[r * N + col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < N; ++j) {
        m[r * N + j] -= f * m[col * N + j];
        inv[r * N + j] -= f * inv[col * N + j];
      }
    }
  }
  return inv;
}

// P = (B^T W B)^{-1} B^T W, 6 x taps.
std::vector<double> projection_matrix(std::size_t poly_n, double sigma) {
  const long r = static_cast<long>(poly_n / 2);
  const std::size_t taps = poly_n * poly_n;
  std::vector<std::array<double, 6>> basis;
  std::vector<double> weight;
  basis.reserve(taps);
  for (long dy = -r; dy <= r; ++dy) {
    for (long dx = -r; dx <= r; ++dx) {
      const double x = static_cast<double>(dx), y = static_cast<double>(dy);
      basis.push_back({1.0, x, y, x * x, y * y, x * y});
      weight.push_back(std::exp(-(x * x + y * y) / (2.0 * sigma * sigma)));
    }
  }
  std::array<double, 36> gram{};
  for (std::size_t t = 0; t < taps; ++t)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) gram[i * 6 + j] += weight[t] * basis[t][i] * basis[t][j];
  const auto ginv = invert<6>(gram);
  std::vector<double> proj(6 * taps, 0.0);
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t t = 0; t < taps; ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) s += ginv[k * 6 + j] * basis[t][j];
      proj[k * taps + t] = s * weight[t];
    }
  return proj;
}

double sample_bilinear(const double* plane, std::size_t h, std::size_t w, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const auto y0 = static_cast<std::size_t>(y), x0 = static_cast<std::size_t>(x);
  const std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
  const double top = plane[y0 * w + x0] * (1 - fx) + plane[y0 * w + x1] * fx;
  const double bot = plane[y1 * w + x0] * (1 - fx) + plane[y1 * w + x1] * fx;
  return top * (1 - fy) + bot * fy;
}

// Bilinear resize with pixel-centre alignment.
std::vector<double> resize_plane(const double* src, std::size_t sh, std::size_t sw, std::size_t dh, std::size_t dw) {
  std::vector<double> out(dh * dw);
  const double ry = static_cast<double>(sh) / static_cast<double>(dh);
  const double rx = static_cast<double>(sw) / static_cast<double>(dw);
  for (std::size_t y = 0; y < dh; ++y)
    for (std::size_t x = 0; x < dw; ++x)
      out[y * dw + x] = sample_bilinear(src, sh, sw, (static_cast<double>(y) + 0.5) * ry - 0.5,
                                        (static_cast<double>(x) + 0.5) * rx - 0.5);
  return out;
}

GrayImage pyramid_level(const GrayImage& img, double scale) {
  if (scale == 1.0) return img;
  const double sigma = (1.0 / scale - 1.0) * 0.5;
  std::size_t ksize = static_cast<std::size_t>(std::lround(sigma * 5.0)) | 1u;
  GrayImage blurred(img.height, img.width);
  if (ksize >= 3) {
    kernels::separable_filter(img.data, img.height, img.width, gaussian_kernel(ksize, sigma), blurred.data);
  } else {
    blurred = img;
  }
  const auto h = static_cast<std::size_t>(std::lround(static_cast<double>(img.height) * scale));
  const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(img.width) * scale));
  GrayImage out(h, w);
  out.data = resize_plane(blurred.data.data(), img.height, img.width, h, w);
  return out;
}

double border_weight(std::size_t i, std::size_t len) {
  static constexpr std::array<double, 5> kRamp = {0.14, 0.14, 0.4472, 0.4472, 0.4472};
  const std::size_t edge = std::min(i, len - 1 - i);
  return edge < kRamp.size() ? kRamp[edge] : 1.0;
}

// Per-pixel normal equations G d = h (5 planes: g11, g12, g22, h1, h2) of the
// displacement constraint A d = delta_b around the current flow estimate.
void update_matrices(const std::vector<double>& r1, const std::vector<double>& r2, std::size_t h, std::size_t w,
                     const FlowField& flow, std::vector<double>& mats) {
  const std::size_t n = h * w;
  mats.assign(5 * n, 0.0);
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      const double dx = flow.u(y, x), dy = flow.v(y, x);
      const double sy = static_cast<double>(y) + dy, sx = static_cast<double>(x) + dx;
      // coefficient planes: 1 = x, 2 = y, 3 = x^2, 4 = y^2, 5 = xy
      double c2[5];
      const bool inside = sy >= 0.0 && sx >= 0.0 && sy < static_cast<double>(h - 1) && sx < static_cast<double>(w - 1);
      if (inside) {
        for (int k = 0; k < 5; ++k) c2[k] = sample_bilinear(r2.data() + (k + 1) * n, h, w, sy, sx);
      } else {
        // warped outside the second frame: fall back to the first frame's quadratic part only
        c2[0] = r1[1 * n + p];
        c2[1] = r1[2 * n + p];
        c2[2] = r1[3 * n + p];
        c2[3] = r1[4 * n + p];
        c2[4] = r1[5 * n + p];
      }
      // expansions near the frame edge see replicated pixels, so they count less
      const double wgt = border_weight(x, w) * border_weight(y, h);
      const double a11 = 0.5 * (r1[3 * n + p] + c2[2]);
      const double a22 = 0.5 * (r1[4 * n + p] + c2[3]);
      const double a12 = 0.25 * (r1[5 * n + p] + c2[4]);
      const double db1 = inside ? c2[0] - r1[1 * n + p] : -r1[1 * n + p];
      const double db2 = inside ? c2[1] - r1[2 * n + p] : -r1[2 * n + p];
      const double b1 = (-0.5 * db1 + a11 * dx + a12 * dy) * wgt;
      const double b2 = (-0.5 * db2 + a12 * dx + a22 * dy) * wgt;
      const double w11 = a11 * wgt, w12 = a12 * wgt, w22 = a22 * wgt;
      mats[0 * n + p] = w11 * w11 + w12 * w12;
      mats[1 * n + p] = w12 * (w11 + w22);
      mats[2 * n + p] = w12 * w12 + w22 * w22;
      mats[3 * n + p] = w11 * b1 + w12 * b2;
      mats[4 * n + p] = w12 * b1 + w22 * b2;
    }
  }
}

void solve_flow(const std::vector<double>& mats, std::size_t h, std::size_t w, FlowField& flow) {
  const std::size_t n = h * w;
  for (std::size_t p = 0; p < n; ++p) {
    const double g11 = mats[p], g12 = mats[n + p], g22 = mats[2 * n + p];
    const double h1 = mats[3 * n + p], h2 = mats[4 * n + p];
    const double idet = 1.0 / (g11 * g22 - g12 * g12 + 1e-12);
    flow.data[p] = (g22 * h1 - g12 * h2) * idet;
    flow.data[n + p] = (g11 * h2 - g12 * h1) * idet;
  }
}

}  // namespace

std::vector<double> polynomial_expansion(const GrayImage& img, std::size_t poly_n, double poly_sigma) {
  const auto proj = projection_matrix(poly_n, poly_sigma);
  std::vector<double> out(6 * img.height * img.width);
  kernels::window_projection(img.data, img.height, img.width, poly_n / 2, proj, 6, out);
  return out;
}

FlowField farneback_flow(const GrayImage& a, const GrayImage& b, const FlowConfig& cfg) {
  validate(cfg);
  if (a.height != b.height) throw std::invalid_argument("flow frames differ in height");
  if (a.width != b.width) throw std::invalid_argument("flow frames differ in width");
  if (a.height < cfg.poly_n || a.width < cfg.poly_n)
    throw std::invalid_argument("flow frame " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                                " is smaller than poly_n = " + std::to_string(cfg.poly_n));

  std::size_t levels = 1;
  for (double s = cfg.pyramid_scale; levels < cfg.pyramid_levels; s *= cfg.pyramid_scale) {
    const double side = static_cast<double>(std::min(a.height, a.width)) * s;
    if (side < static_cast<double>(std::max(kMinPyramidSide, cfg.poly_n))) break;
    ++levels;
  }

  const auto window = gaussian_kernel(cfg.window, 0.3 * ((static_cast<double>(cfg.window) - 1.0) * 0.5 - 1.0) + 0.8);
  FlowField flow;
  for (std::size_t lv = levels; lv-- > 0;) {
    const double scale = std::pow(cfg.pyramid_scale, static_cast<double>(lv));
    const GrayImage la = pyramid_level(a, scale);
    const GrayImage lb = pyramid_level(b, scale);
    const std::size_t h = la.height, w = la.width, n = h * w;

    if (flow.data.empty()) {
      flow = FlowField(h, w);
    } else {
      FlowField up(h, w);
      const double fy = static_cast<double>(h) / static_cast<double>(flow.height);
      const double fx = static_cast<double>(w) / static_cast<double>(flow.width);
      const auto u = resize_plane(flow.data.data(), flow.height, flow.width, h, w);
      const auto v = resize_plane(flow.data.data() + flow.pixels(), flow.height, flow.width, h, w);
      for (std::size_t p = 0; p < n; ++p) {
        up.data[p] = u[p] * fx;
        up.data[n + p] = v[p] * fy;
      }
      flow = std::move(up);
    }

    const auto r1 = polynomial_expansion(la, cfg.poly_n, cfg.poly_sigma);
    const auto r2 = polynomial_expansion(lb, cfg.poly_n, cfg.poly_sigma);
    std::vector<double> mats, blurred(5 * n);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      update_matrices(r1, r2, h, w, flow, mats);
      for (std::size_t k = 0; k < 5; ++k)
        kernels::separable_filter(std::span<const double>(mats).subspan(k * n, n), h, w, window,
                                  std::span<double>(blurred).subspan(k * n, n));
      solve_flow(blurred, h, w, flow);
    }
  }
  return flow;
}

}  // namespace transtext
