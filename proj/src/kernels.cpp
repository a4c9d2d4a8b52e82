#include "transtext/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cassert>
#include <vector>

namespace transtext::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1U << 15;

inline std::size_t clamp_index(long i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
}

}  // namespace

namespace serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] = s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void avg_pool2x2(std::span<const double> src, std::size_t h, std::size_t w, std::span<double> dst) {
  const std::size_t ow = w / 2;
  for (std::size_t y = 0; y < h / 2; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      const double s = src[(2 * y) * w + 2 * x] + src[(2 * y) * w + 2 * x + 1] + src[(2 * y + 1) * w + 2 * x] +
                       src[(2 * y + 1) * w + 2 * x + 1];
      dst[y * ow + x] = 0.25 * s;
    }
  }
}

void separable_filter(std::span<const double> src, std::size_t h, std::size_t w, std::span<const double> kernel,
                      std::span<double> dst) {
  const long r = static_cast<long>(kernel.size() / 2);
  std::vector<double> tmp(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (long t = -r; t <= r; ++t) s += kernel[static_cast<std::size_t>(t + r)] * src[y * w + clamp_index(static_cast<long>(x) + t, w)];
      tmp[y * w + x] = s;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (long t = -r; t <= r; ++t) s += kernel[static_cast<std::size_t>(t + r)] * tmp[clamp_index(static_cast<long>(y) + t, h) * w + x];
      dst[y * w + x] = s;
    }
  }
}

void window_projection(std::span<const double> src, std::size_t h, std::size_t w, std::size_t radius,
                       std::span<const double> proj, std::size_t outputs, std::span<double> out) {
  const long r = static_cast<long>(radius);
  const std::size_t taps = (2 * radius + 1) * (2 * radius + 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < outputs; ++k) {
        double s = 0.0;
        std::size_t t = 0;
        for (long dy = -r; dy <= r; ++dy) {
          for (long dx = -r; dx <= r; ++dx, ++t) {
            s += proj[k * taps + t] *
                 src[clamp_index(static_cast<long>(y) + dy, h) * w + clamp_index(static_cast<long>(x) + dx, w)];
          }
        }
        out[k * h * w + y * w + x] = s;
      }
    }
  }
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
  const double* __restrict pa = a.data();
  const double* __restrict pb = b.data();
  double* __restrict pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = pc + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  assert(a.size() >= m * k && b.size() >= n * k && c.size() >= m * n);
  // Transpose B once so the inner loop streams contiguously.
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  gemm_nn(m, n, k, a, bt, c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  assert(a.size() >= k * m && b.size() >= k * n && c.size() >= m * n);
  const double* __restrict pa = a.data();
  const double* __restrict pb = b.data();
  double* __restrict pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = pc + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[p * m + i];
      const double* brow = pb + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void avg_pool2x2(std::span<const double> src, std::size_t h, std::size_t w, std::span<double> dst) {
  const std::size_t ow = w / 2;
#pragma omp parallel for schedule(static) if (h * w > kParallelWork)
  for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(h / 2); ++yy) {
    const auto y = static_cast<std::size_t>(yy);
    const double* r0 = src.data() + (2 * y) * w;
    const double* r1 = r0 + w;
    for (std::size_t x = 0; x < ow; ++x) {
      dst[y * ow + x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
  }
}

void separable_filter(std::span<const double> src, std::size_t h, std::size_t w, std::span<const double> kernel,
                      std::span<double> dst) {
  const long r = static_cast<long>(kernel.size() / 2);
  std::vector<double> tmp(h * w);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(h); ++yy) {
      const auto y = static_cast<std::size_t>(yy);
      const double* row = src.data() + y * w;
      for (std::size_t x = 0; x < w; ++x) {
        double s = 0.0;
        for (long t = -r; t <= r; ++t) s += kernel[static_cast<std::size_t>(t + r)] * row[clamp_index(static_cast<long>(x) + t, w)];
        tmp[y * w + x] = s;
      }
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(h); ++yy) {
      const auto y = static_cast<std::size_t>(yy);
      for (std::size_t x = 0; x < w; ++x) {
        double s = 0.0;
        for (long t = -r; t <= r; ++t) s += kernel[static_cast<std::size_t>(t + r)] * tmp[clamp_index(static_cast<long>(y) + t, h) * w + x];
        dst[y * w + x] = s;
      }
    }
  }
}

void window_projection(std::span<const double> src, std::size_t h, std::size_t w, std::size_t radius,
                       std::span<const double> proj, std::size_t outputs, std::span<double> out) {
  const long r = static_cast<long>(radius);
  const std::size_t side = 2 * radius + 1;
  const std::size_t taps = side * side;
#pragma omp parallel
  {
    std::vector<double> patch(taps);
#pragma omp for schedule(static)
    for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(h); ++yy) {
      const auto y = static_cast<std::size_t>(yy);
      for (std::size_t x = 0; x < w; ++x) {
        std::size_t t = 0;
        for (long dy = -r; dy <= r; ++dy) {
          const double* row = src.data() + clamp_index(static_cast<long>(y) + dy, h) * w;
          for (long dx = -r; dx <= r; ++dx) patch[t++] = row[clamp_index(static_cast<long>(x) + dx, w)];
        }
        for (std::size_t k = 0; k < outputs; ++k) {
          const double* pk = proj.data() + k * taps;
          double s = 0.0;
          for (std::size_t q = 0; q < taps; ++q) s += pk[q] * patch[q];
          out[k * h * w + y * w + x] = s;
        }
      }
    }
  }
}

}  // namespace parallel

void set_thread_limit(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace transtext::kernels
