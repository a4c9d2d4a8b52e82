#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the plain
// reference kept for testing, `parallel` is the OpenMP version used by the
// library. Parallel kernels partition work over independent output rows, so
// their results never depend on the thread count.

#include <cstddef>
#include <span>

namespace transtext::kernels {

/// Row-major matrix products. `accumulate` adds into C instead of overwriting.
///   nn: C[m,n] = A[m,k] * B[k,n]
///   nt: C[m,n] = A[m,k] * B[n,k]^T
///   tn: C[m,n] = A[k,m]^T * B[k,n]
namespace serial {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void avg_pool2x2(std::span<const double> src, std::size_t h, std::size_t w, std::span<double> dst);
/// 1-D kernel of odd length applied along rows then columns, edges replicated.
void separable_filter(std::span<const double> src, std::size_t h, std::size_t w, std::span<const double> kernel,
                      std::span<double> dst);
/// out[k][y][x] = sum_t proj[k][t] * src(clamp(y + dy_t), clamp(x + dx_t)) over a
/// (2r+1)^2 window in row-major tap order; `outputs` planes are written.
void window_projection(std::span<const double> src, std::size_t h, std::size_t w, std::size_t radius,
                       std::span<const double> proj, std::size_t outputs, std::span<double> out);
}  // namespace serial

namespace parallel {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void avg_pool2x2(std::span<const double> src, std::size_t h, std::size_t w, std::span<double> dst);
void separable_filter(std::span<const double> src, std::size_t h, std::size_t w, std::span<const double> kernel,
                      std::span<double> dst);
void window_projection(std::span<const double> src, std::size_t h, std::size_t w, std::size_t radius,
                       std::span<const double> proj, std::size_t outputs, std::span<double> out);
}  // namespace parallel

using parallel::avg_pool2x2;
using parallel::gemm_nn;
using parallel::gemm_nt;
using parallel::gemm_tn;
using parallel::separable_filter;
using parallel::window_projection;

/// Caps OpenMP worker threads (0 leaves the runtime default).
void set_thread_limit(int threads);

}  // namespace transtext::kernels
