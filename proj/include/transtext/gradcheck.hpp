#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "transtext/denoiser.hpp"
#include "transtext/train.hpp"

namespace transtext {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

/// Scalar loss at `theta`; fills `grad` when it is non-null.
using LossAndGrad = std::function<long double(std::span<const double> theta, std::vector<double>* grad)>;

/// Compares the analytic gradient against central finite differences on
/// `num_params` randomly chosen coordinates. Relative error is
/// |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8).
GradCheckResult grad_check(const LossAndGrad& fn, std::span<const double> theta, std::size_t num_params,
                           std::uint64_t seed, double step = 1e-5);

/// Same check on the batch total loss of a denoiser.
GradCheckResult grad_check(const Denoiser& model, const ParamStore& params,
                           std::span<const TrainingExample* const> batch, std::span<const SampleDraw> draws,
                           double lambda_rec, std::size_t num_params, std::uint64_t seed, double step = 1e-5);

/// Standard deviation of the Gaussian jitter added to freshly initialised
/// parameters before `grad_check_default` probes them.
inline constexpr double kGradCheckJitter = 0.2;

/// Gradient check of `cfg` on a tiny rendered glyph clip (3 frames, 8x8 px)
/// with one conditioned and one null-conditioned sample.
GradCheckResult grad_check_default(const DenoiserConfig& cfg, LayoutMode layout, double lambda_rec,
                                   std::size_t num_params, std::uint64_t seed);

/// Name and element offset of flat parameter `index`, e.g. "blocks.0.attn.q[17]".
std::string describe_param(const ParamStore& params, std::size_t index);

}  // namespace transtext
