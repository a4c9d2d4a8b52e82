#pragma once

#include <cstdint>
#include <functional>

#include "transtext/denoiser.hpp"
#include "transtext/latent.hpp"
#include "transtext/layout.hpp"

namespace transtext {

struct SampleConfig {
  std::size_t num_steps = 50;
  double cfg_scale = 5.0;
  std::uint64_t seed = 0;
};

void validate(const SampleConfig& cfg);

/// Velocity at (x, t); `conditional` selects the conditioned or null branch.
using VelocityFn = std::function<LatentGrid(const LatentGrid& x, double t, bool conditional)>;

/// Seeded standard-normal starting point.
LatentGrid initial_noise(const LatentGrid& shape, std::uint64_t seed);

/// Euler integration from x0 over t_k = k / N with guided velocity
/// v = v_uncond + s (v_cond - v_uncond). With s == 1 only the conditional
/// branch is evaluated.
LatentGrid euler_integrate(LatentGrid x0, const VelocityFn& velocity, const SampleConfig& cfg);

/// Full sampler: noise from cfg.seed, guided Euler with the trained model, decode.
CompositeClip sample_euler(const Denoiser& model, const ParamStore& params, const LatentGrid& reference, int effect,
                           const SampleConfig& cfg);

/// Latent-space result of `sample_euler` before decoding.
LatentGrid sample_latent(const Denoiser& model, const ParamStore& params, const LatentGrid& reference, int effect,
                         const SampleConfig& cfg);

}  // namespace transtext
