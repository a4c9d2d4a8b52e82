#include "transtext/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "transtext/rng.hpp"

namespace transtext {

void validate(const SampleConfig& cfg) {
  if (cfg.num_steps == 0) throw std::invalid_argument("SampleConfig: num_steps must be >= 1");
  if (!std::isfinite(cfg.cfg_scale)) throw std::invalid_argument("SampleConfig: cfg_scale must be finite");
}

LatentGrid initial_noise(const LatentGrid& shape, std::uint64_t seed) {
  LatentGrid x(shape.frames, shape.channels, shape.height, shape.width);
  Rng rng = Rng::derive(seed, 0x7000);
  for (double& v : x.data) v = rng.normal();
  return x;
}

LatentGrid euler_integrate(LatentGrid x, const VelocityFn& velocity, const SampleConfig& cfg) {
  validate(cfg);
  const double n = static_cast<double>(cfg.num_steps);
  const double dt = 1.0 / n;
  for (std::size_t k = 0; k < cfg.num_steps; ++k) {
    const double t = static_cast<double>(k) / n;
    LatentGrid v = velocity(x, t, true);
    if (!v.same_shape(x)) throw std::invalid_argument("euler_integrate: velocity shape mismatch");
    if (cfg.cfg_scale != 1.0) {
      const LatentGrid vu = velocity(x, t, false);
      if (!vu.same_shape(x)) throw std::invalid_argument("euler_integrate: velocity shape mismatch");
      for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = vu.data[i] + cfg.cfg_scale * (v.data[i] - vu.data[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += dt * v.data[i];
  }
  return x;
}

LatentGrid sample_latent(const Denoiser& model, const ParamStore& params, const LatentGrid& reference, int effect,
                         const SampleConfig& cfg) {
  validate(cfg);
  if (effect < 0) throw std::invalid_argument("sample_euler: effect id must be >= 0");
  const auto& s = model.shape();
  const LatentGrid shape(s.frames, 3, s.height, s.width);
  Condition cond;
  cond.effect = effect;
  cond.reference = reference;
  const Condition null = Condition::null();
  VelocityFn velocity = [&](const LatentGrid& x, double t, bool conditional) {
    return model.forward(params, x, t, conditional ? cond : null);
  };
  return euler_integrate(initial_noise(shape, cfg.seed), velocity, cfg);
}

CompositeClip sample_euler(const Denoiser& model, const ParamStore& params, const LatentGrid& reference, int effect,
                           const SampleConfig& cfg) {
  return decode_latent(sample_latent(model, params, reference, effect, cfg), model.layout());
}

}  // namespace transtext
