#include "transtext/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "transtext/glyph.hpp"
#include "transtext/pipeline.hpp"
#include "transtext/rng.hpp"

namespace transtext {

GradCheckResult grad_check(const LossAndGrad& fn, std::span<const double> theta, std::size_t num_params,
                           std::uint64_t seed, double step) {
  if (num_params == 0) throw std::invalid_argument("grad_check: need at least one parameter");
  if (theta.empty()) throw std::invalid_argument("grad_check: empty parameter vector");
  std::vector<double> analytic;
  fn(theta, &analytic);
  if (analytic.size() != theta.size()) throw std::logic_error("grad_check: gradient size mismatch");

  Rng rng = Rng::derive(seed, 0x6c);
  std::vector<double> probe(theta.begin(), theta.end());
  GradCheckResult result;
  for (std::size_t k = 0; k < num_params; ++k) {
    const std::size_t idx = rng.below(probe.size());
    const double orig = probe[idx];
    probe[idx] = orig + step;
    const long double up = fn(probe, nullptr);
    probe[idx] = orig - step;
    const long double down = fn(probe, nullptr);
    probe[idx] = orig;

    const double fd = static_cast<double>((up - down) / (2.0L * step));
    const double ga = analytic[idx];
    const double rel = std::abs(ga - fd) / std::max({std::abs(ga), std::abs(fd), 1e-8});
    if (k == 0 || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = idx;
    }
    ++result.checked;
  }
  return result;
}

GradCheckResult grad_check(const Denoiser& model, const ParamStore& params,
                           std::span<const TrainingExample* const> batch, std::span<const SampleDraw> draws,
                           double lambda_rec, std::size_t num_params, std::uint64_t seed, double step) {
  ParamStore scratch = params;
  const LossAndGrad fn = [&](std::span<const double> theta, std::vector<double>* grad) {
    std::copy(theta.begin(), theta.end(), scratch.data().begin());
    return batch_loss_and_grad(model, scratch, batch, draws, lambda_rec, grad).total_ext;
  };
  return grad_check(fn, params.data(), num_params, seed, step);
}

GradCheckResult grad_check_default(const DenoiserConfig& cfg, LayoutMode layout, double lambda_rec,
                                   std::size_t num_params, std::uint64_t seed) {
  ClipSpec spec;
  spec.glyph.text = "A";
  spec.glyph.color = {0.9, 0.5, 0.2};
  spec.effect = EffectKind::LettersCollect;
  spec.frames = 3;
  spec.height = 8;
  spec.width = 8;
  spec.seed = seed;
  const RgbaClip clip = render_effect(spec);

  ExampleOptions opts;
  opts.layout = layout;
  const TrainingExample ex = example_from_clip(clip, static_cast<int>(spec.effect), opts);
  const Denoiser model(cfg, latent_shape_for(spec.frames, spec.height, spec.width, layout), layout);
  // At initialisation attention logits are almost flat and many gradients are
  // ~1e-10, below what a 1e-5 central difference can resolve. Jitter to a
  // generic point so every path carries a measurable gradient.
  ParamStore params = model.init_params(seed);
  Rng jitter = Rng::derive(seed, 0x6a);
  for (double& v : params.data()) v += kGradCheckJitter * jitter.normal();

  const TrainingExample* raw[2] = {&ex, &ex};
  std::span<const TrainingExample* const> batch(raw, 2);
  auto draws = draw_samples(batch, 0.0, seed, 0);
  draws[0].t = 0.37;
  draws[1].t = 0.81;
  draws[1].drop_condition = true;
  return grad_check(model, params, batch, draws, lambda_rec, num_params, seed);
}

std::string describe_param(const ParamStore& params, std::size_t index) {
  for (const auto& e : params.entries()) {
    if (index >= e.offset && index < e.offset + e.size) return e.name + "[" + std::to_string(index - e.offset) + "]";
  }
  return "?";
}

}  // namespace transtext
