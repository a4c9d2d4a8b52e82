#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "transtext/pipeline.hpp"
#include "transtext/sampler.hpp"

using namespace transtext;

namespace {

LatentGrid random_grid(std::uint64_t seed) {
  Rng rng(seed);
  LatentGrid g(2, 3, 2, 4);
  for (double& v : g.data) v = rng.normal();
  return g;
}

double max_abs_diff(const LatentGrid& a, const LatentGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("one step with a constant velocity lands on x0 + c") {
  const LatentGrid x0 = random_grid(1);
  SampleConfig cfg;
  cfg.num_steps = 1;
  cfg.cfg_scale = 1.0;
  const LatentGrid out =
      euler_integrate(x0, [](const LatentGrid& x, double, bool) { return LatentGrid(x.frames, 3, x.height, x.width, 0.25); },
                      cfg);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == x0.data[i] + 0.25);
}

TEST_CASE("the straight-path velocity field reaches its target for any step count") {
  const LatentGrid x1 = random_grid(2);
  for (std::size_t n : {1, 5, 50}) {
    const LatentGrid x0 = random_grid(3);
    SampleConfig cfg;
    cfg.num_steps = n;
    cfg.cfg_scale = 1.0;
    // the exact velocity toward x1 from (x, t) is (x1 - x) / (1 - t)
    const VelocityFn field = [&](const LatentGrid& x, double t, bool) {
      LatentGrid v = x;
      for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = (x1.data[i] - x.data[i]) / (1.0 - t);
      return v;
    };
    CHECK(max_abs_diff(euler_integrate(x0, field, cfg), x1) < 1e-12);
  }
}

TEST_CASE("guidance scale 1 evaluates only the conditional branch") {
  const LatentGrid x0 = random_grid(4);
  SampleConfig cfg;
  cfg.num_steps = 7;
  cfg.cfg_scale = 1.0;
  std::size_t uncond_calls = 0;
  const VelocityFn f = [&](const LatentGrid& x, double t, bool conditional) {
    if (!conditional) ++uncond_calls;
    LatentGrid v = x;
    for (double& e : v.data) e = conditional ? std::sin(e + t) : 100.0;
    return v;
  };
  const VelocityFn cond_only = [](const LatentGrid& x, double t, bool) {
    LatentGrid v = x;
    for (double& e : v.data) e = std::sin(e + t);
    return v;
  };
  CHECK(euler_integrate(x0, f, cfg) == euler_integrate(x0, cond_only, cfg));
  CHECK(uncond_calls == 0);
}

TEST_CASE("guided velocity combines the two branches linearly") {
  const LatentGrid x0 = random_grid(5);
  SampleConfig cfg;
  cfg.num_steps = 1;
  cfg.cfg_scale = 3.0;
  const LatentGrid out = euler_integrate(
      x0,
      [](const LatentGrid& x, double, bool conditional) { return LatentGrid(x.frames, 3, x.height, x.width, conditional ? 1.0 : 0.5); },
      cfg);
  // 0.5 + 3 * (1 - 0.5) = 2
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == doctest::Approx(x0.data[i] + 2.0).epsilon(1e-15));
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  const LayoutMode mode = LayoutMode::WidthWise;
  DenoiserConfig dcfg;
  dcfg.embed_dim = 16;
  dcfg.heads = 2;
  const Denoiser model(dcfg, latent_shape_for(3, 8, 8, mode), mode);
  const ParamStore params = model.init_params(1);
  LatentGrid ref = model.reference_shape();
  for (double& v : ref.data) v = 0.3;
  SampleConfig cfg;
  cfg.num_steps = 4;
  cfg.seed = 17;
  const LatentGrid a = sample_latent(model, params, ref, 1, cfg);
  CHECK(sample_latent(model, params, ref, 1, cfg) == a);
  cfg.seed = 18;
  CHECK(!(sample_latent(model, params, ref, 1, cfg) == a));
  const CompositeClip clip = sample_euler(model, params, ref, 1, cfg);
  CHECK(clip.frames.size() == 3);
  CHECK(clip.frames[0].width == 16);
  CHECK(initial_noise(a, 5) == initial_noise(a, 5));
}

TEST_CASE("invalid sampler settings are rejected") {
  SampleConfig cfg;
  cfg.num_steps = 0;
  CHECK_THROWS(validate(cfg));
}
