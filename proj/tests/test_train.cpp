#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "transtext/gradcheck.hpp"
#include "transtext/pipeline.hpp"
#include "transtext/train.hpp"

using namespace transtext;

namespace {

std::vector<TrainingExample> tiny_examples(LayoutMode mode, std::size_t n) {
  ExampleOptions opts;
  opts.layout = mode;
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    ClipSpec spec;
    spec.glyph.text = i % 2 ? "B" : "A";
    spec.frames = 3;
    spec.height = 8;
    spec.width = 8;
    spec.effect = static_cast<EffectKind>(i % 4);
    spec.seed = i;
    out.push_back(example_from_clip(render_effect(spec), static_cast<int>(i % 4), opts));
  }
  return out;
}

DenoiserConfig tiny_model() {
  DenoiserConfig cfg;
  cfg.embed_dim = 16;
  cfg.heads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("cosine schedule endpoints") {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.steps = 100;
  CHECK(cosine_lr(cfg, 0) == doctest::Approx(0.01));
  CHECK(cosine_lr(cfg, 50) == doctest::Approx(0.005));
  CHECK(cosine_lr(cfg, 100) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_lr(cfg, 25) > cosine_lr(cfg, 26));
}

TEST_CASE("adamw first step moves each coordinate by lr against the gradient sign") {
  ParamStore p;
  p.add("w", {2, 2}, 1.0);
  p.add("b", {2}, 1.0);
  AdamWState st = make_adamw_state(p);
  const std::vector<double> g = {0.5, -2.0, 3.0, -1e-3, 4.0, -4.0};
  adamw_update(p, g, st, 0.1, 0.0);
  // bias-corrected first step: m_hat / sqrt(v_hat) = sign(g) up to eps
  const std::vector<double> expect = {0.9, 1.1, 0.9, 1.1, 0.9, 1.1};
  for (std::size_t i = 0; i < 6; ++i) CHECK(p.data()[i] == doctest::Approx(expect[i]).epsilon(1e-4));
  CHECK(st.step == 1);
}

TEST_CASE("adamw weight decay skips rank-1 tensors") {
  ParamStore p;
  p.add("w", {1, 2}, 2.0);
  p.add("b", {2}, 2.0);
  AdamWState st = make_adamw_state(p);
  adamw_update(p, std::vector<double>(4, 0.0), st, 0.1, 0.5);
  CHECK(p.data()[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)));
  CHECK(p.data()[2] == 2.0);
}

TEST_CASE("zero learning rate and zero weight decay leave parameters bit-identical") {
  const auto data = tiny_examples(LayoutMode::WidthWise, 4);
  const Denoiser model(tiny_model(), latent_shape_for(3, 8, 8, LayoutMode::WidthWise), LayoutMode::WidthWise);
  ParamStore params = model.init_params(3);
  const ParamStore before = params;
  AdamWState opt = make_adamw_state(params);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.weight_decay = 0.0;
  cfg.steps = 5;
  cfg.batch_size = 2;
  train_loop(model, data, params, opt, cfg);
  CHECK(params == before);
  CHECK(opt.step == 5);
}

TEST_CASE("training is deterministic and lowers the loss on a tiny set") {
  const auto data = tiny_examples(LayoutMode::WidthWise, 2);
  const Denoiser model(tiny_model(), latent_shape_for(3, 8, 8, LayoutMode::WidthWise), LayoutMode::WidthWise);
  TrainConfig cfg;
  cfg.steps = 150;
  cfg.batch_size = 2;
  cfg.learning_rate = 3e-3;
  cfg.cond_drop_prob = 0.0;
  auto run = [&] {
    ParamStore params = model.init_params(5);
    AdamWState opt = make_adamw_state(params);
    std::vector<double> losses;
    train_loop(model, data, params, opt, cfg, [&](const LossRecord& r) { losses.push_back(r.loss.total); });
    return std::pair{params, losses};
  };
  const auto [p1, l1] = run();
  const auto [p2, l2] = run();
  CHECK(p1 == p2);
  CHECK(l1 == l2);
  REQUIRE(l1.size() == 150);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < 20; ++i) head += l1[i];
  for (std::size_t i = 130; i < 150; ++i) tail += l1[i];
  CHECK(tail < head);
}

TEST_CASE("draw_samples is reproducible per step") {
  const auto data = tiny_examples(LayoutMode::HeightWise, 2);
  const TrainingExample* batch[] = {&data[0], &data[1]};
  const auto a = draw_samples(batch, 0.5, 9, 3);
  const auto b = draw_samples(batch, 0.5, 9, 3);
  const auto c = draw_samples(batch, 0.5, 9, 4);
  REQUIRE(a.size() == 2);
  CHECK(a[0].x0 == b[0].x0);
  CHECK(a[1].t == b[1].t);
  CHECK(!(a[0].x0 == c[0].x0));
  for (const auto& d : a) CHECK((d.t >= 0.0 && d.t < 1.0));
}

TEST_CASE("the generic gradient checker is exact on a quadratic") {
  // f(x) = sum_i (i + 1) * x_i^2 / 2 + sin(x_0), gradient known in closed form
  const LossAndGrad fn = [](std::span<const double> th, std::vector<double>* g) {
    long double f = std::sin(th[0]);
    if (g) g->assign(th.size(), 0.0);
    for (std::size_t i = 0; i < th.size(); ++i) {
      f += 0.5L * (i + 1) * th[i] * th[i];
      if (g) (*g)[i] = (i + 1) * th[i];
    }
    if (g) (*g)[0] += std::cos(th[0]);
    return f;
  };
  std::vector<double> theta(30);
  Rng rng(4);
  for (double& v : theta) v = rng.normal();
  const GradCheckResult r = grad_check(fn, theta, 30, 1);
  CHECK(r.checked == 30);
  CHECK(r.max_rel_error < 1e-7);

  // a deliberately wrong gradient must be caught
  const LossAndGrad bad = [&](std::span<const double> th, std::vector<double>* g) {
    const long double f = fn(th, g);
    if (g) (*g)[3] *= 1.01;
    return f;
  };
  CHECK(grad_check(bad, theta, 30, 1).max_rel_error > 1e-3);
}

TEST_CASE("batch loss rejects mismatched draws") {
  const auto data = tiny_examples(LayoutMode::WidthWise, 2);
  const Denoiser model(tiny_model(), latent_shape_for(3, 8, 8, LayoutMode::WidthWise), LayoutMode::WidthWise);
  const ParamStore params = model.init_params(1);
  const TrainingExample* batch[] = {&data[0], &data[1]};
  const auto draws = draw_samples(std::span(batch, 1), 0.0, 1, 0);
  std::vector<double> grad;
  CHECK_THROWS(batch_loss_and_grad(model, params, batch, draws, 0.3, &grad));
}
