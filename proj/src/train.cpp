#include "transtext/train.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "transtext/rng.hpp"

namespace transtext {

void validate(const TrainConfig& cfg) {
  if (!(cfg.lambda_rec >= 0.0)) throw std::invalid_argument("TrainConfig: lambda_rec must be >= 0");
  if (!(cfg.cond_drop_prob >= 0.0 && cfg.cond_drop_prob < 1.0)) {
    throw std::invalid_argument("TrainConfig: cond_drop_prob must lie in [0, 1)");
  }
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (!(cfg.weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (cfg.batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

double cosine_lr(const TrainConfig& cfg, std::size_t step) {
  if (cfg.steps == 0) return cfg.learning_rate;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.steps));
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamWState make_adamw_state(const ParamStore& params) {
  AdamWState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  return s;
}

void adamw_update(ParamStore& params, std::span<const double> grad, AdamWState& state, double lr,
                  double weight_decay) {
  if (grad.size() != params.size() || state.m.size() != params.size()) {
    throw std::invalid_argument("adamw_update: buffer sizes differ");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  auto& data = params.data();
  for (const auto& e : params.entries()) {
    const bool decay = e.shape.size() >= 2;
    for (std::size_t i = e.offset; i < e.offset + e.size; ++i) {
      state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
      state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
      const double mhat = state.m[i] / bc1;
      const double vhat = state.v[i] / bc2;
      double update = mhat / (std::sqrt(vhat) + kAdamEps);
      if (decay) update += weight_decay * data[i];
      data[i] -= lr * update;
    }
  }
}

std::vector<SampleDraw> draw_samples(std::span<const TrainingExample* const> batch, double cond_drop_prob,
                                     std::uint64_t seed, std::uint64_t step) {
  std::vector<SampleDraw> draws;
  draws.reserve(batch.size());
  Rng rng = Rng::derive(seed, 0x5000000000ULL + step);
  for (const auto* ex : batch) {
    SampleDraw d;
    d.t = rng.uniform();
    d.drop_condition = rng.uniform() < cond_drop_prob;
    d.x0 = LatentGrid(ex->x1.frames, ex->x1.channels, ex->x1.height, ex->x1.width);
    for (double& v : d.x0.data) v = rng.normal();
    draws.push_back(std::move(d));
  }
  return draws;
}

LossTerms batch_loss_and_grad(const Denoiser& model, const ParamStore& params,
                              std::span<const TrainingExample* const> batch, std::span<const SampleDraw> draws,
                              double lambda_rec, std::vector<double>* grad) {
  if (batch.size() != draws.size() || batch.empty()) {
    throw std::invalid_argument("batch_loss_and_grad: batch and draws must be non-empty and equally long");
  }
  const std::size_t b = batch.size();
  std::vector<LossTerms> losses(b);
  std::vector<std::vector<double>> grads(grad ? b : 0);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(b); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& ex = *batch[i];
    const auto& dr = draws[i];
    const LatentGrid xt = interpolate_path(dr.x0, ex.x1, dr.t);
    Condition cond;
    if (!dr.drop_condition) {
      cond.effect = ex.effect;
      cond.reference = ex.reference;
    }
    ForwardCache cache;
    const LatentGrid v = model.forward(params, xt, dr.t, cond, grad ? &cache : nullptr);
    losses[i] = compute_losses(v, dr.x0, ex.x1, xt, dr.t, model.layout(), lambda_rec);
    if (grad) {
      grads[i].assign(params.size(), 0.0);
      const LatentGrid dv = loss_gradient(v, dr.x0, ex.x1, xt, dr.t, model.layout(), lambda_rec);
      model.backward(params, cache, dv, grads[i]);
    }
  }

  LossTerms mean;
  for (const auto& l : losses) {
    mean.mse += l.mse;
    mean.rec += l.rec;
    mean.total_ext += l.total_ext;
  }
  const double inv = 1.0 / static_cast<double>(b);
  mean.mse *= inv;
  mean.rec *= inv;
  mean.total_ext /= static_cast<long double>(b);
  mean.total = static_cast<double>(mean.total_ext);
  if (grad) {
    grad->assign(params.size(), 0.0);
    for (const auto& g : grads) {
      for (std::size_t k = 0; k < g.size(); ++k) (*grad)[k] += g[k];
    }
    for (double& v : *grad) v *= inv;
  }
  return mean;
}

LossRecord train_step(const Denoiser& model, std::span<const TrainingExample* const> batch, ParamStore& params,
                      AdamWState& opt, const TrainConfig& cfg) {
  const auto draws = draw_samples(batch, cfg.cond_drop_prob, cfg.seed, opt.step);
  std::vector<double> grad;
  LossRecord rec;
  rec.step = opt.step;
  rec.lr = cosine_lr(cfg, opt.step);
  rec.loss = batch_loss_and_grad(model, params, batch, draws, cfg.lambda_rec, &grad);
  if (!std::isfinite(rec.loss.total)) {
    std::ostringstream msg;
    msg << "train_step: non-finite loss at step " << rec.step << " (mse=" << rec.loss.mse << ", rec=" << rec.loss.rec
        << ")";
    throw std::runtime_error(msg.str());
  }
  adamw_update(params, grad, opt, rec.lr, cfg.weight_decay);
  return rec;
}

void train_loop(const Denoiser& model, std::span<const TrainingExample> data, ParamStore& params, AdamWState& opt,
                const TrainConfig& cfg, const StepCallback& on_step) {
  validate(cfg);
  if (data.empty()) throw std::invalid_argument("train_loop: no training examples");
  std::vector<const TrainingExample*> batch(cfg.batch_size);
  while (opt.step < cfg.steps) {
    Rng pick = Rng::derive(cfg.seed, 0x6000000000ULL + opt.step);
    for (auto& p : batch) p = &data[pick.below(data.size())];
    const LossRecord rec = train_step(model, batch, params, opt, cfg);
    if (on_step) on_step(rec);
  }
}

}  // namespace transtext
