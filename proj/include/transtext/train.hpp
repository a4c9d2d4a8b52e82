#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "transtext/denoiser.hpp"
#include "transtext/latent.hpp"
#include "transtext/losses.hpp"
#include "transtext/params.hpp"

namespace transtext {

struct TrainConfig {
  double lambda_rec = 0.3;
  double learning_rate = 1e-3;
  double weight_decay = 1e-2;
  std::size_t steps = 3000;
  std::size_t batch_size = 4;
  double cond_drop_prob = 0.1;
  std::uint64_t seed = 0;
  LayoutMode layout = LayoutMode::WidthWise;
};

void validate(const TrainConfig& cfg);

/// One training clip: clean joint latent, encoded composed reference, effect class.
struct TrainingExample {
  LatentGrid x1;
  LatentGrid reference;
  int effect = 0;
};

/// Random quantities drawn for one sample of one step.
struct SampleDraw {
  LatentGrid x0;
  double t = 0.0;
  bool drop_condition = false;
};

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct LossRecord {
  std::size_t step = 0;
  double lr = 0.0;
  LossTerms loss;
};

/// Cosine decay from learning_rate at step 0 towards 0 at `steps`.
double cosine_lr(const TrainConfig& cfg, std::size_t step);

AdamWState make_adamw_state(const ParamStore& params);

/// Decoupled AdamW update; weight decay applies to tensors of rank >= 2.
void adamw_update(ParamStore& params, std::span<const double> grad, AdamWState& state, double lr,
                  double weight_decay);

/// Draws x0 ~ N(0, I), t ~ U(0, 1) and the condition-drop coin for each example.
std::vector<SampleDraw> draw_samples(std::span<const TrainingExample* const> batch, double cond_drop_prob,
                                     std::uint64_t seed, std::uint64_t step);

/// Mean loss over the batch; writes the mean gradient into `grad` (resized).
/// Per-sample work may run in parallel, the reduction follows batch order.
LossTerms batch_loss_and_grad(const Denoiser& model, const ParamStore& params,
                              std::span<const TrainingExample* const> batch, std::span<const SampleDraw> draws,
                              double lambda_rec, std::vector<double>* grad);

/// One optimisation step. Aborts with std::runtime_error on a non-finite loss.
LossRecord train_step(const Denoiser& model, std::span<const TrainingExample* const> batch, ParamStore& params,
                      AdamWState& opt, const TrainConfig& cfg);

using StepCallback = std::function<void(const LossRecord&)>;

/// Runs cfg.steps steps (continuing from opt.step) with seeded batch sampling.
void train_loop(const Denoiser& model, std::span<const TrainingExample> data, ParamStore& params, AdamWState& opt,
                const TrainConfig& cfg, const StepCallback& on_step = {});

}  // namespace transtext
