#pragma once

#include "transtext/latent.hpp"
#include "transtext/layout.hpp"

namespace transtext {

struct LossTerms {
  double mse = 0.0;
  double rec = 0.0;
  double total = 0.0;
  // `total` before rounding to double; finite-difference checks difference
  // two nearby losses and would otherwise lose several digits to rounding
  long double total_ext = 0.0L;
};

/// Flow-matching velocity MSE plus the alpha-half one-step reconstruction term.
///   mse   = mean over all elements of (v - (x1 - x0))^2
///   x1~   = x_t + (1 - t) v            on the alpha half
///   rec   = mean over alpha-half elements of (x1 - x1~)^2
///   total = mse + lambda_rec * rec
LossTerms compute_losses(const LatentGrid& v_pred, const LatentGrid& x0, const LatentGrid& x1, const LatentGrid& x_t,
                         double t, LayoutMode layout, double lambda_rec);

/// d total / d v_pred for the same quantities.
LatentGrid loss_gradient(const LatentGrid& v_pred, const LatentGrid& x0, const LatentGrid& x1, const LatentGrid& x_t,
                         double t, LayoutMode layout, double lambda_rec);

}  // namespace transtext
