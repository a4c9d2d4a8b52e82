#include "transtext/losses.hpp"

#include <stdexcept>

namespace transtext {
namespace {

void check_inputs(const LatentGrid& v, const LatentGrid& x0, const LatentGrid& x1, const LatentGrid& xt, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("compute_losses: t must lie in [0, 1]");
  if (!v.same_shape(x0) || !v.same_shape(x1) || !v.same_shape(xt)) {
    throw std::invalid_argument("compute_losses: latent shapes differ");
  }
  if (v.size() == 0) throw std::invalid_argument("compute_losses: empty latent");
}

}  // namespace

LossTerms compute_losses(const LatentGrid& v_pred, const LatentGrid& x0, const LatentGrid& x1, const LatentGrid& x_t,
                         double t, LayoutMode layout, double lambda_rec) {
  check_inputs(v_pred, x0, x1, x_t, t);
  const auto mask = alpha_half_mask(v_pred, layout);
  long double sq = 0.0L;
  long double rec = 0.0L;
  std::size_t n_alpha = 0;
  for (std::size_t i = 0; i < v_pred.size(); ++i) {
    const double e = v_pred.data[i] - (x1.data[i] - x0.data[i]);
    sq += static_cast<long double>(e) * e;
    if (mask[i]) {
      const long double recon = x_t.data[i] + (1.0L - t) * v_pred.data[i];
      const long double r = x1.data[i] - recon;
      rec += r * r;
      ++n_alpha;
    }
  }
  const long double mse = sq / static_cast<long double>(v_pred.size());
  const long double rec_mean = n_alpha ? rec / static_cast<long double>(n_alpha) : 0.0L;
  LossTerms out;
  out.mse = static_cast<double>(mse);
  out.rec = static_cast<double>(rec_mean);
  out.total_ext = mse + lambda_rec * rec_mean;
  out.total = static_cast<double>(out.total_ext);
  return out;
}

LatentGrid loss_gradient(const LatentGrid& v_pred, const LatentGrid& x0, const LatentGrid& x1, const LatentGrid& x_t,
                         double t, LayoutMode layout, double lambda_rec) {
  check_inputs(v_pred, x0, x1, x_t, t);
  const auto mask = alpha_half_mask(v_pred, layout);
  std::size_t n_alpha = 0;
  for (auto m : mask) n_alpha += m;
  const double n_all = static_cast<double>(v_pred.size());
  LatentGrid g = v_pred;
  for (std::size_t i = 0; i < v_pred.size(); ++i) {
    double d = 2.0 * (v_pred.data[i] - (x1.data[i] - x0.data[i])) / n_all;
    if (mask[i] && n_alpha) {
      const double recon = x_t.data[i] + (1.0 - t) * v_pred.data[i];
      d += lambda_rec * 2.0 * (recon - x1.data[i]) * (1.0 - t) / static_cast<double>(n_alpha);
    }
    g.data[i] = d;
  }
  return g;
}

}  // namespace transtext
