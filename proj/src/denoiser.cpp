#include "transtext/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "transtext/kernels.hpp"
#include "transtext/rng.hpp"

namespace transtext {

std::string to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::None: return "none";
    case MaskMode::SelfAttn: return "self_attn";
    case MaskMode::CrossAttn: return "cross_attn";
  }
  return "?";
}

MaskMode parse_mask_mode(std::string_view name) {
  if (name == "none") return MaskMode::None;
  if (name == "self_attn" || name == "SelfAttnM") return MaskMode::SelfAttn;
  if (name == "cross_attn" || name == "CrossAttnM") return MaskMode::CrossAttn;
  throw std::invalid_argument("unknown mask mode '" + std::string(name) + "'");
}

void validate(const DenoiserConfig& cfg) {
  if (cfg.patch_size == 0) throw std::invalid_argument("DenoiserConfig: patch_size must be >= 1");
  if (cfg.embed_dim == 0 || cfg.heads == 0 || cfg.embed_dim % cfg.heads != 0) {
    throw std::invalid_argument("DenoiserConfig: embed_dim must be a positive multiple of heads");
  }
  if (cfg.embed_dim % 2 != 0) throw std::invalid_argument("DenoiserConfig: embed_dim must be even");
  if (cfg.blocks == 0) throw std::invalid_argument("DenoiserConfig: need at least one block");
  if (!(cfg.data_std > 0.0)) throw std::invalid_argument("DenoiserConfig: data_std must be positive");
}

Preconditioning velocity_preconditioning(double t, double data_std) {
  const double s2 = data_std * data_std;
  const double u = 1.0 - t;
  const double cov = t * s2 - u;
  const double var = t * t * s2 + u * u;
  Preconditioning p;
  p.skip = cov / var;
  p.scale = std::sqrt(std::max(s2 + 1.0 - p.skip * cov, 0.0));
  return p;
}

std::vector<double> time_features(double t, std::size_t dim) {
  std::vector<double> feat(dim);
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double arg = 1000.0 * t * freq;
    feat[i] = std::sin(arg);
    feat[half + i] = std::cos(arg);
  }
  return feat;
}

namespace {

constexpr double kLayerNormEps = 1e-5;

using Vec = std::vector<double>;

void linear_forward(std::size_t n, std::size_t in, std::size_t out, const Vec& x, std::span<const double> w,
                    std::span<const double> b, Vec& y) {
  y.assign(n * out, 0.0);
  kernels::gemm_nn(n, out, in, x, w, y);
  if (!b.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < out; ++j) y[i * out + j] += b[j];
    }
  }
}

// dW += x^T dy, db += colsum(dy), dx (+)= dy W^T.
void linear_backward(std::size_t n, std::size_t in, std::size_t out, const Vec& x, std::span<const double> w,
                     const Vec& dy, std::span<double> dw, std::span<double> db, Vec* dx, bool accumulate_dx) {
  kernels::gemm_tn(in, out, n, x, dy, dw, true);
  if (!db.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < out; ++j) db[j] += dy[i * out + j];
    }
  }
  if (dx) {
    if (!accumulate_dx) dx->assign(n * in, 0.0);
    kernels::gemm_nt(n, in, out, dy, w, *dx, true);
  }
}

void layer_norm_forward(std::size_t n, std::size_t d, const Vec& x, std::span<const double> g,
                        std::span<const double> b, Vec& y, LayerNormCache& cache) {
  y.resize(n * d);
  cache.xhat.resize(n * d);
  cache.rstd.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd[i] = rstd;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mean) * rstd;
      cache.xhat[i * d + j] = xh;
      y[i * d + j] = g[j] * xh + b[j];
    }
  }
}

// dx += LN'(dy); dg, db accumulate.
void layer_norm_backward(std::size_t n, std::size_t d, const Vec& dy, const LayerNormCache& cache,
                         std::span<const double> g, Vec& dx, std::span<double> dg, std::span<double> db) {
  Vec dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double gy = dy[i * d + j];
      const double xh = cache.xhat[i * d + j];
      dg[j] += gy * xh;
      db[j] += gy;
      dxhat[j] = gy * g[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xh;
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    const double rstd = cache.rstd[i];
    for (std::size_t j = 0; j < d; ++j) {
      dx[i * d + j] += rstd * (dxhat[j] - mean_dxhat - cache.xhat[i * d + j] * mean_dxhat_xhat);
    }
  }
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void copy_head(const Vec& src, std::size_t n, std::size_t d, std::size_t col0, std::size_t dh, Vec& dst) {
  dst.resize(n * dh);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(src.data() + i * d + col0, dh, dst.data() + i * dh);
}

void add_head(const Vec& src, std::size_t n, std::size_t d, std::size_t col0, std::size_t dh, Vec& dst) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dh; ++j) dst[i * d + col0 + j] += src[i * dh + j];
  }
}

// Multi-head scaled dot-product attention. `mask` (nq x nk, 1 = blocked) may be empty.
void attention_forward(std::size_t nq, std::size_t nk, std::size_t d, std::size_t heads,
                       const std::vector<std::uint8_t>& mask, AttentionCache& c) {
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.probs.assign(heads * nq * nk, 0.0);
  c.merged.assign(nq * d, 0.0);
  Vec qh, kh, vh, oh;
  for (std::size_t h = 0; h < heads; ++h) {
    copy_head(c.q, nq, d, h * dh, dh, qh);
    copy_head(c.k, nk, d, h * dh, dh, kh);
    copy_head(c.v, nk, d, h * dh, dh, vh);
    std::span<double> p(c.probs.data() + h * nq * nk, nq * nk);
    kernels::gemm_nt(nq, nk, dh, qh, kh, p);
    for (std::size_t i = 0; i < nq; ++i) {
      double* row = p.data() + i * nk;
      const std::uint8_t* mrow = mask.empty() ? nullptr : mask.data() + i * nk;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nk; ++j) {
        if (mrow && mrow[j]) continue;
        row[j] *= scale;
        peak = std::max(peak, row[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (mrow && mrow[j]) {
          row[j] = 0.0;
          continue;
        }
        row[j] = std::exp(row[j] - peak);
        total += row[j];
      }
      const double inv = 1.0 / total;
      for (std::size_t j = 0; j < nk; ++j) row[j] *= inv;
    }
    oh.assign(nq * dh, 0.0);
    kernels::gemm_nn(nq, dh, nk, p, vh, oh);
    add_head(oh, nq, d, h * dh, dh, c.merged);
  }
}

void attention_backward(std::size_t nq, std::size_t nk, std::size_t d, std::size_t heads, const AttentionCache& c,
                        const Vec& dmerged, Vec& dq, Vec& dk, Vec& dv) {
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  dq.assign(nq * d, 0.0);
  dk.assign(nk * d, 0.0);
  dv.assign(nk * d, 0.0);
  Vec qh, kh, vh, doh, dp(nq * nk), dqh, dkh, dvh;
  for (std::size_t h = 0; h < heads; ++h) {
    copy_head(c.q, nq, d, h * dh, dh, qh);
    copy_head(c.k, nk, d, h * dh, dh, kh);
    copy_head(c.v, nk, d, h * dh, dh, vh);
    copy_head(dmerged, nq, d, h * dh, dh, doh);
    std::span<const double> p(c.probs.data() + h * nq * nk, nq * nk);
    kernels::gemm_nt(nq, nk, dh, doh, vh, dp);
    dvh.assign(nk * dh, 0.0);
    kernels::gemm_tn(nk, dh, nq, p, doh, dvh);
    for (std::size_t i = 0; i < nq; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < nk; ++j) dot += p[i * nk + j] * dp[i * nk + j];
      for (std::size_t j = 0; j < nk; ++j) dp[i * nk + j] = p[i * nk + j] * (dp[i * nk + j] - dot) * scale;
    }
    dqh.assign(nq * dh, 0.0);
    kernels::gemm_nn(nq, dh, nk, dp, kh, dqh);
    dkh.assign(nk * dh, 0.0);
    kernels::gemm_tn(nk, dh, nq, dp, qh, dkh);
    add_head(dqh, nq, d, h * dh, dh, dq);
    add_head(dkh, nk, d, h * dh, dh, dk);
    add_head(dvh, nk, d, h * dh, dh, dv);
  }
}

void trunc_normal(std::span<double> out, double std, Rng& rng) {
  for (double& v : out) {
    double z = rng.normal();
    while (std::abs(z) > 2.0) z = rng.normal();
    v = std * z;
  }
}

}  // namespace

Denoiser::Denoiser(DenoiserConfig cfg, LatentShape shape, LayoutMode layout, int effect_count)
    : cfg_(cfg), shape_(shape), layout_(layout), effect_count_(effect_count) {
  validate(cfg_);
  const std::size_t p = cfg_.patch_size;
  if (shape_.frames == 0 || shape_.height == 0 || shape_.width == 0) {
    throw std::invalid_argument("Denoiser: empty latent shape");
  }
  if (shape_.height % p != 0 || shape_.width % p != 0) {
    throw std::invalid_argument("Denoiser: patch_size must divide the latent height and width");
  }
  if (layout_ == LayoutMode::WidthWise && (shape_.width % 2 != 0 || (shape_.width / 2) % p != 0)) {
    throw std::invalid_argument("Denoiser: patches must not straddle the width-wise RGB/alpha boundary");
  }
  if (layout_ == LayoutMode::HeightWise && (shape_.height % 2 != 0 || (shape_.height / 2) % p != 0)) {
    throw std::invalid_argument("Denoiser: patches must not straddle the height-wise RGB/alpha boundary");
  }
  if (layout_ == LayoutMode::TemporalWise && shape_.frames % 2 != 0) {
    throw std::invalid_argument("Denoiser: temporal layout needs an even number of latent frames");
  }
  rows_ = shape_.height / p;
  cols_ = shape_.width / p;
  tokens_ = shape_.frames * rows_ * cols_;
  patch_dim_ = 3 * p * p;

  alpha_token_.resize(tokens_);
  for (std::size_t f = 0; f < shape_.frames; ++f) {
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) {
        bool alpha = false;
        switch (layout_) {
          case LayoutMode::WidthWise: alpha = c >= cols_ / 2; break;
          case LayoutMode::HeightWise: alpha = r >= rows_ / 2; break;
          case LayoutMode::TemporalWise: alpha = f >= shape_.frames / 2; break;
        }
        alpha_token_[(f * rows_ + r) * cols_ + c] = alpha ? 1 : 0;
      }
    }
  }

  const std::size_t d = cfg_.embed_dim;
  auto& L = layout_idx_;
  auto& P = prototype_;
  L.patch_in = P.add("patch_in.weight", {patch_dim_, d});
  L.patch_in_b = P.add("patch_in.bias", {d});
  L.time_w = P.add("time.weight", {d, d});
  L.time_b = P.add("time.bias", {d});
  L.pos_frame = P.add("pos.frame", {shape_.frames, d});
  L.pos_row = P.add("pos.row", {rows_, d});
  L.pos_col = P.add("pos.col", {cols_, d});
  L.ref_in = P.add("ref_in.weight", {patch_dim_, d});
  L.ref_in_b = P.add("ref_in.bias", {d});
  L.ref_add = P.add("ref_add.weight", {patch_dim_, d});
  L.ref_add_b = P.add("ref_add.bias", {d});
  L.ref_add_null = P.add("ref_add.null", {d});
  L.effect = P.add("cond.effect", {static_cast<std::size_t>(effect_count_), d});
  L.null_token = P.add("cond.null", {1, d});
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const std::string pre = "blocks." + std::to_string(b) + ".";
    BlockParams bp{};
    bp.ln1_g = P.add(pre + "ln1.gain", {d}, 1.0);
    bp.ln1_b = P.add(pre + "ln1.bias", {d});
    bp.q = P.add(pre + "attn.q", {d, d});
    bp.k = P.add(pre + "attn.k", {d, d});
    bp.v = P.add(pre + "attn.v", {d, d});
    bp.o = P.add(pre + "attn.out", {d, d});
    bp.o_b = P.add(pre + "attn.out_bias", {d});
    bp.ln2_g = P.add(pre + "ln2.gain", {d}, 1.0);
    bp.ln2_b = P.add(pre + "ln2.bias", {d});
    bp.xq = P.add(pre + "xattn.q", {d, d});
    bp.xk = P.add(pre + "xattn.k", {d, d});
    bp.xv = P.add(pre + "xattn.v", {d, d});
    bp.xo = P.add(pre + "xattn.out", {d, d});
    bp.xo_b = P.add(pre + "xattn.out_bias", {d});
    bp.ln3_g = P.add(pre + "ln3.gain", {d}, 1.0);
    bp.ln3_b = P.add(pre + "ln3.bias", {d});
    bp.fc1 = P.add(pre + "mlp.fc1", {d, 4 * d});
    bp.fc1_b = P.add(pre + "mlp.fc1_bias", {4 * d});
    bp.fc2 = P.add(pre + "mlp.fc2", {4 * d, d});
    bp.fc2_b = P.add(pre + "mlp.fc2_bias", {d});
    L.blocks.push_back(bp);
  }
  L.final_g = P.add("final_ln.gain", {d}, 1.0);
  L.final_b = P.add("final_ln.bias", {d});
  L.patch_out = P.add("patch_out.weight", {d, patch_dim_});
  L.patch_out_b = P.add("patch_out.bias", {patch_dim_});
}

ParamStore Denoiser::init_params(std::uint64_t seed) const {
  ParamStore params = prototype_;
  Rng rng = Rng::derive(seed, 0x1417);
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& e = params.entries()[i];
    // Matrices and embedding tables get small random values; gains stay 1 and biases 0.
    if (e.shape.size() >= 2) trunc_normal(params.view(i), 0.02, rng);
  }
  return params;
}

void Denoiser::patchify(const LatentGrid& x, std::size_t frames, std::vector<double>& out) const {
  const std::size_t p = cfg_.patch_size;
  out.resize(frames * rows_ * cols_ * patch_dim_);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) {
        double* dst = out.data() + ((f * rows_ + r) * cols_ + c) * patch_dim_;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          for (std::size_t dy = 0; dy < p; ++dy) {
            for (std::size_t dx = 0; dx < p; ++dx) *dst++ = x.at(f, ch, r * p + dy, c * p + dx);
          }
        }
      }
    }
  }
}

bool Denoiser::self_masked(std::size_t q, std::size_t k) const {
  return cfg_.mask_mode == MaskMode::SelfAttn && alpha_token_[q] && !alpha_token_[k];
}

bool Denoiser::cross_masked(std::size_t q, std::size_t k, bool conditional) const {
  return cfg_.mask_mode == MaskMode::CrossAttn && conditional && k == 0 && alpha_token_[q];
}

LatentGrid Denoiser::forward(const ParamStore& params, const LatentGrid& x, double t, const Condition& cond,
                             ForwardCache* cache_out) const {
  if (x.frames != shape_.frames || x.channels != 3 || x.height != shape_.height || x.width != shape_.width) {
    throw std::invalid_argument("Denoiser::forward: input latent shape does not match the model");
  }
  if (!params.same_layout(prototype_)) throw std::invalid_argument("Denoiser::forward: parameter layout mismatch");
  const bool conditional = !cond.is_null();
  if (conditional) {
    if (cond.effect >= effect_count_) throw std::invalid_argument("Denoiser::forward: effect id out of range");
    const LatentGrid ref = reference_shape();
    if (!cond.reference.same_shape(ref)) {
      throw std::invalid_argument("Denoiser::forward: reference latent shape does not match the model");
    }
  }

  ForwardCache local;
  ForwardCache& c = cache_out ? *cache_out : local;
  const std::size_t n = tokens_;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t pd = patch_dim_;
  const auto& L = layout_idx_;

  patchify(x, shape_.frames, c.patches);
  c.time_feat = time_features(t, d);
  Vec temb;
  linear_forward(1, d, d, c.time_feat, params.view(L.time_w), params.view(L.time_b), temb);

  Vec h;
  linear_forward(n, pd, d, c.patches, params.view(L.patch_in), params.view(L.patch_in_b), h);
  {
    const auto pf = params.view(L.pos_frame);
    const auto pr = params.view(L.pos_row);
    const auto pc = params.view(L.pos_col);
    for (std::size_t f = 0; f < shape_.frames; ++f) {
      for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t col = 0; col < cols_; ++col) {
          double* row = h.data() + ((f * rows_ + r) * cols_ + col) * d;
          for (std::size_t j = 0; j < d; ++j) row[j] += temb[j] + pf[f * d + j] + pr[r * d + j] + pc[col * d + j];
        }
      }
    }
  }

  // Condition tokens.
  c.effect = cond.effect;
  if (conditional) {
    const std::size_t m = 1 + rows_ * cols_;
    c.cond_tokens = m;
    patchify(cond.reference, 1, c.ref_patches);
    Vec ref;
    linear_forward(rows_ * cols_, pd, d, c.ref_patches, params.view(L.ref_in), params.view(L.ref_in_b), ref);
    c.cond.assign(m * d, 0.0);
    const auto eff = params.view(L.effect);
    std::copy_n(eff.data() + static_cast<std::size_t>(cond.effect) * d, d, c.cond.data());
    const auto pr = params.view(L.pos_row);
    const auto pc = params.view(L.pos_col);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t col = 0; col < cols_; ++col) {
        const std::size_t i = r * cols_ + col;
        for (std::size_t j = 0; j < d; ++j) {
          c.cond[(1 + i) * d + j] = ref[i * d + j] + pr[r * d + j] + pc[col * d + j];
        }
      }
    }
    Vec radd;
    linear_forward(rows_ * cols_, pd, d, c.ref_patches, params.view(L.ref_add), params.view(L.ref_add_b), radd);
    for (std::size_t f = 0; f < shape_.frames; ++f) {
      for (std::size_t i = 0; i < rows_ * cols_; ++i) {
        double* row = h.data() + (f * rows_ * cols_ + i) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += radd[i * d + j];
      }
    }
  } else {
    c.cond_tokens = 1;
    c.ref_patches.clear();
    const auto nul = params.view(L.null_token);
    c.cond.assign(nul.begin(), nul.end());
    const auto rnull = params.view(L.ref_add_null);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) h[i * d + j] += rnull[j];
    }
  }
  const std::size_t m = c.cond_tokens;

  std::vector<std::uint8_t> self_mask;
  if (cfg_.mask_mode == MaskMode::SelfAttn) {
    self_mask.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) self_mask[i * n + j] = self_masked(i, j) ? 1 : 0;
    }
  }
  std::vector<std::uint8_t> cross_mask;
  if (cfg_.mask_mode == MaskMode::CrossAttn && conditional) {
    cross_mask.resize(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) cross_mask[i * m + j] = cross_masked(i, j, conditional) ? 1 : 0;
    }
  }

  c.blocks.resize(cfg_.blocks);
  Vec proj, mlp_out;
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const auto& bp = L.blocks[b];
    auto& bc = c.blocks[b];
    bc.h_in = h;

    layer_norm_forward(n, d, h, params.view(bp.ln1_g), params.view(bp.ln1_b), bc.a1, bc.ln1);
    linear_forward(n, d, d, bc.a1, params.view(bp.q), {}, bc.self_attn.q);
    linear_forward(n, d, d, bc.a1, params.view(bp.k), {}, bc.self_attn.k);
    linear_forward(n, d, d, bc.a1, params.view(bp.v), {}, bc.self_attn.v);
    attention_forward(n, n, d, cfg_.heads, self_mask, bc.self_attn);
    linear_forward(n, d, d, bc.self_attn.merged, params.view(bp.o), params.view(bp.o_b), proj);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += proj[i];
    bc.h_mid1 = h;

    layer_norm_forward(n, d, h, params.view(bp.ln2_g), params.view(bp.ln2_b), bc.a2, bc.ln2);
    linear_forward(n, d, d, bc.a2, params.view(bp.xq), {}, bc.cross_attn.q);
    linear_forward(m, d, d, c.cond, params.view(bp.xk), {}, bc.cross_attn.k);
    linear_forward(m, d, d, c.cond, params.view(bp.xv), {}, bc.cross_attn.v);
    attention_forward(n, m, d, cfg_.heads, cross_mask, bc.cross_attn);
    linear_forward(n, d, d, bc.cross_attn.merged, params.view(bp.xo), params.view(bp.xo_b), proj);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += proj[i];
    bc.h_mid2 = h;

    layer_norm_forward(n, d, h, params.view(bp.ln3_g), params.view(bp.ln3_b), bc.a3, bc.ln3);
    linear_forward(n, d, 4 * d, bc.a3, params.view(bp.fc1), params.view(bp.fc1_b), bc.fc1_pre);
    bc.fc1_act.resize(bc.fc1_pre.size());
    for (std::size_t i = 0; i < bc.fc1_pre.size(); ++i) bc.fc1_act[i] = gelu(bc.fc1_pre[i]);
    linear_forward(n, 4 * d, d, bc.fc1_act, params.view(bp.fc2), params.view(bp.fc2_b), mlp_out);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += mlp_out[i];
  }

  c.h_final = h;
  layer_norm_forward(n, d, h, params.view(L.final_g), params.view(L.final_b), c.a_final, c.ln_final);
  Vec y;
  linear_forward(n, d, pd, c.a_final, params.view(L.patch_out), params.view(L.patch_out_b), y);

  const Preconditioning pre = velocity_preconditioning(t, cfg_.data_std);
  c.out_scale = pre.scale;
  LatentGrid out(shape_.frames, 3, shape_.height, shape_.width);
  const std::size_t p = cfg_.patch_size;
  for (std::size_t f = 0; f < shape_.frames; ++f) {
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t col = 0; col < cols_; ++col) {
        const double* src = y.data() + ((f * rows_ + r) * cols_ + col) * pd;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          for (std::size_t dy = 0; dy < p; ++dy) {
            for (std::size_t dx = 0; dx < p; ++dx) {
              const std::size_t y0 = r * p + dy, x0 = col * p + dx;
              out.at(f, ch, y0, x0) = pre.skip * x.at(f, ch, y0, x0) + pre.scale * *src++;
            }
          }
        }
      }
    }
  }
  return out;
}

void Denoiser::backward(const ParamStore& params, const ForwardCache& c, const LatentGrid& d_out,
                        std::span<double> grad) const {
  if (grad.size() != params.size()) throw std::invalid_argument("Denoiser::backward: gradient buffer size mismatch");
  if (!d_out.same_shape(LatentGrid(shape_.frames, 3, shape_.height, shape_.width))) {
    throw std::invalid_argument("Denoiser::backward: output gradient shape mismatch");
  }
  const std::size_t n = tokens_;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t pd = patch_dim_;
  const std::size_t m = c.cond_tokens;
  const auto& L = layout_idx_;
  auto g = [&](std::size_t idx) { return params.view_in(grad, idx); };

  Vec dy;
  patchify(d_out, shape_.frames, dy);
  for (double& v : dy) v *= c.out_scale;

  Vec da, dh(n * d, 0.0);
  linear_backward(n, d, pd, c.a_final, params.view(L.patch_out), dy, g(L.patch_out), g(L.patch_out_b), &da, false);
  layer_norm_backward(n, d, da, c.ln_final, params.view(L.final_g), dh, g(L.final_g), g(L.final_b));

  Vec dcond(m * d, 0.0);
  Vec dmerged, dq, dk, dv, dact, dpre;
  for (std::size_t bi = cfg_.blocks; bi-- > 0;) {
    const auto& bp = L.blocks[bi];
    const auto& bc = c.blocks[bi];

    // MLP sublayer.
    linear_backward(n, 4 * d, d, bc.fc1_act, params.view(bp.fc2), dh, g(bp.fc2), g(bp.fc2_b), &dact, false);
    dpre.resize(dact.size());
    for (std::size_t i = 0; i < dact.size(); ++i) dpre[i] = dact[i] * gelu_grad(bc.fc1_pre[i]);
    linear_backward(n, d, 4 * d, bc.a3, params.view(bp.fc1), dpre, g(bp.fc1), g(bp.fc1_b), &da, false);
    layer_norm_backward(n, d, da, bc.ln3, params.view(bp.ln3_g), dh, g(bp.ln3_g), g(bp.ln3_b));

    // Cross-attention sublayer.
    linear_backward(n, d, d, bc.cross_attn.merged, params.view(bp.xo), dh, g(bp.xo), g(bp.xo_b), &dmerged, false);
    attention_backward(n, m, d, cfg_.heads, bc.cross_attn, dmerged, dq, dk, dv);
    linear_backward(n, d, d, bc.a2, params.view(bp.xq), dq, g(bp.xq), {}, &da, false);
    linear_backward(m, d, d, c.cond, params.view(bp.xk), dk, g(bp.xk), {}, &dcond, true);
    linear_backward(m, d, d, c.cond, params.view(bp.xv), dv, g(bp.xv), {}, &dcond, true);
    layer_norm_backward(n, d, da, bc.ln2, params.view(bp.ln2_g), dh, g(bp.ln2_g), g(bp.ln2_b));

    // Self-attention sublayer.
    linear_backward(n, d, d, bc.self_attn.merged, params.view(bp.o), dh, g(bp.o), g(bp.o_b), &dmerged, false);
    attention_backward(n, n, d, cfg_.heads, bc.self_attn, dmerged, dq, dk, dv);
    linear_backward(n, d, d, bc.a1, params.view(bp.q), dq, g(bp.q), {}, &da, false);
    linear_backward(n, d, d, bc.a1, params.view(bp.k), dk, g(bp.k), {}, &da, true);
    linear_backward(n, d, d, bc.a1, params.view(bp.v), dv, g(bp.v), {}, &da, true);
    layer_norm_backward(n, d, da, bc.ln1, params.view(bp.ln1_g), dh, g(bp.ln1_g), g(bp.ln1_b));
  }

  // Input embedding.
  linear_backward(n, pd, d, c.patches, params.view(L.patch_in), dh, g(L.patch_in), g(L.patch_in_b), nullptr, false);
  Vec dtemb(d, 0.0);
  {
    auto gf = g(L.pos_frame);
    auto gr = g(L.pos_row);
    auto gc = g(L.pos_col);
    for (std::size_t f = 0; f < shape_.frames; ++f) {
      for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t col = 0; col < cols_; ++col) {
          const double* row = dh.data() + ((f * rows_ + r) * cols_ + col) * d;
          for (std::size_t j = 0; j < d; ++j) {
            dtemb[j] += row[j];
            gf[f * d + j] += row[j];
            gr[r * d + j] += row[j];
            gc[col * d + j] += row[j];
          }
        }
      }
    }
  }
  linear_backward(1, d, d, c.time_feat, params.view(L.time_w), dtemb, g(L.time_w), g(L.time_b), nullptr, false);

  // Condition tokens.
  if (c.effect >= 0) {
    auto ge = g(L.effect);
    for (std::size_t j = 0; j < d; ++j) ge[static_cast<std::size_t>(c.effect) * d + j] += dcond[j];
    const std::size_t nr = rows_ * cols_;
    Vec dref(nr * d);
    std::copy(dcond.begin() + static_cast<std::ptrdiff_t>(d), dcond.end(), dref.begin());
    linear_backward(nr, pd, d, c.ref_patches, params.view(L.ref_in), dref, g(L.ref_in), g(L.ref_in_b), nullptr,
                    false);
    Vec dradd(nr * d, 0.0);
    for (std::size_t f = 0; f < shape_.frames; ++f) {
      for (std::size_t i = 0; i < nr * d; ++i) dradd[i] += dh[f * nr * d + i];
    }
    linear_backward(nr, pd, d, c.ref_patches, params.view(L.ref_add), dradd, g(L.ref_add), g(L.ref_add_b), nullptr,
                    false);
    auto gr = g(L.pos_row);
    auto gc = g(L.pos_col);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t col = 0; col < cols_; ++col) {
        const double* row = dref.data() + (r * cols_ + col) * d;
        for (std::size_t j = 0; j < d; ++j) {
          gr[r * d + j] += row[j];
          gc[col * d + j] += row[j];
        }
      }
    }
  } else {
    auto gn = g(L.null_token);
    for (std::size_t j = 0; j < d; ++j) gn[j] += dcond[j];
    auto grn = g(L.ref_add_null);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) grn[j] += dh[i * d + j];
    }
  }
}

}  // namespace transtext
