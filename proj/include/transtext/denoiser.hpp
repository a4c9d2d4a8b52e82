#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "transtext/latent.hpp"
#include "transtext/layout.hpp"
#include "transtext/params.hpp"

namespace transtext {

/// Attention-mask ablations. SelfAttn blocks alpha-half queries from RGB-half
/// keys in self-attention; CrossAttn blocks alpha-half queries from the effect
/// (text) token in cross-attention, leaving reference tokens visible.
enum class MaskMode { None, SelfAttn, CrossAttn };

std::string to_string(MaskMode mode);
MaskMode parse_mask_mode(std::string_view name);

struct DenoiserConfig {
  std::size_t patch_size = 2;
  std::size_t embed_dim = 64;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  MaskMode mask_mode = MaskMode::None;
  // RMS of clean latents assumed by the output preconditioning (the glyph
  // dataset's joint latents measure about 0.11)
  double data_std = 0.1;
};

void validate(const DenoiserConfig& cfg);

/// Latent extent of one composite clip (channels are always 3).
struct LatentShape {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Conditioning: an effect class plus the encoded composed reference image, or
/// the learned null token when `effect < 0` (used for classifier-free guidance).
struct Condition {
  int effect = -1;
  LatentGrid reference;

  bool is_null() const { return effect < 0; }
  static Condition null() { return {}; }
};

struct LayerNormCache {
  std::vector<double> xhat;
  std::vector<double> rstd;
};

struct AttentionCache {
  std::vector<double> q, k, v;   // projected, [tokens x dim]
  std::vector<double> probs;     // [heads x queries x keys]
  std::vector<double> merged;    // concatenated head outputs, before the output projection
};

struct BlockCache {
  std::vector<double> h_in;
  LayerNormCache ln1, ln2, ln3;
  std::vector<double> a1, a2, a3;
  AttentionCache self_attn;
  AttentionCache cross_attn;
  std::vector<double> h_mid1, h_mid2;
  std::vector<double> fc1_pre, fc1_act;
};

/// Activations kept by `forward` for `backward`.
struct ForwardCache {
  std::vector<double> patches;      // [tokens x patch_dim]
  std::vector<double> time_feat;    // sinusoidal features [dim]
  std::vector<double> ref_patches;  // [ref_tokens x patch_dim]
  std::vector<double> cond;         // condition tokens [cond_tokens x dim]
  std::size_t cond_tokens = 0;
  int effect = -1;
  std::vector<BlockCache> blocks;
  std::vector<double> h_final;
  LayerNormCache ln_final;
  std::vector<double> a_final;
  double out_scale = 1.0;
};

/// Output preconditioning: the model returns v = skip * x_t + scale * F, where
/// skip * x_t is the best linear estimate of x1 - x0 from x_t = t x1 + (1 - t) x0
/// when x1 has RMS `data_std` and x0 ~ N(0, I), and scale is the residual RMS.
struct Preconditioning {
  double skip = 0.0;
  double scale = 1.0;
};
Preconditioning velocity_preconditioning(double t, double data_std);

/// Tiny velocity-prediction transformer over the patchified joint latent.
///
/// Tokens are 3*p*p latent patches. Each block runs pre-norm self-attention over
/// all tokens, pre-norm cross-attention from tokens to the condition tokens and
/// a GELU MLP, each with a residual connection. A sinusoidal embedding of t and
/// factorised learned (frame, row, column) positional embeddings are added to
/// the input tokens; reference tokens share the row/column embeddings. The
/// reference patch at each (row, column) is also projected and added to every
/// frame's token there, the channel-wise image conditioning of I2V models.
class Denoiser {
 public:
  Denoiser(DenoiserConfig cfg, LatentShape shape, LayoutMode layout, int effect_count = 4);

  ParamStore init_params(std::uint64_t seed) const;

  LatentGrid forward(const ParamStore& params, const LatentGrid& x, double t, const Condition& cond,
                     ForwardCache* cache = nullptr) const;

  /// Accumulates dL/dparams into `grad` (laid out like `params`) given dL/doutput.
  void backward(const ParamStore& params, const ForwardCache& cache, const LatentGrid& d_out,
                std::span<double> grad) const;

  const DenoiserConfig& config() const { return cfg_; }
  const LatentShape& shape() const { return shape_; }
  LayoutMode layout() const { return layout_; }
  std::size_t tokens() const { return tokens_; }
  std::size_t ref_tokens() const { return rows_ * cols_; }
  /// Whether token `i` (frame-major, then row, then column) lies in the alpha half.
  bool token_is_alpha(std::size_t i) const { return alpha_token_[i] != 0; }
  /// Shape a reference latent must have.
  LatentGrid reference_shape() const { return LatentGrid(1, 3, shape_.height, shape_.width); }

 private:
  struct BlockParams {
    std::size_t ln1_g, ln1_b, q, k, v, o, o_b;
    std::size_t ln2_g, ln2_b, xq, xk, xv, xo, xo_b;
    std::size_t ln3_g, ln3_b, fc1, fc1_b, fc2, fc2_b;
  };
  struct Layout {
    std::size_t patch_in, patch_in_b, time_w, time_b, pos_frame, pos_row, pos_col;
    std::size_t ref_in, ref_in_b, ref_add, ref_add_b, ref_add_null, effect, null_token;
    std::vector<BlockParams> blocks;
    std::size_t final_g, final_b, patch_out, patch_out_b;
  };

  void patchify(const LatentGrid& x, std::size_t frames, std::vector<double>& out) const;
  bool self_masked(std::size_t q, std::size_t k) const;
  bool cross_masked(std::size_t q, std::size_t k, bool conditional) const;

  DenoiserConfig cfg_;
  LatentShape shape_;
  LayoutMode layout_;
  int effect_count_;
  std::size_t rows_ = 0, cols_ = 0, tokens_ = 0, patch_dim_ = 0;
  std::vector<std::uint8_t> alpha_token_;
  Layout layout_idx_{};
  ParamStore prototype_;
};

/// Sinusoidal embedding of t in [0, 1] (scaled by 1000) with `dim` features.
std::vector<double> time_features(double t, std::size_t dim);

}  // namespace transtext
