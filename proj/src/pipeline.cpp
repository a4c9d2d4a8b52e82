#include "transtext/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "transtext/rng.hpp"

namespace transtext {

ExampleOptions example_options(const LayoutConfig& cfg) {
  return {cfg.mode, cfg.reference, cfg.temporal_reference, cfg.beta};
}

LatentShape latent_shape_for(std::size_t frames, std::size_t height, std::size_t width, LayoutMode layout) {
  if (height % kPoolFactor != 0 || width % kPoolFactor != 0)
    throw std::invalid_argument("clip dimensions must be divisible by the pooling factor");
  const std::size_t h = height / kPoolFactor, w = width / kPoolFactor;
  switch (layout) {
    case LayoutMode::WidthWise: return {frames, h, 2 * w};
    case LayoutMode::HeightWise: return {frames, 2 * h, w};
    case LayoutMode::TemporalWise: return {2 * frames, h, w};
  }
  throw std::logic_error("bad layout");
}

ClipData clip_data_from(const RgbaClip& clip, std::string id, int effect) {
  ClipData d;
  d.id = std::move(id);
  d.effect = effect;
  for (const auto& f : premultiplied_clip(clip)) d.rgb.push_back(quantize8(f));
  d.alpha_rgb = alpha_rgb_clip(clip);
  return d;
}

LatentGrid reference_latent(const Clip& rgb, const ExampleOptions& opts) {
  if (rgb.size() % 2 == 0) throw std::invalid_argument("reference needs an odd frame count, got " + std::to_string(rgb.size()));
  const ReferenceImage ref = compose_reference(rgb[rgb.size() / 2], opts.beta, opts.layout, opts.temporal, opts.style);
  return encode_frame(ref.composed);
}

TrainingExample prepare_example(const ClipData& clip, const ExampleOptions& opts) {
  TrainingExample ex;
  ex.x1 = encode_latent(concat_joint(clip.rgb, clip.alpha_rgb, opts.layout));
  ex.reference = reference_latent(clip.rgb, opts);
  ex.effect = clip.effect;
  return ex;
}

TrainingExample example_from_clip(const RgbaClip& clip, int effect, const ExampleOptions& opts) {
  return prepare_example(clip_data_from(clip, "", effect), opts);
}

DatasetSplit render_dataset(const DataConfig& data) {
  const std::size_t n = data.train_clips + data.val_clips;
  const auto specs = random_clip_specs(n, data.frames, data.height, data.width, data.seed);
  const auto [train_idx, val_idx] = split_indices(n, data.split_fraction(), data.seed);
  std::vector<ClipData> all(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = clip_data_from(render_effect(specs[i]), clip_id(i), static_cast<int>(specs[i].effect));
  }
  DatasetSplit out;
  for (std::size_t i : train_idx) out.train.push_back(std::move(all[i]));
  for (std::size_t i : val_idx) out.val.push_back(std::move(all[i]));
  return out;
}

DatasetSplit load_dataset(const std::filesystem::path& dir) {
  const DatasetManifest manifest = read_manifest(dir / "manifest.json");
  DatasetSplit out;
  for (const auto& e : manifest.clips) {
    ClipData d;
    d.id = e.id;
    d.effect = static_cast<int>(e.effect);
    std::tie(d.rgb, d.alpha_rgb) = load_clip_frames(dir / e.id, e.frames);
    (e.split == "train" ? out.train : out.val).push_back(std::move(d));
  }
  return out;
}

GeneratedClip generate_clip(const Denoiser& model, const ParamStore& params, const LatentGrid& reference, int effect,
                            const SampleConfig& cfg) {
  GeneratedClip g;
  g.joint = sample_euler(model, params, reference, effect, cfg);
  // quantize as a PNG round trip would, so in-memory and on-disk scores agree
  for (auto& f : g.joint.frames) f = quantize8(f);
  std::tie(g.rgb, g.alpha_rgb) = split_joint(g.joint, model.layout());
  g.alpha = decode_alpha_clip(g.alpha_rgb);
  return g;
}

ClipScore score_clip(const Clip& pred_rgb, const Clip& pred_alpha_rgb, const Clip& gt_alpha_rgb, const FlowConfig& flow,
                     double tau) {
  ClipScore s;
  s.soft_miou = soft_alpha_miou(decode_alpha_clip(pred_alpha_rgb), decode_alpha_clip(gt_alpha_rgb));
  s.alignment = alignment_score(pred_rgb, pred_alpha_rgb, flow, tau);
  return s;
}

ScoreSummary summarize(std::vector<ClipScore> clips) {
  ScoreSummary s;
  s.clips = std::move(clips);
  if (s.clips.empty()) return s;
  AlignmentReport m{0, 0, 0, 0, 0, 0, 0, 0, 0};
  double iou = 0.0;
  for (const auto& c : s.clips) {
    iou += c.soft_miou;
    const auto& a = c.alignment;
    m.epe += a.epe;
    m.angle_deg += a.angle_deg;
    m.mag_corr += a.mag_corr;
    m.dir_cos += a.dir_cos;
    m.s_epe += a.s_epe;
    m.s_angle += a.s_angle;
    m.s_mag += a.s_mag;
    m.s_dir += a.s_dir;
    m.final_score += a.final_score;
  }
  const double k = static_cast<double>(s.clips.size());
  for (double* v : {&m.epe, &m.angle_deg, &m.mag_corr, &m.dir_cos, &m.s_epe, &m.s_angle, &m.s_mag, &m.s_dir, &m.final_score})
    *v /= k;
  s.soft_miou = iou / k;
  s.alignment = m;
  return s;
}

std::vector<AblationVariant> ablation_grid() {
  std::vector<AblationVariant> grid = {
      {"w_dup_l0", LayoutMode::WidthWise, ReferenceStyle::Duplicate, 0.0},
      {"h_dup_l0", LayoutMode::HeightWise, ReferenceStyle::Duplicate, 0.0},
      {"t_rgb_l0", LayoutMode::TemporalWise, ReferenceStyle::Duplicate, 0.0},
  };
  for (double lambda : {0.0, 0.1, 0.3, 0.5, 0.8}) {
    std::ostringstream name;
    name << "w_trimap_l" << lambda;
    grid.push_back({name.str(), LayoutMode::WidthWise, ReferenceStyle::Trimap, lambda});
  }
  return grid;
}

AblationSettings ablation_settings(const RunConfig& cfg) {
  AblationSettings s;
  s.model = cfg.model;
  s.model.patch_size = cfg.ablate.patch_size;
  s.model.embed_dim = cfg.ablate.embed_dim;
  s.train = effective_train_config(cfg);
  s.train.batch_size = cfg.ablate.batch_size;
  s.train.learning_rate = cfg.ablate.learning_rate;
  s.sample = cfg.sample.core;
  s.sample.num_steps = cfg.ablate.eval_steps;
  s.flow = cfg.flow;
  s.tau = cfg.eval.tau;
  s.beta = cfg.layout.beta;
  s.eval_clips = cfg.ablate.eval_clips;
  return s;
}

AblationRun run_ablation_variant(const AblationVariant& variant, const DatasetSplit& data,
                                 const AblationSettings& settings, std::uint64_t seed) {
  if (data.train.empty() || data.val.empty()) throw std::invalid_argument("ablation needs train and val clips");
  const auto start = std::chrono::steady_clock::now();
  const ExampleOptions opts{variant.layout, variant.style, TemporalReference::Rgb, settings.beta};

  std::vector<TrainingExample> examples;
  examples.reserve(data.train.size());
  for (const auto& c : data.train) examples.push_back(prepare_example(c, opts));

  const auto& first = data.train.front();
  const Denoiser model(settings.model,
                       latent_shape_for(first.rgb.size(), first.rgb[0].height, first.rgb[0].width, variant.layout),
                       variant.layout);
  ParamStore params = model.init_params(Rng::derive(seed, 1).next_u64());
  AdamWState opt = make_adamw_state(params);

  TrainConfig tc = settings.train;
  tc.layout = variant.layout;
  tc.lambda_rec = variant.lambda_rec;
  tc.seed = Rng::derive(seed, 2).next_u64();

  // mean total loss over the last 5% of steps, a smoother summary than the final step
  const std::size_t tail = std::max<std::size_t>(1, tc.steps / 20);
  double tail_loss = 0.0;
  train_loop(model, examples, params, opt, tc, [&](const LossRecord& r) {
    if (r.step + tail >= tc.steps) tail_loss += r.loss.total;
  });

  const std::size_t n_eval = settings.eval_clips == 0 ? data.val.size() : std::min(settings.eval_clips, data.val.size());
  std::vector<ClipScore> scores(n_eval);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n_eval; ++i) {
    const auto& clip = data.val[i];
    SampleConfig sc = settings.sample;
    sc.seed = Rng::derive(seed, 0x100 + i).next_u64();
    const GeneratedClip g = generate_clip(model, params, reference_latent(clip.rgb, opts), clip.effect, sc);
    scores[i] = score_clip(g.rgb, g.alpha_rgb, clip.alpha_rgb, settings.flow, settings.tau);
  }

  AblationRun run;
  run.variant = variant;
  run.seed = seed;
  run.final_loss = tail_loss / static_cast<double>(std::min(tail, tc.steps));
  run.scores = summarize(std::move(scores));
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

nlohmann::json alignment_json(const AlignmentReport& r) {
  return {{"epe", r.epe},     {"angle_deg", r.angle_deg}, {"mag_corr", r.mag_corr}, {"dir_cos", r.dir_cos},
          {"s_epe", r.s_epe}, {"s_angle", r.s_angle},     {"s_mag", r.s_mag},       {"s_dir", r.s_dir},
          {"final_score", r.final_score}};
}

namespace {

struct VariantStats {
  const AblationVariant* variant = nullptr;
  std::vector<const AblationRun*> runs;
  double miou_mean = 0.0, miou_sd = 0.0, align_mean = 0.0, align_sd = 0.0;
};

std::vector<VariantStats> group_runs(const std::vector<AblationRun>& runs) {
  std::vector<VariantStats> out;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const VariantStats& v) { return v.variant->name == r.variant.name; });
    if (it == out.end()) {
      out.push_back({&r.variant, {}});
      it = out.end() - 1;
    }
    it->runs.push_back(&r);
  }
  for (auto& v : out) {
    const double k = static_cast<double>(v.runs.size());
    for (const auto* r : v.runs) {
      v.miou_mean += r->scores.soft_miou / k;
      v.align_mean += r->scores.alignment.final_score / k;
    }
    for (const auto* r : v.runs) {
      v.miou_sd += std::pow(r->scores.soft_miou - v.miou_mean, 2) / k;
      v.align_sd += std::pow(r->scores.alignment.final_score - v.align_mean, 2) / k;
    }
    v.miou_sd = std::sqrt(v.miou_sd);
    v.align_sd = std::sqrt(v.align_sd);
  }
  return out;
}

std::string reference_label(const AblationVariant& v) {
  if (v.layout == LayoutMode::TemporalWise) return "rgb";
  return to_string(v.style);
}

}  // namespace

std::string ablation_markdown(const std::vector<AblationRun>& runs) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "| variant | concat | reference | lambda | seeds | soft alpha-mIoU | RGBA alignment | final loss |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& v : group_runs(runs)) {
    double loss = 0.0;
    for (const auto* r : v.runs) loss += r->final_loss / static_cast<double>(v.runs.size());
    os << "| " << v.variant->name << " | " << to_string(v.variant->layout) << " | " << reference_label(*v.variant) << " | "
       << v.variant->lambda_rec << " | " << v.runs.size() << " | " << v.miou_mean << " +/- " << v.miou_sd << " | "
       << v.align_mean << " +/- " << v.align_sd << " | ";
    os.precision(5);
    os << loss << " |\n";
    os.precision(2);
  }
  return os.str();
}

nlohmann::json ablation_json(const std::vector<AblationRun>& runs) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& v : group_runs(runs)) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto* r : v.runs) {
      per_seed.push_back({{"seed", r->seed},
                          {"final_loss", r->final_loss},
                          {"soft_alpha_miou", r->scores.soft_miou},
                          {"rgba_alignment", alignment_json(r->scores.alignment)}});
    }
    rows.push_back({{"variant", v.variant->name},
                    {"layout", to_string(v.variant->layout)},
                    {"reference", reference_label(*v.variant)},
                    {"lambda_rec", v.variant->lambda_rec},
                    {"soft_alpha_miou_mean", v.miou_mean},
                    {"soft_alpha_miou_sd", v.miou_sd},
                    {"rgba_alignment_mean", v.align_mean},
                    {"rgba_alignment_sd", v.align_sd},
                    {"runs", per_seed}});
  }
  return {{"rows", rows}};
}

}  // namespace transtext
