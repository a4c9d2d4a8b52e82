#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "transtext/config.hpp"
#include "transtext/denoiser.hpp"
#include "transtext/glyph.hpp"
#include "transtext/metrics.hpp"
#include "transtext/sampler.hpp"
#include "transtext/train.hpp"

namespace transtext {

/// How a clip is turned into a training example.
struct ExampleOptions {
  LayoutMode layout = LayoutMode::WidthWise;
  ReferenceStyle style = ReferenceStyle::Trimap;
  TemporalReference temporal = TemporalReference::Rgb;
  int beta = kDefaultTrimapBeta;
};

ExampleOptions example_options(const LayoutConfig& cfg);

/// Joint latent extent for clips of `frames` x `height` x `width` pixels.
LatentShape latent_shape_for(std::size_t frames, std::size_t height, std::size_t width, LayoutMode layout);

/// One clip as stored on disk: premultiplied RGB frames and alpha-as-RGB frames.
struct ClipData {
  std::string id;
  int effect = 0;
  Clip rgb;
  Clip alpha_rgb;
};

/// In-memory equivalent of reading a clip written by `build_dataset`.
ClipData clip_data_from(const RgbaClip& clip, std::string id, int effect);

/// Encoded composed reference built from the clip's middle RGB frame.
LatentGrid reference_latent(const Clip& rgb, const ExampleOptions& opts);

TrainingExample prepare_example(const ClipData& clip, const ExampleOptions& opts);
TrainingExample example_from_clip(const RgbaClip& clip, int effect, const ExampleOptions& opts);

/// Renders the dataset of `data` in memory, split exactly like `build_dataset`.
struct DatasetSplit {
  std::vector<ClipData> train;
  std::vector<ClipData> val;
};
DatasetSplit render_dataset(const DataConfig& data);

/// Loads a dataset directory written by `synth`.
DatasetSplit load_dataset(const std::filesystem::path& dir);

struct GeneratedClip {
  CompositeClip joint;
  Clip rgb;
  Clip alpha_rgb;
  MatteClip alpha;
};

GeneratedClip generate_clip(const Denoiser& model, const ParamStore& params, const LatentGrid& reference, int effect,
                            const SampleConfig& cfg);

struct ClipScore {
  double soft_miou = 0.0;
  AlignmentReport alignment;
};

/// Soft alpha-mIoU of the predicted matte against the ground truth, and the
/// alignment score between the predicted RGB and alpha halves.
ClipScore score_clip(const Clip& pred_rgb, const Clip& pred_alpha_rgb, const Clip& gt_alpha_rgb, const FlowConfig& flow,
                     double tau);

struct ScoreSummary {
  std::vector<ClipScore> clips;
  double soft_miou = 0.0;
  AlignmentReport alignment;  // field-wise mean over clips
};

ScoreSummary summarize(std::vector<ClipScore> clips);

/// One row of the ablation grid.
struct AblationVariant {
  std::string name;
  LayoutMode layout = LayoutMode::WidthWise;
  ReferenceStyle style = ReferenceStyle::Duplicate;
  double lambda_rec = 0.0;
};

/// Layout rows (duplicate reference, lambda 0), the trimap row (width-wise,
/// lambda 0) and the lambda sweep on width-wise + trimap, with the repeated
/// width-wise + trimap + lambda 0 configuration listed once.
std::vector<AblationVariant> ablation_grid();

struct AblationRun {
  AblationVariant variant;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  ScoreSummary scores;
  double seconds = 0.0;
};

struct AblationSettings {
  DenoiserConfig model;
  TrainConfig train;
  SampleConfig sample;
  FlowConfig flow;
  double tau = kDefaultValidTau;
  int beta = kDefaultTrimapBeta;
  std::size_t eval_clips = 0;  // 0 = all
};

AblationSettings ablation_settings(const RunConfig& cfg);

/// Trains one variant from scratch with `seed` and scores it on the validation clips.
AblationRun run_ablation_variant(const AblationVariant& variant, const DatasetSplit& data,
                                 const AblationSettings& settings, std::uint64_t seed);

std::string ablation_markdown(const std::vector<AblationRun>& runs);
nlohmann::json ablation_json(const std::vector<AblationRun>& runs);
nlohmann::json alignment_json(const AlignmentReport& r);

}  // namespace transtext
