#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "transtext/denoiser.hpp"
#include "transtext/flow.hpp"
#include "transtext/layout.hpp"
#include "transtext/sampler.hpp"
#include "transtext/train.hpp"

#include "json.hpp"

namespace transtext {

struct DataConfig {
  std::size_t train_clips = 256;
  std::size_t val_clips = 32;
  std::size_t frames = 9;
  std::size_t height = 32;
  std::size_t width = 32;
  std::uint64_t seed = 0;

  double split_fraction() const {
    return static_cast<double>(train_clips) / static_cast<double>(train_clips + val_clips);
  }
};

struct LayoutConfig {
  LayoutMode mode = LayoutMode::WidthWise;
  ReferenceStyle reference = ReferenceStyle::Trimap;
  TemporalReference temporal_reference = TemporalReference::Rgb;
  int beta = kDefaultTrimapBeta;
};

struct TrainRunConfig {
  TrainConfig core;
  std::size_t log_every = 10;
  std::size_t checkpoint_every = 500;
};

struct SampleRunConfig {
  SampleConfig core;
  std::string clip;  // dataset clip id whose middle frame is the reference; empty = first val clip
  int effect = -1;   // -1 = the clip's own effect
};

struct EvalConfig {
  double tau = 0.1;
  std::size_t max_clips = 0;  // 0 = all validation clips
};

struct AblationConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  // the grid trains 3 x |variants| models, so it uses a smaller model than `model`
  std::size_t patch_size = 4;
  std::size_t embed_dim = 48;
  std::size_t batch_size = 2;
  double learning_rate = 2e-3;
  std::size_t eval_clips = 0;  // 0 = all validation clips
  std::size_t eval_steps = 50;
  std::vector<std::string> variants;  // empty = full grid
};

struct PathsConfig {
  std::string dataset = "data";
  std::string checkpoint = "run/checkpoint.ttxt";
  std::string pred;
  std::string gt;
};

struct RunConfig {
  DataConfig data;
  DenoiserConfig model;
  TrainRunConfig train;
  SampleRunConfig sample;
  FlowConfig flow;
  EvalConfig eval;
  LayoutConfig layout;
  AblationConfig ablate;
  PathsConfig paths;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Strict: unknown keys and wrongly typed values are errors.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies a dotted `section.key=value` override; the value is parsed as JSON
/// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Defaults, then the optional file, then overrides in order; validated.
RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

/// Checks every section against its owner's invariants.
void validate(const RunConfig& cfg);

/// Pins the training layout from the layout section.
TrainConfig effective_train_config(const RunConfig& cfg);

std::string to_string(ReferenceStyle style);
ReferenceStyle parse_reference_style(std::string_view name);
std::string to_string(TemporalReference choice);
TemporalReference parse_temporal_reference(std::string_view name);

}  // namespace transtext
