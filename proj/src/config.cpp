#include "transtext/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "transtext/glyph.hpp"

namespace transtext {

using nlohmann::json;

std::string to_string(ReferenceStyle style) { return style == ReferenceStyle::Trimap ? "trimap" : "duplicate"; }

ReferenceStyle parse_reference_style(std::string_view name) {
  if (name == "trimap") return ReferenceStyle::Trimap;
  if (name == "duplicate") return ReferenceStyle::Duplicate;
  throw std::invalid_argument("unknown reference style '" + std::string(name) + "' (expected trimap|duplicate)");
}

std::string to_string(TemporalReference choice) { return choice == TemporalReference::Rgb ? "rgb" : "trimap"; }

TemporalReference parse_temporal_reference(std::string_view name) {
  if (name == "rgb") return TemporalReference::Rgb;
  if (name == "trimap") return TemporalReference::Trimap;
  throw std::invalid_argument("unknown temporal reference '" + std::string(name) + "' (expected rgb|trimap)");
}

json to_json(const RunConfig& c) {
  json j;
  j["data"] = {{"train_clips", c.data.train_clips}, {"val_clips", c.data.val_clips}, {"frames", c.data.frames},
               {"height", c.data.height},           {"width", c.data.width},         {"seed", c.data.seed}};
  j["model"] = {{"patch_size", c.model.patch_size},
                {"embed_dim", c.model.embed_dim},
                {"blocks", c.model.blocks},
                {"heads", c.model.heads},
                {"data_std", c.model.data_std},
                {"mask_mode", to_string(c.model.mask_mode)}};
  j["train"] = {{"lambda_rec", c.train.core.lambda_rec},
                {"learning_rate", c.train.core.learning_rate},
                {"weight_decay", c.train.core.weight_decay},
                {"steps", c.train.core.steps},
                {"batch_size", c.train.core.batch_size},
                {"cond_drop_prob", c.train.core.cond_drop_prob},
                {"seed", c.train.core.seed},
                {"log_every", c.train.log_every},
                {"checkpoint_every", c.train.checkpoint_every}};
  j["sample"] = {{"num_steps", c.sample.core.num_steps},
                 {"cfg_scale", c.sample.core.cfg_scale},
                 {"seed", c.sample.core.seed},
                 {"clip", c.sample.clip},
                 {"effect", c.sample.effect}};
  j["flow"] = {{"pyramid_levels", c.flow.pyramid_levels},
               {"pyramid_scale", c.flow.pyramid_scale},
               {"window", c.flow.window},
               {"iterations", c.flow.iterations},
               {"poly_n", c.flow.poly_n},
               {"poly_sigma", c.flow.poly_sigma}};
  j["eval"] = {{"tau", c.eval.tau}, {"max_clips", c.eval.max_clips}};
  j["layout"] = {{"mode", to_string(c.layout.mode)},
                 {"reference", to_string(c.layout.reference)},
                 {"temporal_reference", to_string(c.layout.temporal_reference)},
                 {"beta", c.layout.beta}};
  j["ablate"] = {{"seeds", c.ablate.seeds},
                 {"patch_size", c.ablate.patch_size},
                 {"embed_dim", c.ablate.embed_dim},
                 {"batch_size", c.ablate.batch_size},
                 {"learning_rate", c.ablate.learning_rate},
                 {"eval_clips", c.ablate.eval_clips},
                 {"eval_steps", c.ablate.eval_steps},
                 {"variants", c.ablate.variants}};
  j["paths"] = {{"dataset", c.paths.dataset}, {"checkpoint", c.paths.checkpoint}, {"pred", c.paths.pred}, {"gt", c.paths.gt}};
  return j;
}

namespace {

// Rejects keys the defaults do not know about, recursively.
void check_known(const json& defaults, const json& given, const std::string& prefix) {
  if (!given.is_object()) throw std::invalid_argument("config" + (prefix.empty() ? "" : " section '" + prefix + "'") + " must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) throw std::invalid_argument("unknown config key '" + path + "'");
    if (defaults[key].is_object()) check_known(defaults[key], value, path);
  }
}

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& path) {
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + path + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const json& given) {
  const json defaults = to_json(RunConfig{});
  check_known(defaults, given, "");
  json j = defaults;
  j.merge_patch(given);

  RunConfig c;
  const auto& d = j["data"];
  read(d, "train_clips", c.data.train_clips, "data");
  read(d, "val_clips", c.data.val_clips, "data");
  read(d, "frames", c.data.frames, "data");
  read(d, "height", c.data.height, "data");
  read(d, "width", c.data.width, "data");
  read(d, "seed", c.data.seed, "data");

  const auto& m = j["model"];
  read(m, "patch_size", c.model.patch_size, "model");
  read(m, "embed_dim", c.model.embed_dim, "model");
  read(m, "blocks", c.model.blocks, "model");
  read(m, "heads", c.model.heads, "model");
  read(m, "data_std", c.model.data_std, "model");
  std::string s;
  read(m, "mask_mode", s, "model");
  c.model.mask_mode = parse_mask_mode(s);

  const auto& t = j["train"];
  read(t, "lambda_rec", c.train.core.lambda_rec, "train");
  read(t, "learning_rate", c.train.core.learning_rate, "train");
  read(t, "weight_decay", c.train.core.weight_decay, "train");
  read(t, "steps", c.train.core.steps, "train");
  read(t, "batch_size", c.train.core.batch_size, "train");
  read(t, "cond_drop_prob", c.train.core.cond_drop_prob, "train");
  read(t, "seed", c.train.core.seed, "train");
  read(t, "log_every", c.train.log_every, "train");
  read(t, "checkpoint_every", c.train.checkpoint_every, "train");

  const auto& sm = j["sample"];
  read(sm, "num_steps", c.sample.core.num_steps, "sample");
  read(sm, "cfg_scale", c.sample.core.cfg_scale, "sample");
  read(sm, "seed", c.sample.core.seed, "sample");
  read(sm, "clip", c.sample.clip, "sample");
  read(sm, "effect", c.sample.effect, "sample");

  const auto& f = j["flow"];
  read(f, "pyramid_levels", c.flow.pyramid_levels, "flow");
  read(f, "pyramid_scale", c.flow.pyramid_scale, "flow");
  read(f, "window", c.flow.window, "flow");
  read(f, "iterations", c.flow.iterations, "flow");
  read(f, "poly_n", c.flow.poly_n, "flow");
  read(f, "poly_sigma", c.flow.poly_sigma, "flow");

  read(j["eval"], "tau", c.eval.tau, "eval");
  read(j["eval"], "max_clips", c.eval.max_clips, "eval");

  const auto& l = j["layout"];
  read(l, "mode", s, "layout");
  c.layout.mode = parse_layout(s);
  read(l, "reference", s, "layout");
  c.layout.reference = parse_reference_style(s);
  read(l, "temporal_reference", s, "layout");
  c.layout.temporal_reference = parse_temporal_reference(s);
  read(l, "beta", c.layout.beta, "layout");

  const auto& a = j["ablate"];
  read(a, "seeds", c.ablate.seeds, "ablate");
  read(a, "patch_size", c.ablate.patch_size, "ablate");
  read(a, "embed_dim", c.ablate.embed_dim, "ablate");
  read(a, "batch_size", c.ablate.batch_size, "ablate");
  read(a, "learning_rate", c.ablate.learning_rate, "ablate");
  read(a, "eval_clips", c.ablate.eval_clips, "ablate");
  read(a, "eval_steps", c.ablate.eval_steps, "ablate");
  read(a, "variants", c.ablate.variants, "ablate");

  const auto& p = j["paths"];
  read(p, "dataset", c.paths.dataset, "paths");
  read(p, "checkpoint", c.paths.checkpoint, "paths");
  read(p, "pred", c.paths.pred, "paths");
  read(p, "gt", c.paths.gt, "paths");
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw std::invalid_argument("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw std::invalid_argument("override key '" + key + "' descends into a non-section");
    node = &(*node)[parts[i]];
  }
  if (node->is_null()) *node = json::object();
  (*node)[parts.back()] = std::move(value);
}

void validate(const RunConfig& c) {
  if (c.data.train_clips == 0 || c.data.val_clips == 0) throw std::invalid_argument("data.train_clips and data.val_clips must be >= 1");
  ClipSpec probe;
  probe.glyph.text = "A";
  probe.frames = c.data.frames;
  probe.height = c.data.height;
  probe.width = c.data.width;
  validate(probe);
  validate(c.model);
  // the pooled frame must split evenly into patches, for the ablation model too
  const std::size_t step = kPoolFactor * std::max(c.model.patch_size, c.ablate.patch_size);
  if (c.data.height % step != 0 || c.data.width % step != 0)
    throw std::invalid_argument("data.height and data.width must be multiples of " + std::to_string(step));
  validate(effective_train_config(c));
  if (c.train.log_every == 0) throw std::invalid_argument("train.log_every must be >= 1");
  if (c.train.checkpoint_every == 0) throw std::invalid_argument("train.checkpoint_every must be >= 1");
  validate(c.sample.core);
  if (c.sample.effect >= kEffectCount) throw std::invalid_argument("sample.effect must be -1 or an effect index below " + std::to_string(kEffectCount));
  validate(c.flow);
  if (!(c.eval.tau >= 0.0)) throw std::invalid_argument("eval.tau must be >= 0");
  if (c.layout.beta < 0 || c.layout.beta > 255) throw std::invalid_argument("layout.beta must lie in [0, 255]");
  if (c.ablate.seeds.empty()) throw std::invalid_argument("ablate.seeds must not be empty");
  if (c.ablate.eval_steps == 0) throw std::invalid_argument("ablate.eval_steps must be >= 1");
  DenoiserConfig ab = c.model;
  ab.patch_size = c.ablate.patch_size;
  ab.embed_dim = c.ablate.embed_dim;
  validate(ab);
  if (c.ablate.batch_size == 0) throw std::invalid_argument("ablate.batch_size must be >= 1");
  if (!(c.ablate.learning_rate >= 0.0)) throw std::invalid_argument("ablate.learning_rate must be >= 0");
}

TrainConfig effective_train_config(const RunConfig& cfg) {
  TrainConfig t = cfg.train.core;
  t.layout = cfg.layout.mode;
  return t;
}

RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!file.empty()) {
    std::ifstream is(file);
    if (!is) throw std::invalid_argument("cannot read config file " + file.string());
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument("config file " + file.string() + " is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig cfg = run_config_from_json(j);
  validate(cfg);
  return cfg;
}

}  // namespace transtext
