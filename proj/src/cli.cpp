#include "transtext/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "transtext/checkpoint.hpp"
#include "transtext/config.hpp"
#include "transtext/gradcheck.hpp"
#include "transtext/image_io.hpp"
#include "transtext/kernels.hpp"
#include "transtext/pipeline.hpp"

namespace transtext {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Configuration problem detected before any work started.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".transtext.lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--set", c.sets, "override, e.g. --set train.steps=100 (repeatable)");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "seed for this subcommand's randomness");
}

RunConfig resolve(const Common& c, const char* seed_key) {
  std::vector<std::string> sets = c.sets;
  if (c.seed && seed_key) sets.push_back(std::string(seed_key) + "=" + std::to_string(*c.seed));
  try {
    return load_run_config(c.config, sets);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::size_t count_frames(const fs::path& dir) {
  std::size_t n = 0;
  while (fs::exists(dir / frame_name("rgb", n))) ++n;
  return n;
}

// --- synth ---------------------------------------------------------------

int cmd_synth(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve(c, "data.seed");
  const fs::path dir = c.out.empty() ? fs::path(cfg.paths.dataset) : fs::path(c.out);
  const auto specs = random_clip_specs(cfg.data.train_clips + cfg.data.val_clips, cfg.data.frames, cfg.data.height,
                                       cfg.data.width, cfg.data.seed);
  for (const auto& s : specs) validate(s);
  DirLock lock(dir);
  const DatasetManifest m = build_dataset(specs, cfg.data.split_fraction(), dir, cfg.data.seed);
  std::size_t n_train = 0;
  for (const auto& e : m.clips) n_train += e.split == "train";
  out << "wrote " << m.clips.size() << " clips (" << n_train << " train / " << m.clips.size() - n_train << " val) to "
      << dir.string() << "\n";
  return kExitOk;
}

// --- train ---------------------------------------------------------------

json checkpoint_blob(const RunConfig& cfg, const LatentShape& shape, std::size_t step) {
  return {{"run", to_json(cfg)}, {"shape", {{"frames", shape.frames}, {"height", shape.height}, {"width", shape.width}}}, {"step", step}};
}

int cmd_train(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve(c, "train.seed");
  const fs::path dir = c.out.empty() ? fs::path(cfg.paths.checkpoint).parent_path() : fs::path(c.out);
  if (dir.empty()) throw UsageError("train needs --out or a paths.checkpoint with a directory");

  DatasetSplit data;
  try {
    data = load_dataset(cfg.paths.dataset);
  } catch (const std::exception& e) {
    throw UsageError("cannot load dataset '" + cfg.paths.dataset + "': " + e.what());
  }
  if (data.train.empty()) throw UsageError("dataset has no training clips");

  const ExampleOptions opts = example_options(cfg.layout);
  std::vector<TrainingExample> examples;
  for (const auto& clip : data.train) examples.push_back(prepare_example(clip, opts));
  const auto& first = data.train.front();
  const LatentShape shape = latent_shape_for(first.rgb.size(), first.rgb[0].height, first.rgb[0].width, cfg.layout.mode);
  std::optional<Denoiser> model;
  try {
    model.emplace(cfg.model, shape, cfg.layout.mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  DirLock lock(dir);
  const TrainConfig tc = effective_train_config(cfg);
  ParamStore params = model->init_params(tc.seed);
  AdamWState opt = make_adamw_state(params);
  write_text(dir / "config.json", dump(to_json(cfg)));
  std::ofstream log(dir / "loss.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write loss log");
  const fs::path ck = dir / "checkpoint.ttxt";

  train_loop(*model, examples, params, opt, tc, [&](const LossRecord& r) {
    const std::size_t done = r.step + 1;
    if (done % cfg.train.log_every == 0 || done == tc.steps) {
      log << json{{"step", done}, {"lr", r.lr}, {"mse", r.loss.mse}, {"rec", r.loss.rec}, {"total", r.loss.total}}.dump() << "\n";
      log.flush();
      out << "step " << done << "/" << tc.steps << " loss " << r.loss.total << "\n";
    }
    if (done % cfg.train.checkpoint_every == 0 && done != tc.steps)
      save_checkpoint(ck, checkpoint_blob(cfg, shape, done).dump(), params);
  });
  save_checkpoint(ck, checkpoint_blob(cfg, shape, tc.steps).dump(), params);
  out << "checkpoint written to " << ck.string() << "\n";
  return kExitOk;
}

// --- sample --------------------------------------------------------------

int cmd_sample(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve(c, "sample.seed");
  const fs::path dir = c.out.empty() ? fs::path("samples") : fs::path(c.out);

  Checkpoint ck;
  RunConfig trained;
  LatentShape shape;
  try {
    ck = load_checkpoint(cfg.paths.checkpoint);
    const json blob = json::parse(ck.config_json);
    trained = run_config_from_json(blob.at("run"));
    shape = {blob.at("shape").at("frames").get<std::size_t>(), blob.at("shape").at("height").get<std::size_t>(),
             blob.at("shape").at("width").get<std::size_t>()};
  } catch (const std::exception& e) {
    throw UsageError("cannot load checkpoint '" + cfg.paths.checkpoint + "': " + e.what());
  }
  const Denoiser model(trained.model, shape, trained.layout.mode);
  if (!ck.params.same_layout(model.init_params(0))) throw UsageError("checkpoint tensors do not match its model config");

  DatasetSplit data;
  try {
    data = load_dataset(cfg.paths.dataset);
  } catch (const std::exception& e) {
    throw UsageError("cannot load dataset '" + cfg.paths.dataset + "': " + e.what());
  }
  const ClipData* ref = nullptr;
  for (const auto* split : {&data.val, &data.train})
    for (const auto& clip : *split)
      if (!ref && (cfg.sample.clip.empty() ? split == &data.val : clip.id == cfg.sample.clip)) ref = &clip;
  if (!ref) throw UsageError(cfg.sample.clip.empty() ? "dataset has no validation clip" : "clip '" + cfg.sample.clip + "' not in dataset");
  const int effect = cfg.sample.effect >= 0 ? cfg.sample.effect : ref->effect;

  const LatentGrid reference = reference_latent(ref->rgb, example_options(trained.layout));
  if (!reference.same_shape(model.reference_shape())) throw UsageError("reference clip size does not match the checkpoint");

  DirLock lock(dir);
  const GeneratedClip g = generate_clip(model, ck.params, reference, effect, cfg.sample.core);
  for (std::size_t i = 0; i < g.joint.frames.size(); ++i) write_rgb_png(dir / frame_name("joint", i), g.joint.frames[i]);
  for (std::size_t i = 0; i < g.rgb.size(); ++i) {
    write_rgb_png(dir / frame_name("rgb", i), g.rgb[i]);
    write_rgb_png(dir / frame_name("alpha", i), g.alpha_rgb[i]);
    write_rgba_png(dir / frame_name("preview", i), unpremultiply(g.rgb[i], g.alpha[i]), g.alpha[i]);
  }
  write_text(dir / "sample.json", dump({{"reference_clip", ref->id},
                                        {"effect", to_string(static_cast<EffectKind>(effect))},
                                        {"seed", cfg.sample.core.seed},
                                        {"num_steps", cfg.sample.core.num_steps},
                                        {"cfg_scale", cfg.sample.core.cfg_scale},
                                        {"layout", to_string(trained.layout.mode)}}));
  out << "wrote " << g.rgb.size() << " frames to " << dir.string() << "\n";
  return kExitOk;
}

// --- eval ----------------------------------------------------------------

std::vector<std::pair<std::string, fs::path>> clip_dirs(const fs::path& root) {
  std::vector<std::pair<std::string, fs::path>> out;
  if (fs::exists(root / frame_name("rgb", 0))) {
    out.emplace_back(root.filename().string(), root);
    return out;
  }
  if (!fs::is_directory(root)) throw UsageError("not a directory: " + root.string());
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / frame_name("rgb", 0))) out.emplace_back(e.path().filename().string(), e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw UsageError("no clips found under " + root.string());
  return out;
}

int cmd_eval(const Common& c, const std::string& pred_opt, const std::string& gt_opt, std::ostream& out) {
  const RunConfig cfg = resolve(c, nullptr);
  const fs::path pred_root = pred_opt.empty() ? fs::path(cfg.paths.pred) : fs::path(pred_opt);
  const fs::path gt_root = gt_opt.empty() ? fs::path(cfg.paths.gt) : fs::path(gt_opt);
  if (pred_root.empty() || gt_root.empty()) throw UsageError("eval needs --pred and --gt (or paths.pred / paths.gt)");
  const fs::path dir = c.out.empty() ? fs::path("eval") : fs::path(c.out);

  const auto preds = clip_dirs(pred_root);
  const bool single = preds.size() == 1 && preds[0].second == pred_root;
  std::vector<std::tuple<std::string, fs::path, fs::path, std::size_t>> jobs;
  for (const auto& [id, p] : preds) {
    const fs::path g = single ? gt_root : gt_root / id;
    const std::size_t n = count_frames(p);
    if (count_frames(g) != n) throw UsageError("clip '" + id + "': prediction and ground truth differ in frame count");
    if (n < 2) throw UsageError("clip '" + id + "' has fewer than 2 frames");
    jobs.emplace_back(id, p, g, n);
  }
  if (cfg.eval.max_clips > 0 && jobs.size() > cfg.eval.max_clips) jobs.resize(cfg.eval.max_clips);

  std::vector<ClipScore> scores(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& [id, p, g, n] = jobs[i];
    auto [pred_rgb, pred_alpha] = load_clip_frames(p, n);
    auto [gt_rgb, gt_alpha] = load_clip_frames(g, n);
    scores[i] = score_clip(pred_rgb, pred_alpha, gt_alpha, cfg.flow, cfg.eval.tau);
  }
  const ScoreSummary summary = summarize(scores);

  const char* reason = "FVD needs a pretrained video classifier and is not computed";
  json clips = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    clips.push_back({{"id", std::get<0>(jobs[i])},
                     {"fvd", nullptr},
                     {"fvd_reason", reason},
                     {"soft_alpha_miou", scores[i].soft_miou},
                     {"rgba_alignment", alignment_json(scores[i].alignment)}});
  }
  const json report = {{"clips", clips},
                       {"mean",
                        {{"clips", jobs.size()},
                         {"fvd", nullptr},
                         {"fvd_reason", reason},
                         {"soft_alpha_miou", summary.soft_miou},
                         {"rgba_alignment", alignment_json(summary.alignment)}}}};
  DirLock lock(dir);
  write_text(dir / "metrics.json", dump(report));
  out << "soft alpha-mIoU " << summary.soft_miou << "  RGBA alignment " << summary.alignment.final_score << "  ("
      << jobs.size() << " clips)\n";
  return kExitOk;
}

// --- ablate --------------------------------------------------------------

int cmd_ablate(const Common& c, std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve(c, nullptr);
  if (c.seed) cfg.ablate.seeds = {*c.seed};
  const fs::path dir = c.out.empty() ? fs::path("ablation") : fs::path(c.out);

  std::vector<AblationVariant> grid = ablation_grid();
  if (!cfg.ablate.variants.empty()) {
    std::vector<AblationVariant> chosen;
    for (const auto& name : cfg.ablate.variants) {
      auto it = std::find_if(grid.begin(), grid.end(), [&](const AblationVariant& v) { return v.name == name; });
      if (it == grid.end()) throw UsageError("unknown ablation variant '" + name + "'");
      chosen.push_back(*it);
    }
    grid = chosen;
  }
  const AblationSettings settings = ablation_settings(cfg);

  const fs::path manifest = fs::path(cfg.paths.dataset) / "manifest.json";
  DatasetSplit data;
  if (fs::exists(manifest)) {
    err << "loading dataset from " << cfg.paths.dataset << "\n";
    data = load_dataset(cfg.paths.dataset);
  } else {
    err << "rendering dataset in memory (data.seed = " << cfg.data.seed << ")\n";
    data = render_dataset(cfg.data);
  }

  DirLock lock(dir);
  std::vector<AblationRun> runs;
  for (const auto& v : grid) {
    for (std::uint64_t seed : cfg.ablate.seeds) {
      runs.push_back(run_ablation_variant(v, data, settings, seed));
      const auto& r = runs.back();
      err << v.name << " seed " << seed << ": soft alpha-mIoU " << r.scores.soft_miou << ", alignment "
          << r.scores.alignment.final_score << " (" << r.seconds << " s)\n";
    }
  }
  const std::string md = ablation_markdown(runs);
  write_text(dir / "ablation.md", md);
  write_text(dir / "ablation.json", dump(ablation_json(runs)));
  out << md;
  return kExitOk;
}

// --- gradcheck -----------------------------------------------------------

int cmd_gradcheck(const Common& c, std::size_t count, double tolerance, std::ostream& out) {
  const RunConfig cfg = resolve(c, nullptr);
  if (count == 0) throw UsageError("--params must be >= 1");
  const std::uint64_t seed = c.seed.value_or(0);
  const GradCheckResult r = grad_check_default(cfg.model, cfg.layout.mode, cfg.train.core.lambda_rec, count, seed);
  out << "max relative error " << r.max_rel_error << " over " << r.checked << " parameters (tolerance " << tolerance << ")\n";
  return r.max_rel_error < tolerance ? kExitOk : kExitRuntime;
}

void apply_thread_env() {
  const char* env = std::getenv("TRANSTEXT_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw UsageError(std::string("TRANSTEXT_THREADS must be a positive integer, got '") + env + "'");
  kernels::set_thread_limit(static_cast<int>(n));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"transtext: transparent glyph animation toolkit", "transtext"};
  app.require_subcommand(1);
  Common common;
  auto* synth = app.add_subcommand("synth", "render the synthetic RGBA glyph dataset");
  auto* train = app.add_subcommand("train", "train the joint RGB + alpha velocity model");
  auto* sample = app.add_subcommand("sample", "sample a clip from a checkpoint");
  auto* eval = app.add_subcommand("eval", "score predicted clips against ground truth");
  auto* ablate = app.add_subcommand("ablate", "run the layout / reference / lambda ablation grid");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the model gradients");
  for (auto* cmd : {synth, train, sample, eval, ablate, gradcheck}) add_common(cmd, common);
  std::string pred, gt;
  eval->add_option("--pred", pred, "directory of predicted clips");
  eval->add_option("--gt", gt, "directory of ground-truth clips");
  std::size_t gc_params = 256;
  double gc_tol = 1e-4;
  gradcheck->add_option("--params", gc_params, "number of sampled parameters");
  gradcheck->add_option("--tolerance", gc_tol, "maximum accepted relative error");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    apply_thread_env();
    if (synth->parsed()) return cmd_synth(common, out);
    if (train->parsed()) return cmd_train(common, out);
    if (sample->parsed()) return cmd_sample(common, out);
    if (eval->parsed()) return cmd_eval(common, pred, gt, out);
    if (ablate->parsed()) return cmd_ablate(common, out, err);
    if (gradcheck->parsed()) return cmd_gradcheck(common, gc_params, gc_tol, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace transtext
