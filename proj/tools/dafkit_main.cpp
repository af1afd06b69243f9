// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// dafkit: train a small diffusion backbone, adapt it to new concepts via
// embedding fine-tuning, build synthetic augmentation stores and run the
// few-shot evaluation harness.
//
// Exit codes: 0 ok, 2 usage/input error, 3 numerical failure, 4 partial
// completion.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "dafkit/errors.hpp"
#include "dafkit/fewshot/experiment.hpp"
#include "dafkit/io/atomic_file.hpp"
#include "dafkit/io/checkpoint.hpp"
#include "dafkit/io/config.hpp"
#include "dafkit/io/hash.hpp"
#include "dafkit/io/manifest.hpp"
#include "dafkit/io/png_io.hpp"
#include "dafkit/io/report_io.hpp"

namespace fs = std::filesystem;
using namespace dafkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitPartial = 4;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  int workers = 1;
};

ConfigDoc load_config_or_exit(const std::string& path) {
  if (!fs::exists(path)) {
    std::cerr << "error: config file not found: " << path << "\n";
    std::exit(kExitInput);
  }
  try {
    return ConfigDoc::parse_file(path);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot parse config " << path << ": " << e.what()
              << "\n";
    std::exit(kExitInput);
  }
}

// Class subdirectories (sorted) with their images; optional "<name>.mask.png"
// files attach object masks.
struct ClassData {
  std::vector<std::string> class_names;             // sorted directory names
  std::map<int, std::vector<DatasetRecord>> records;  // class id -> records
};

ClassData read_class_dir(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::invalid_argument("data directory not found: " + dir.string());
  ClassData data;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory())
      data.class_names.push_back(entry.path().filename().string());
  std::sort(data.class_names.begin(), data.class_names.end());
  if (data.class_names.empty())
    throw std::invalid_argument("no class subdirectories in " + dir.string());

  for (int cls = 0; cls < static_cast<int>(data.class_names.size()); ++cls) {
    std::vector<fs::path> files;
    for (const auto& entry :
         fs::directory_iterator(dir / data.class_names[cls])) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() == ".png" &&
          name.find(".mask.png") == std::string::npos)
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw std::invalid_argument("class directory has no images: " +
                                  (dir / data.class_names[cls]).string());
    for (const auto& file : files) {
      DatasetRecord rec;
      rec.image = read_png(file);
      rec.label = cls;
      fs::path mask_path = file;
      mask_path.replace_extension();
      mask_path += ".mask.png";
      if (fs::exists(mask_path))
        rec.masks.emplace_back(cls, read_mask_png(mask_path));
      data.records[cls].push_back(std::move(rec));
    }
  }
  return data;
}

int cmd_train(const CommonOpts& opts) {
  Timer timer;
  const ConfigDoc doc = load_config_or_exit(opts.config_path);
  ExperimentConfig cfg = doc.to_experiment_config();
  if (opts.seed) cfg.master_seed = *opts.seed;
  cfg.workers = opts.workers;

  try {
    const TrainedStack stack = train_stack(cfg);
    const fs::path out(opts.out_dir);
    fs::create_directories(out);
    const fs::path ck = out / "checkpoint.dafkit";
    save_checkpoint(ck, stack.schedule, stack.net, stack.table,
                    cfg.data.resolution, doc.dump_toml());

    RunManifest manifest;
    manifest.command = "train";
    manifest.config_sha256 = sha256_hex(doc.dump_toml());
    manifest.inputs = {opts.config_path};
    manifest.add_output(out, ck);
    manifest.metrics["holdout_loss_init"] = stack.holdout_loss_init;
    manifest.metrics["holdout_loss_final"] = stack.holdout_loss_final;
    manifest.metrics["extractor_train_accuracy"] =
        stack.extractor_train_accuracy;
    manifest.timings_ms["total"] = timer.ms();
    manifest.write(out / "run_manifest.json");

    std::cout << "checkpoint: " << ck.string() << "\n";
    std::cout << "holdout loss " << stack.holdout_loss_init << " -> "
              << stack.holdout_loss_final << "\n";
    return kExitOk;
  } catch (const TrainingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_invert(const std::string& checkpoint_path, const std::string& data_dir,
               const CommonOpts& opts, const std::string& granularity) {
  Timer timer;
  try {
    LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
    const ClassData data = read_class_dir(data_dir);

    const ConfigDoc doc = ck.config_text.empty()
                              ? ConfigDoc{}
                              : ConfigDoc::parse_toml(ck.config_text);
    FinetuneConfig ft;
    ft.lr = doc.textual_inversion_learning_rate;
    ft.batch_size = doc.textual_inversion_batch_size;
    ft.steps = doc.textual_inversion_training_steps;
    ft.seed = opts.seed.value_or(doc.seed);
    ft.granularity = granularity == "specific"
                         ? ConceptTable::Granularity::per_image
                         : ConceptTable::Granularity::per_class;

    std::map<int, std::vector<const ImageTensor*>> class_images;
    for (const auto& [cls, records] : data.records)
      for (const auto& rec : records)
        class_images[cls].push_back(&rec.image);

    const std::string theta_before = theta_sha256(ck.net);
    const FinetuneResult result = finetune_concepts(
        ck.net, ck.table, class_images, ck.schedule, ft);
    const std::string theta_after = theta_sha256(ck.net);
    if (theta_before != theta_after) {
      std::cerr << "error: backbone parameters changed during inversion\n";
      return kExitNumeric;
    }

    const fs::path out(opts.out_dir);
    fs::create_directories(out);
    const fs::path ck_out = out / "checkpoint.dafkit";
    save_checkpoint(ck_out, ck.schedule, ck.net, result.table, ck.resolution,
                    ck.config_text);

    RunManifest manifest;
    manifest.command = "invert";
    manifest.config_sha256 = sha256_hex(ck.config_text);
    manifest.inputs = {checkpoint_path, data_dir};
    manifest.add_output(out, ck_out);
    manifest.metrics["classes"] = static_cast<double>(data.records.size());
    manifest.metrics["new_embeddings"] = static_cast<double>(
        result.table.size() - ck.table.size());
    manifest.timings_ms["total"] = timer.ms();
    manifest.write(out / "run_manifest.json");

    std::cout << "theta sha256 unchanged: " << theta_after << "\n";
    std::cout << "embeddings: " << ck.table.size() << " -> "
              << result.table.size() << "\n";
    return kExitOk;
  } catch (const TrainingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_augment(const std::string& checkpoint_path,
                const std::string& data_dir, const CommonOpts& opts, int k,
                double t0, int m, bool real_guidance,
                const std::string& mask_mode) {
  Timer timer;
  try {
    const LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
    const ClassData data = read_class_dir(data_dir);

    MaskRole role = MaskRole::none;
    if (mask_mode == "foreground") role = MaskRole::foreground;
    else if (mask_mode == "background") role = MaskRole::background;
    else if (mask_mode != "none")
      throw std::invalid_argument("mask mode must be none|foreground|background");

    // Concept resolution; real guidance forces the null embedding.
    std::vector<StoreSource> sources;
    std::vector<std::string> missing;
    for (const auto& [cls, records] : data.records) {
      int concept_id = ConceptTable::kNullId;
      if (!real_guidance) {
        const std::string name = "class:" + std::to_string(cls);
        if (!ck.table.has_name(name)) {
          missing.push_back(data.class_names[cls]);
          continue;
        }
        concept_id = ck.table.id_of(name);
      }
      for (const auto& rec : records) {
        StoreSource src;
        src.image = rec.image;
        src.label = cls;
        src.concept_id = concept_id;
        if (const MaskTensor* mask = rec.own_mask()) src.mask = *mask;
        sources.push_back(std::move(src));
      }
    }
    if (!missing.empty()) {
      std::cerr << "error: concept table has no embeddings for classes:";
      for (const auto& name : missing) std::cerr << ' ' << name;
      std::cerr << " (run `dafkit invert` first)\n";
      return kExitInput;
    }

    const ConfigDoc doc = ck.config_text.empty()
                              ? ConfigDoc{}
                              : ConfigDoc::parse_toml(ck.config_text);
    GenerationContext ctx;
    ctx.net = &ck.net;
    ctx.table = &ck.table;
    ctx.schedule = &ck.schedule;
    ctx.sampler.steps = std::min(doc.denoising_steps, ck.schedule.T());
    ctx.sampler.guidance_scale = doc.guidance_scale;
    ctx.mask_dilation = doc.mask_dilation;

    AugmentationPolicy policy =
        real_guidance
            ? single_sdedit_policy(t0)
            : (k == 1 ? single_sdedit_policy(t0, role)
                      : build_dafusion_policy(k, role));

    const fs::path out(opts.out_dir);
    const fs::path store_dir = out / "store";
    const uint64_t seed = opts.seed.value_or(doc.seed);

    // Resume: PNGs already present under the store dir are reused.
    const bool resuming = fs::exists(store_dir / "manifest.json") ||
                          fs::exists(store_dir);
    const SyntheticStore store =
        build_store(sources, policy, m, ctx, seed, opts.workers,
                    resuming ? &store_dir : nullptr);
    fs::create_directories(store_dir);
    store.save(store_dir);

    RunManifest manifest;
    manifest.command = "augment";
    manifest.config_sha256 = sha256_hex(ck.config_text);
    manifest.inputs = {checkpoint_path, data_dir};
    manifest.add_output_tree(out, store_dir);
    manifest.metrics["records"] =
        static_cast<double>(store.records().size());
    manifest.metrics["complete"] = store.complete() ? 1.0 : 0.0;
    manifest.timings_ms["total"] = timer.ms();
    manifest.write(out / "run_manifest.json");

    if (!store.complete()) {
      int failed = 0;
      for (const auto& r : store.records())
        if (!r.ok()) ++failed;
      std::cerr << "store incomplete: " << failed << " failed records\n";
      return kExitPartial;
    }
    std::cout << "store: " << store_dir.string() << " (" << store.n() << " x "
              << store.m() << ")\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_fewshot(const CommonOpts& opts, bool auto_train, double alpha_override,
                int m_override) {
  Timer timer;
  const ConfigDoc doc = load_config_or_exit(opts.config_path);
  ExperimentConfig cfg = doc.to_experiment_config();
  if (opts.seed) cfg.master_seed = *opts.seed;
  cfg.workers = opts.workers;
  if (alpha_override >= 0.0) cfg.alpha = alpha_override;
  if (m_override > 0) cfg.store_m = m_override;

  try {
    const fs::path out(opts.out_dir);
    fs::create_directories(out);

    std::optional<TrainedStack> stack;
    if (!doc.backbone_checkpoint.empty()) {
      LoadedCheckpoint ck = load_checkpoint(doc.backbone_checkpoint);
      // Extractor training is cheap and deterministic; the checkpoint only
      // carries the diffusion side.
      TrainedStack fresh = [&] {
        ExperimentConfig ext_only = cfg;
        ext_only.backbone.steps = 0;
        return train_stack(ext_only);
      }();
      stack = TrainedStack{std::move(ck.schedule), std::move(ck.net),
                           std::move(ck.table), std::move(fresh.extractor),
                           fresh.holdout_loss_init, fresh.holdout_loss_final,
                           fresh.extractor_train_accuracy};
    } else if (auto_train) {
      stack = train_stack(cfg);
      const fs::path ck = out / "checkpoint.dafkit";
      save_checkpoint(ck, stack->schedule, stack->net, stack->table,
                      cfg.data.resolution, doc.dump_toml());
    } else {
      std::cerr << "error: no backbone checkpoint configured; pass --auto to "
                   "train one\n";
      return kExitInput;
    }

    const ExperimentReport report = run_experiment(cfg, *stack);

    const fs::path report_dir = out / "report";
    fs::create_directories(report_dir);
    write_metrics_csv(report_dir / "metrics.csv", report);
    write_summary_csv(report_dir / "summary.csv", report);
    write_curves_svg(report_dir / "curves.svg", report);

    RunManifest manifest;
    manifest.command = "fewshot";
    manifest.config_sha256 = sha256_hex(doc.dump_toml());
    manifest.inputs = {opts.config_path};
    manifest.add_output_tree(out, report_dir);
    if (fs::exists(out / "checkpoint.dafkit"))
      manifest.add_output(out, out / "checkpoint.dafkit");
    manifest.metrics["holdout_loss_init"] = stack->holdout_loss_init;
    manifest.metrics["holdout_loss_final"] = stack->holdout_loss_final;
    manifest.metrics["extractor_train_accuracy"] =
        stack->extractor_train_accuracy;
    manifest.timings_ms["total"] = timer.ms();
    manifest.write(out / "run_manifest.json");

    for (const auto& s : report.summaries)
      std::cout << s.method << ": auc " << s.auc_mean << " [" << s.auc_ci_low
                << ", " << s.auc_ci_high << "], normalized "
                << s.normalized_score << "\n";

    int failed = 0;
    for (const auto& c : report.cells)
      if (!c.ok) ++failed;
    if (failed > 0) {
      std::cerr << "incomplete: " << failed << " of " << report.cells.size()
                << " cells failed\n";
      return kExitPartial;
    }
    return kExitOk;
  } catch (const TrainingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const SamplingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_report(const std::string& metrics_path, const CommonOpts& opts) {
  Timer timer;
  try {
    const ExperimentReport report = read_metrics_csv(metrics_path);
    const fs::path out(opts.out_dir);
    fs::create_directories(out);
    write_summary_csv(out / "summary.csv", report);
    write_curves_svg(out / "curves.svg", report);

    RunManifest manifest;
    manifest.command = "report";
    manifest.inputs = {metrics_path};
    manifest.add_output(out, out / "summary.csv");
    if (fs::exists(out / "curves.svg"))
      manifest.add_output(out, out / "curves.svg");
    manifest.timings_ms["total"] = timer.ms();
    manifest.write(out / "run_manifest.json");

    for (const auto& s : report.summaries)
      std::cout << s.method << ": auc " << s.auc_mean << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dafkit: diffusion-based data augmentation toolkit"};
  app.require_subcommand(0, 1);

  std::string dump_config_path;
  app.add_option("--dump-default-config", dump_config_path,
                 "write the default configuration as TOML and exit");

  CommonOpts common;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", common.config_path, "configuration file")
          ->required();
    sub->add_option("--out", common.out_dir, "output directory")->required();
    sub->add_option("--seed", common.seed, "master seed override");
    sub->add_option("--workers", common.workers, "worker threads")
        ->envname("DAFKIT_WORKERS");
  };

  // train
  auto* train = app.add_subcommand("train", "train the diffusion backbone");
  add_common(train, true);

  // invert
  auto* invert = app.add_subcommand(
      "invert", "fine-tune concept embeddings on a class directory");
  std::string checkpoint_path, data_dir, granularity = "pooled";
  invert->add_option("--checkpoint", checkpoint_path, "DAFKIT1 checkpoint")
      ->required();
  invert->add_option("--data", data_dir, "class data directory")->required();
  invert->add_option("--granularity", granularity,
                     "pooled (per class) or specific (per image)")
      ->check(CLI::IsMember({"pooled", "specific"}));
  add_common(invert, false);

  // augment
  auto* augment =
      app.add_subcommand("augment", "build a synthetic augmentation store");
  int k = 4, m = 10;
  double t0 = 0.5;
  bool real_guidance = false;
  std::string mask_mode = "none";
  augment->add_option("--checkpoint", checkpoint_path, "DAFKIT1 checkpoint")
      ->required();
  augment->add_option("--data", data_dir, "class data directory")->required();
  augment->add_option("--k", k, "stacked augmentation count");
  augment->add_option("--t0", t0, "edit strength for k=1 / real guidance");
  augment->add_option("--M", m, "augmentations per real image");
  augment->add_flag("--real-guidance", real_guidance,
                    "null-embedding mode at fixed t0");
  augment->add_option("--mask-mode", mask_mode,
                      "none, foreground or background")
      ->check(CLI::IsMember({"none", "foreground", "background"}));
  add_common(augment, false);

  // fewshot
  auto* fewshot =
      app.add_subcommand("fewshot", "run the few-shot evaluation harness");
  bool auto_train = false;
  double alpha_override = -1.0;
  int m_override = 0;
  fewshot->add_flag("--auto", auto_train, "train missing stages");
  fewshot->add_option("--alpha", alpha_override,
                      "synthetic probability override");
  fewshot->add_option("--M", m_override, "augmentations per real override");
  add_common(fewshot, true);

  // report
  auto* report =
      app.add_subcommand("report", "regenerate summary and plots from metrics");
  std::string metrics_path;
  report->add_option("--metrics", metrics_path, "metrics.csv path")
      ->required();
  add_common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitInput;
  }

  if (!dump_config_path.empty()) {
    atomic_write_file(fs::path(dump_config_path), ConfigDoc{}.dump_toml());
    std::cout << "wrote " << dump_config_path << "\n";
    return kExitOk;
  }

  if (train->parsed()) return cmd_train(common);
  if (invert->parsed())
    return cmd_invert(checkpoint_path, data_dir, common, granularity);
  if (augment->parsed())
    return cmd_augment(checkpoint_path, data_dir, common, k, t0, m,
                       real_guidance, mask_mode);
  if (fewshot->parsed())
    return cmd_fewshot(common, auto_train, alpha_override, m_override);
  if (report->parsed()) return cmd_report(metrics_path, common);

  std::cout << app.help();
  return kExitOk;
}
