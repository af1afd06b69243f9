// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/fewshot/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dafkit {

std::string MethodSpec::name() const {
  switch (kind) {
    case MethodKind::baseline: return "baseline";
    case MethodKind::real_guidance: return "real-guidance";
    case MethodKind::dafusion: return "dafusion-k" + std::to_string(k);
    case MethodKind::dafusion_masked:
      return std::string("dafusion-masked-") + to_string(mask_mode);
    case MethodKind::degenerate_identity: return "degenerate-identity";
  }
  return "unknown";
}

MethodSpec MethodSpec::parse(const std::string& text) {
  MethodSpec m;
  if (text == "baseline") {
    m.kind = MethodKind::baseline;
  } else if (text == "real-guidance") {
    m.kind = MethodKind::real_guidance;
  } else if (text == "degenerate-identity") {
    m.kind = MethodKind::degenerate_identity;
  } else if (text.rfind("dafusion-k", 0) == 0) {
    m.kind = MethodKind::dafusion;
    m.k = std::stoi(text.substr(10));
    if (m.k < 1) throw std::invalid_argument("method: k must be >= 1");
  } else if (text == "dafusion-masked-foreground") {
    m.kind = MethodKind::dafusion_masked;
    m.k = 1;
    m.mask_mode = MaskRole::foreground;
  } else if (text == "dafusion-masked-background") {
    m.kind = MethodKind::dafusion_masked;
    m.k = 1;
    m.mask_mode = MaskRole::background;
  } else {
    throw std::invalid_argument("unknown method: " + text);
  }
  return m;
}

namespace {

uint64_t derived_seed(uint64_t master, std::string_view purpose, uint64_t a = 0,
                      uint64_t b = 0, uint64_t c = 0) {
  return RngStream(master, purpose, a, b, c).key();
}

// Held-out denoising loss of the backbone, averaged over fixed batches with
// draw streams shared between evaluations (paired comparison).
double holdout_loss(const EpsilonNet& net, const ConceptTable& table,
                    const std::vector<TrainItem>& holdout,
                    const NoiseSchedule& schedule, uint64_t master) {
  const RngStream root(master, "holdout_eval");
  const int n_batches = 8;
  const int batch_size = 8;
  double total = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    std::vector<LossItem> batch;
    for (int i = 0; i < batch_size; ++i) {
      const size_t idx = (static_cast<size_t>(b) * batch_size + i) %
                         holdout.size();
      batch.push_back({&holdout[idx].image, holdout[idx].concept_id,
                       static_cast<uint64_t>(idx)});
    }
    total += loss_simple(net, table, batch, schedule,
                         root.child("batch", static_cast<uint64_t>(b)));
  }
  return total / n_batches;
}

}  // namespace

TrainedStack train_stack(const ExperimentConfig& cfg) {
  NoiseSchedule schedule =
      NoiseSchedule::linear(cfg.schedule_T, cfg.beta_start, cfg.beta_end);

  // Backbone universe: class-conditional pretraining over its own classes
  // (with unconditional dropout), mirroring a generically pretrained,
  // concept-agnostic generative backbone.
  ToyDatasetSpec pretrain_spec = cfg.pretrain_data;
  pretrain_spec.seed = derived_seed(cfg.master_seed, "pretrain_data");
  const std::vector<DatasetRecord> pretrain = gen_toy_dataset(pretrain_spec);

  ToyDatasetSpec holdout_spec = pretrain_spec;
  holdout_spec.images_per_class = std::max(4, pretrain_spec.images_per_class / 8);
  holdout_spec.seed = derived_seed(cfg.master_seed, "pretrain_holdout");
  const std::vector<DatasetRecord> holdout_recs = gen_toy_dataset(holdout_spec);

  ConceptTable table(cfg.net.cond_dim,
                     RngStream(cfg.master_seed, "table_init"));
  std::vector<int> pretrain_concepts(pretrain_spec.classes);
  for (int c = 0; c < pretrain_spec.classes; ++c) {
    RngStream init(cfg.master_seed, "pretrain_emb", static_cast<uint64_t>(c));
    std::vector<double> w(cfg.net.cond_dim);
    for (double& v : w) v = 0.1 * init.normal();
    pretrain_concepts[c] =
        table.add("pretrain:" + std::to_string(c), std::move(w), true);
  }

  auto to_items = [&](const std::vector<DatasetRecord>& recs) {
    std::vector<TrainItem> items;
    items.reserve(recs.size());
    for (const auto& r : recs)
      items.push_back({r.image, pretrain_concepts[r.label]});
    return items;
  };
  const std::vector<TrainItem> items = to_items(pretrain);
  const std::vector<TrainItem> holdout_items = to_items(holdout_recs);

  EpsilonNet net(cfg.net, RngStream(cfg.master_seed, "net_init"));

  TrainedStack stack{
      std::move(schedule), std::move(net), std::move(table),
      FeatureExtractor(cfg.extractor_net,
                       RngStream(cfg.master_seed, "extractor_unused")),
      0.0, 0.0, 0.0};

  stack.holdout_loss_init = holdout_loss(stack.net, stack.table, holdout_items,
                                         stack.schedule, cfg.master_seed);

  TrainConfig train_cfg = cfg.backbone;
  train_cfg.seed = derived_seed(cfg.master_seed, "backbone_train");
  stack.net = train_denoiser(items, std::move(stack.net), stack.table,
                             stack.schedule, train_cfg);

  stack.holdout_loss_final = holdout_loss(
      stack.net, stack.table, holdout_items, stack.schedule, cfg.master_seed);

  // Feature extractor: classification pretraining on disjoint classes.
  ToyDatasetSpec ext_spec = cfg.extractor_data;
  ext_spec.seed = derived_seed(cfg.master_seed, "extractor_data");
  const std::vector<DatasetRecord> ext_data = gen_toy_dataset(ext_spec);
  ExtractorTrainConfig ext_cfg = cfg.extractor_train;
  ext_cfg.seed = derived_seed(cfg.master_seed, "extractor_train");
  ExtractorTrainResult ext = train_feature_extractor(
      ext_data, ext_spec.classes, cfg.extractor_net, ext_cfg);
  stack.extractor = std::move(ext.extractor);
  stack.extractor_train_accuracy = ext.final_train_accuracy;

  return stack;
}

namespace {

struct CellPlan {
  std::vector<DatasetRecord> train_recs;  // ordered class asc, index asc
  std::vector<int> train_indices;
  ConceptTable table;
  std::vector<StoreSource> sources;
  bool audit_ok = false;
};

// Assembles the q-shot training set, fine-tunes concepts when the method
// needs them, and resolves per-source conditioning ids.
CellPlan plan_cell(const ExperimentConfig& cfg, const TrainedStack& stack,
                   const std::vector<DatasetRecord>& dataset,
                   const FewShotSplit& split, const MethodSpec& method,
                   int q, int trial) {
  CellPlan plan;
  plan.table = stack.table;

  std::map<int, std::vector<const ImageTensor*>> class_images;
  for (const auto& [cls, indices] : split.train) {
    for (int idx : indices) {
      plan.train_recs.push_back(dataset[idx]);
      plan.train_indices.push_back(idx);
      class_images[cls].push_back(&dataset[idx].image);
    }
  }

  // Few-shot integrity: the cell may only ever touch q-shot train indices
  // outside validation.
  std::set<int> val(split.validation.begin(), split.validation.end());
  plan.audit_ok = true;
  std::set<int> seen;
  for (int idx : plan.train_indices) {
    if (val.count(idx) || !seen.insert(idx).second) plan.audit_ok = false;
  }
  for (const auto& [cls, indices] : split.train)
    if (static_cast<int>(indices.size()) != q) plan.audit_ok = false;

  std::map<int, std::vector<int>> tuned;  // class -> embedding ids
  if (method.needs_inversion()) {
    FinetuneConfig ft = cfg.inversion;
    ft.seed = RngStream(cfg.master_seed, "invert")
                  .child(method.name(), static_cast<uint64_t>(q),
                         static_cast<uint64_t>(trial))
                  .key();
    FinetuneResult res =
        finetune_concepts(stack.net, stack.table, class_images,
                          stack.schedule, ft);
    plan.table = std::move(res.table);
    tuned = std::move(res.tuned_ids);
  }

  std::map<int, int> image_counter;
  for (const auto& rec : plan.train_recs) {
    StoreSource src;
    src.image = rec.image;
    src.label = rec.label;
    const int nth = image_counter[rec.label]++;
    if (method.needs_inversion()) {
      const auto& ids = tuned.at(rec.label);
      src.concept_id = cfg.inversion.granularity ==
                               ConceptTable::Granularity::per_image
                           ? ids.at(nth)
                           : ids.front();
    } else {
      src.concept_id = ConceptTable::kNullId;
    }
    if (const MaskTensor* m = rec.own_mask()) src.mask = *m;
    plan.sources.push_back(std::move(src));
  }
  return plan;
}

AugmentationPolicy method_policy(const MethodSpec& method) {
  switch (method.kind) {
    case MethodKind::baseline:
    case MethodKind::degenerate_identity:
      return AugmentationPolicy::identity_only();
    case MethodKind::real_guidance:
      return single_sdedit_policy(method.t0);
    case MethodKind::dafusion:
      return method.k == 1 ? single_sdedit_policy(method.t0)
                           : build_dafusion_policy(method.k);
    case MethodKind::dafusion_masked:
      return method.k == 1
                 ? single_sdedit_policy(method.t0, method.mask_mode)
                 : build_dafusion_policy(method.k, method.mask_mode);
  }
  throw std::logic_error("method_policy: unhandled kind");
}

}  // namespace

CellResult run_cell(const ExperimentConfig& cfg, const TrainedStack& stack,
                    const std::vector<DatasetRecord>& dataset,
                    const MethodSpec& method, int q, int trial) {
  CellResult cell;
  cell.dataset = cfg.dataset_name;
  cell.method = method.name();
  cell.q = q;
  cell.trial = trial;

  try {
    // Splits, probe init and probe batches are method-independent streams:
    // arms are compared on identical draws, and the degenerate arm must
    // reduce to the baseline exactly.
    const uint64_t split_seed =
        derived_seed(cfg.master_seed, "split", q, trial);
    const FewShotSplit split = make_split(dataset, q, split_seed);

    CellPlan plan = plan_cell(cfg, stack, dataset, split, method, q, trial);
    cell.index_audit_ok = plan.audit_ok;

    SyntheticStore store;
    if (method.uses_generation()) {
      GenerationContext ctx{&stack.net, &plan.table, &stack.schedule,
                            cfg.sampler, cfg.mask_dilation};
      const uint64_t store_seed =
          RngStream(cfg.master_seed, "store")
              .child(method.name(), static_cast<uint64_t>(q),
                     static_cast<uint64_t>(trial))
              .key();
      store = build_store(plan.sources, method_policy(method), cfg.store_m,
                          ctx, store_seed, cfg.workers);
      if (!store.complete()) {
        cell.error = "store incomplete";
        return cell;
      }
    } else {
      store = identity_store(plan.sources, cfg.store_m);
    }

    const double alpha = (method.kind == MethodKind::baseline ||
                          method.kind == MethodKind::degenerate_identity)
                             ? 0.0
                             : cfg.alpha;

    const int n_classes = cfg.data.classes;
    LinearProbe probe(stack.extractor, n_classes,
                      RngStream(cfg.master_seed, "probe_init",
                                static_cast<uint64_t>(q),
                                static_cast<uint64_t>(trial)));

    std::vector<std::pair<ImageTensor, int>> val;
    for (int idx : split.validation)
      val.emplace_back(dataset[idx].image, dataset[idx].label);

    const RngStream batch_root(cfg.master_seed, "probe_batches",
                               static_cast<uint64_t>(q),
                               static_cast<uint64_t>(trial));
    const MixerConfig mix{alpha, cfg.probe.batch_size};
    const auto& train_recs = plan.train_recs;

    BatchSource batches = [&, mix](int step) {
      RngStream slot_rng =
          batch_root.child("step", static_cast<uint64_t>(step));
      std::vector<BatchSlot> slots =
          balanced_batch(train_recs, store, mix, slot_rng);
      RngStream flip_rng =
          batch_root.child("flip", static_cast<uint64_t>(step));
      std::vector<std::pair<ImageTensor, int>> out;
      out.reserve(slots.size());
      for (const auto& slot : slots) {
        ImageTensor img = flip_augment(*slot.image, FlipMode::horizontal,
                                       cfg.flip_prob, flip_rng);
        if (cfg.vertical_flips)
          img = flip_augment(img, FlipMode::vertical, cfg.flip_prob, flip_rng);
        out.emplace_back(std::move(img), slot.label);
      }
      return out;
    };

    const ProbeResult res = train_probe(probe, batches, val, cfg.probe);
    cell.accuracy = res.best_accuracy;
    cell.steps_to_best = res.steps_to_best;
    cell.ok = true;
    if (!cell.index_audit_ok) {
      cell.ok = false;
      cell.error = "index audit failed";
    }
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

std::vector<double> ExperimentReport::accuracies(const std::string& method,
                                                 int q) const {
  std::vector<double> out;
  for (const auto& c : cells)
    if (c.method == method && c.q == q && c.ok) out.push_back(c.accuracy);
  return out;
}

std::vector<std::pair<double, double>> ExperimentReport::curve(
    const std::string& method) const {
  std::vector<std::pair<double, double>> out;
  for (int q : q_grid) {
    const auto acc = accuracies(method, q);
    if (acc.empty()) continue;
    double mean = 0.0;
    for (double a : acc) mean += a;
    out.emplace_back(q, mean / acc.size());
  }
  return out;
}

std::vector<double> ExperimentReport::auc_samples(
    const std::string& method) const {
  std::vector<double> out;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::pair<double, double>> curve;
    for (int q : q_grid) {
      for (const auto& c : cells)
        if (c.method == method && c.q == q && c.trial == t && c.ok)
          curve.emplace_back(q, c.accuracy);
    }
    if (static_cast<int>(curve.size()) == static_cast<int>(q_grid.size()) &&
        curve.size() >= 2)
      out.push_back(auc_over_q(curve));
  }
  return out;
}

const MethodSummary* ExperimentReport::summary(
    const std::string& method) const {
  for (const auto& s : summaries)
    if (s.method == method) return &s;
  return nullptr;
}

void summarize_report(ExperimentReport& report) {
  report.complete = !report.cells.empty();
  for (const auto& c : report.cells)
    if (!c.ok || !c.index_audit_ok) report.complete = false;

  double y_min = 1.0, y_max = 0.0;
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    y_min = std::min(y_min, c.accuracy);
    y_max = std::max(y_max, c.accuracy);
  }

  std::vector<std::string> methods;
  for (const auto& c : report.cells)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);

  report.summaries.clear();
  for (const auto& name : methods) {
    MethodSummary s;
    s.method = name;
    const auto aucs = report.auc_samples(name);
    if (aucs.size() >= 2) {
      const auto ci = confidence_interval_68(aucs);
      s.auc_mean = ci.mean;
      s.auc_ci_low = ci.low;
      s.auc_ci_high = ci.high;
    } else if (aucs.size() == 1) {
      s.auc_mean = s.auc_ci_low = s.auc_ci_high = aucs.front();
    }
    if (y_max > y_min) {
      std::vector<double> values;
      for (const auto& c : report.cells)
        if (c.method == name && c.ok) values.push_back(c.accuracy);
      const auto norm = normalize_scores(values, y_min, y_max);
      double mean = 0.0;
      for (double v : norm) mean += v;
      s.normalized_score = norm.empty() ? 0.0 : mean / norm.size();
    }
    report.summaries.push_back(std::move(s));
  }
}

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const TrainedStack& stack) {
  if (cfg.methods.empty())
    throw std::invalid_argument("run_experiment: no methods configured");
  if (cfg.trials < 1 || cfg.q_grid.empty())
    throw std::invalid_argument("run_experiment: bad grid");

  ToyDatasetSpec data_spec = cfg.data;
  data_spec.seed = derived_seed(cfg.master_seed, "data");
  const std::vector<DatasetRecord> dataset = gen_toy_dataset(data_spec);

  ExperimentReport report;
  report.dataset = cfg.dataset_name;
  report.q_grid = cfg.q_grid;
  report.trials = cfg.trials;

  for (const auto& method : cfg.methods)
    for (int q : cfg.q_grid)
      for (int trial = 0; trial < cfg.trials; ++trial)
        report.cells.push_back(
            run_cell(cfg, stack, dataset, method, q, trial));

  summarize_report(report);
  return report;
}

OverlapCheck ci_overlap(const ExperimentReport& report,
                        const std::string& method_a,
                        const std::string& method_b) {
  OverlapCheck check;
  check.q_total = static_cast<int>(report.q_grid.size());
  const auto auc_a = report.auc_samples(method_a);
  const auto auc_b = report.auc_samples(method_b);
  if (auc_a.size() < 2 || auc_b.size() < 2) return check;
  check.both_present = true;
  check.auc_overlap = intervals_overlap(confidence_interval_68(auc_a),
                                        confidence_interval_68(auc_b));
  for (int q : report.q_grid) {
    const auto a = report.accuracies(method_a, q);
    const auto b = report.accuracies(method_b, q);
    if (a.size() < 2 || b.size() < 2) continue;
    if (intervals_overlap(confidence_interval_68(a),
                          confidence_interval_68(b)))
      ++check.q_overlapping;
  }
  check.all_overlap = check.q_overlapping == check.q_total;
  return check;
}

DiversityStats stacking_diversity(const TrainedStack& stack,
                                  const std::vector<DatasetRecord>& dataset,
                                  int n_images, int m,
                                  const SamplerConfig& sampler, uint64_t seed,
                                  int workers) {
  if (n_images < 1 || static_cast<size_t>(n_images) > dataset.size())
    throw std::invalid_argument("stacking_diversity: bad image count");

  std::vector<StoreSource> sources;
  for (int i = 0; i < n_images; ++i)
    sources.push_back(
        {dataset[i].image, dataset[i].label, ConceptTable::kNullId, {}});

  GenerationContext ctx{&stack.net, &stack.table, &stack.schedule, sampler, 0};

  auto mean_pairwise = [&](const SyntheticStore& store) {
    double total = 0.0;
    int count = 0;
    for (int i = 0; i < store.n(); ++i) {
      for (int a = 0; a < store.m(); ++a) {
        for (int b = a + 1; b < store.m(); ++b) {
          const auto& xa = store.at(i, a).image.data;
          const auto& xb = store.at(i, b).image.data;
          double ss = 0.0;
          for (size_t p = 0; p < xa.size(); ++p) {
            const double d = xa[p] - xb[p];
            ss += d * d;
          }
          total += std::sqrt(ss);
          ++count;
        }
      }
    }
    return total / count;
  };

  const SyntheticStore stacked =
      build_store(sources, build_dafusion_policy(4), m, ctx,
                  derived_seed(seed, "diversity_k4"), workers);
  const SyntheticStore single =
      build_store(sources, single_sdedit_policy(0.5), m, ctx,
                  derived_seed(seed, "diversity_k1"), workers);
  if (!stacked.complete() || !single.complete())
    throw std::runtime_error("stacking_diversity: generation failed");

  return {mean_pairwise(stacked), mean_pairwise(single)};
}

}  // namespace dafkit
