/*
 * Copyright 2026 The sae-strokes Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "common/error.hpp"

namespace sae::pipeline {

using strokes::CharacterSpec;
using strokes::Image;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Random streams of a run.
enum Stream : std::uint64_t {
  kPretrainData = 1,
  kRecognizerInit = 2,
  kRecognizerData = 3,
  kFinetuneData = 4,
  kSeenEval = 5,
  kUnseenEval = 6,
  kBaseline = 7,
};

}  // namespace

std::vector<CharacterSpec> Dataset::seen() const {
  std::vector<CharacterSpec> out;
  for (auto i : split.train) out.push_back(specs[i]);
  return out;
}

std::vector<CharacterSpec> Dataset::unseen() const {
  std::vector<CharacterSpec> out;
  for (auto i : split.test) out.push_back(specs[i]);
  return out;
}

Dataset build_dataset(const RunConfig& cfg) {
  Dataset ds;
  ds.specs = cfg.source.empty() ? strokes::synthetic_alphabet(cfg.n_radicals, cfg.n_chars, cfg.seed)
                                : strokes::load_stroke_file(cfg.source);
  require(!ds.specs.empty(), ErrorKind::Data, "the dataset has no characters");
  ds.split = strokes::split_classes(ds.specs.size(), cfg.n_seen);
  return ds;
}

std::string split_manifest(const Dataset& ds) {
  std::vector<std::string> role(ds.specs.size(), "unused");
  for (auto i : ds.split.train) role[i] = "train";
  for (auto i : ds.split.test) role[i] = "test";
  std::string out = "index,label,strokes,split\n";
  for (std::size_t i = 0; i < ds.specs.size(); ++i)
    out += std::to_string(i) + "," + ds.specs[i].label + "," + strokes::encode_strokes(ds.specs[i]) + "," + role[i] + "\n";
  return out;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds, const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "samples", ec);
  require(!ec, ErrorKind::Io, "cannot create " + (dir / "samples").string() + ": " + ec.message());
  strokes::save_stroke_file(dir / "specs.json", ds.specs);
  write_text(dir / "split.csv", split_manifest(ds));
  write_text(dir / "config.txt", cfg.serialize());
  const strokes::RasterOptions opt{cfg.vit_frame};
  for (std::size_t i = 0; i < std::min<std::size_t>(8, ds.specs.size()); ++i) {
    const auto a = strokes::rasterize(ds.specs[i], opt, strokes::Form::Cumulative);
    const auto b = strokes::rasterize(ds.specs[i], opt, strokes::Form::Incremental);
    char name[32];
    std::snprintf(name, sizeof(name), "char%04zu.pgm", i);
    strokes::write_pgm(dir / "samples" / name, strokes::tile_rows({a.frames, b.frames}));
  }
}

Dataset load_dataset(const std::filesystem::path& dir, const RunConfig& cfg) {
  require(std::filesystem::is_directory(dir), ErrorKind::Io, "dataset directory " + dir.string() + " does not exist");
  Dataset ds;
  ds.specs = strokes::load_stroke_file(dir / "specs.json");
  require(!ds.specs.empty(), ErrorKind::Data, "the dataset has no characters");
  ds.split = strokes::split_classes(ds.specs.size(), cfg.n_seen);
  return ds;
}

// ---- models ----

ad::ParameterStore& SaeModel::params() { return arch == Arch::Vit ? vit->params() : rnt->params(); }
const ad::ParameterStore& SaeModel::params() const { return arch == Arch::Vit ? vit->params() : rnt->params(); }

SaeModel make_model(const RunConfig& cfg) {
  SaeModel m;
  m.arch = cfg.arch;
  if (cfg.arch == Arch::Vit)
    m.vit = std::make_unique<vit::ViTModel>(cfg.vit_config(), cfg.seed);
  else
    m.rnt = std::make_unique<rnt::RntModel>(cfg.rnt_config(), cfg.seed);
  return m;
}

RunConfig checkpoint_config(const ad::Checkpoint& ckpt) {
  const auto it = ckpt.meta.find("config");
  require(it != ckpt.meta.end(), ErrorKind::Config, "checkpoint has no run configuration");
  return RunConfig::parse(it->second);
}

SaeModel load_model(const ad::Checkpoint& ckpt, RunConfig* cfg_out) {
  RunConfig cfg = checkpoint_config(ckpt);
  const std::string& arch = ckpt.meta_at("arch");
  require(arch == "vit" || arch == "rnt", ErrorKind::Config, "checkpoint holds a '" + arch + "' model, not an SAE");
  cfg.arch = parse_arch(arch);
  SaeModel m = make_model(cfg);
  ad::import_parameters(m.params(), ckpt);
  if (cfg_out != nullptr) *cfg_out = cfg;
  return m;
}

namespace {

ad::Checkpoint snapshot(const ad::ParameterStore& params, const RunConfig& cfg, const std::string& arch) {
  ad::Checkpoint ck;
  ck.meta["arch"] = arch;
  ck.meta["config"] = cfg.serialize();
  ad::export_parameters(params, ck);
  return ck;
}

}  // namespace

std::vector<models::Example> pretrain_examples(const CharacterSpec& spec, const RunConfig& cfg) {
  const strokes::Form form = cfg.data_form();
  std::vector<models::Example> out;
  if (cfg.arch == Arch::Vit) {
    const auto inputs = strokes::rasterize(spec, {cfg.vit_image}, strokes::Form::Cumulative);
    const auto targets = strokes::rasterize(spec, {cfg.vit_frame}, form);
    if (cfg.prefix_samples) {
      for (auto& s : strokes::make_prefix_samples(inputs, targets, cfg.pad_len)) {
        s.targets.resize(s.k);
        out.push_back({std::move(s.input), std::move(s.targets)});
      }
    } else {
      out.push_back({inputs.frames.back(), targets.frames});
    }
  } else {
    const strokes::RasterOptions opt{cfg.rnt_input};
    out.push_back({strokes::render_full(spec, opt), strokes::rasterize(spec, opt, form).frames});
  }
  for (const auto& ex : out)
    require(ex.targets.size() <= cfg.pad_len, ErrorKind::Data,
            "character '" + spec.label + "' has more strokes than pad_len " + std::to_string(cfg.pad_len));
  return out;
}

models::Example reconstruction_example(const CharacterSpec& spec, const RunConfig& cfg) {
  const std::size_t in = cfg.arch == Arch::Vit ? cfg.vit_image : cfg.rnt_input;
  const std::size_t fr = cfg.arch == Arch::Vit ? cfg.vit_frame : cfg.rnt_input;
  auto targets = strokes::pad_sequence(strokes::rasterize(spec, {fr}, cfg.data_form()), cfg.pad_len).frames;
  return {strokes::render_full(spec, {in}), std::move(targets)};
}

std::vector<Image> reconstruct(const SaeModel& model, const Image& input) {
  return model.arch == Arch::Vit ? vit::reconstruct(*model.vit, input) : rnt::decode_autoregressive(*model.rnt, input);
}

ReconstructionScore reconstruction_score(const SaeModel& model, const std::vector<CharacterSpec>& specs,
                                         const RunConfig& cfg) {
  require(!specs.empty(), ErrorKind::Data, "no characters to score");
  ReconstructionScore s;
  for (const auto& spec : specs) {
    const auto ex = reconstruction_example(spec, cfg);
    s.mse += models::frames_mse(reconstruct(model, ex.input), ex.targets);
    s.blank_mse += models::blank_mse(ex.targets);
  }
  s.mse /= static_cast<double>(specs.size());
  s.blank_mse /= static_cast<double>(specs.size());
  return s;
}

namespace {

double model_loss(SaeModel& model, const std::vector<models::Example>& batch, ad::AdamW* optim, double lr) {
  if (model.arch == Arch::Vit)
    return optim ? vit::pretrain_step(*model.vit, *optim, batch, lr) : vit::evaluate_loss(*model.vit, batch);
  return optim ? rnt::pretrain_step(*model.rnt, *optim, batch, lr) : rnt::evaluate_loss(*model.rnt, batch);
}

}  // namespace

PretrainResult pretrain(const RunConfig& cfg, const Dataset& ds, const Progress& progress) {
  cfg.validate();
  SaeModel model = make_model(cfg);
  ad::AdamW optim(cfg.adamw());
  auto rng = stream_rng(cfg.seed, kPretrainData);

  std::vector<models::Example> train;
  for (const auto& spec : ds.seen()) {
    auto ex = pretrain_examples(spec, cfg);
    train.insert(train.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  std::vector<models::Example> val;
  for (const auto& spec : ds.unseen()) val.push_back(reconstruction_example(spec, cfg));
  require(!train.empty() && !val.empty(), ErrorKind::Data, "pre-training needs seen and unseen characters");

  PretrainResult res;
  double best_val = 0.0;
  std::vector<std::size_t> order(train.size());
  const auto crop = cfg.crop_params();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = ad::cosine_lr(static_cast<double>(epoch), static_cast<double>(cfg.epochs), cfg.lr_max, cfg.lr_min);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      std::vector<models::Example> batch;
      for (std::size_t i = b0; i < std::min(order.size(), b0 + cfg.batch_size); ++i) {
        const auto& ex = train[order[i]];
        if (cfg.crop) {
          auto c = strokes::random_resized_crop(ex.input, ex.targets, rng, crop);
          batch.push_back({std::move(c.input), std::move(c.targets)});
        } else {
          batch.push_back(ex);
        }
      }
      total += model_loss(model, batch, &optim, lr) * static_cast<double>(batch.size());
    }
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_mse = total / static_cast<double>(train.size());
    m.val_mse = model_loss(model, val, nullptr, 0.0);
    m.lr = lr;
    models::check_loss(m.val_mse, "validation");
    res.metrics.push_back(m);
    if (epoch == 0 || m.val_mse < best_val) {
      best_val = m.val_mse;
      res.best_epoch = m.epoch;
      res.best = snapshot(model.params(), cfg, arch_name(cfg.arch));
      res.best.meta["epoch"] = std::to_string(m.epoch);
      res.best.meta["val_mse"] = fmt17(m.val_mse);
    }
    if (progress) {
      progress("epoch " + std::to_string(m.epoch) + "/" + std::to_string(cfg.epochs) + " train_mse " +
               fmt17(m.train_mse) + " val_mse " + fmt17(m.val_mse));
    }
  }
  res.last = snapshot(model.params(), cfg, arch_name(cfg.arch));
  res.last.meta["epoch"] = std::to_string(cfg.epochs);
  ad::export_optimizer(optim, res.last);
  res.seen = reconstruction_score(model, ds.seen(), cfg);
  res.unseen = reconstruction_score(model, ds.unseen(), cfg);
  return res;
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,train_mse,val_mse\n";
  for (const auto& m : metrics) out += std::to_string(m.epoch) + "," + fmt17(m.train_mse) + "," + fmt17(m.val_mse) + "\n";
  return out;
}

// ---- zero-shot ----

std::unique_ptr<rnt::RntModel> make_recognizer(const RunConfig& cfg) {
  const std::uint64_t seed = stream_rng(cfg.seed, kRecognizerInit)();
  return std::make_unique<rnt::RntModel>(cfg.rnt_config(rnt::HeadKind::Symbols), seed);
}

std::unique_ptr<rnt::RntModel> load_recognizer(const ad::Checkpoint& ckpt, RunConfig* cfg_out) {
  RunConfig cfg = checkpoint_config(ckpt);
  require(ckpt.meta_at("arch") == "rnt-recognizer", ErrorKind::Config,
          "checkpoint holds a '" + ckpt.meta_at("arch") + "' model, not a stroke recogniser");
  auto model = make_recognizer(cfg);
  ad::import_parameters(model->params(), ckpt);
  if (cfg_out != nullptr) *cfg_out = cfg;
  return model;
}

std::vector<zeroshot::RecognitionExample> recognition_examples(const std::vector<CharacterSpec>& specs,
                                                               const RunConfig& cfg, std::uint64_t round) {
  auto rng = stream_rng(cfg.seed, round);
  std::vector<zeroshot::RecognitionExample> out;
  const strokes::RasterOptions opt{cfg.rnt_input};
  for (const auto& s : specs)
    out.push_back({strokes::render_full(strokes::jitter(s, cfg.jitter_sigma, rng), opt), strokes::encode_strokes(s)});
  return out;
}

std::vector<zeroshot::TestItem> test_items(const std::vector<CharacterSpec>& specs, const RunConfig& cfg,
                                           std::uint64_t round) {
  auto ex = recognition_examples(specs, cfg, round);
  std::vector<zeroshot::TestItem> out;
  for (std::size_t i = 0; i < specs.size(); ++i) out.push_back({specs[i].label, std::move(ex[i].image)});
  return out;
}

std::vector<double> train_recognizer(rnt::RntModel& model, const std::vector<CharacterSpec>& specs,
                                     const RunConfig& cfg, std::size_t epochs, double lr, std::uint64_t stream,
                                     const Progress& progress) {
  ad::AdamW optim(cfg.adamw());
  auto rng = stream_rng(cfg.seed, stream);
  std::vector<double> losses;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const double rate = ad::cosine_lr(static_cast<double>(epoch), static_cast<double>(epochs), lr, cfg.lr_min);
    auto examples = recognition_examples(specs, cfg, rng());
    std::shuffle(examples.begin(), examples.end(), rng);
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < examples.size(); b0 += cfg.batch_size) {
      const auto end = examples.begin() + static_cast<std::ptrdiff_t>(std::min(examples.size(), b0 + cfg.batch_size));
      std::vector<zeroshot::RecognitionExample> batch(examples.begin() + static_cast<std::ptrdiff_t>(b0), end);
      total += zeroshot::finetune_step(model, optim, batch, rate) * static_cast<double>(batch.size());
    }
    losses.push_back(total / static_cast<double>(examples.size()));
    if (progress) progress("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(epochs) + " loss " + fmt17(losses.back()));
  }
  return losses;
}

std::map<std::string, std::string> stroke_truth(const std::vector<CharacterSpec>& specs) {
  std::map<std::string, std::string> t;
  for (const auto& s : specs) t[s.label] = strokes::encode_strokes(s);
  return t;
}

zeroshot::ZeroShotReport evaluate(const rnt::RntModel& model, const RunConfig& cfg, const Dataset& ds,
                                  std::vector<zeroshot::ConfusableSet>* sets_out) {
  auto sets = zeroshot::build_confusable_sets(ds.specs);
  zeroshot::attach_features(sets, ds.specs, model);
  auto report = zeroshot::evaluate_zero_shot(model, sets, stroke_truth(ds.specs), test_items(ds.unseen(), cfg, kUnseenEval),
                                             ds.split.n_seen);
  if (sets_out != nullptr) *sets_out = std::move(sets);
  return report;
}

ZeroShotRun run_zero_shot(const RunConfig& cfg, const Dataset& ds, const ad::Checkpoint& pretrained,
                          const std::optional<ad::Checkpoint>& trained, const Progress& progress) {
  cfg.validate();
  if (auto it = pretrained.meta.find("arch"); it != pretrained.meta.end())
    require(it->second == "rnt", ErrorKind::Surgery, "surgery needs a pre-trained rnt checkpoint, got " + it->second);
  ZeroShotRun run;
  const auto seen = ds.seen();
  if (trained) {
    run.trained = *trained;
  } else {
    auto scratch = make_recognizer(cfg);
    if (progress) progress("training the recogniser from scratch");
    run.recognizer_losses = train_recognizer(*scratch, seen, cfg, cfg.recognizer_epochs, cfg.recognizer_lr, kRecognizerData, progress);
    run.trained = snapshot(scratch->params(), cfg, "rnt-recognizer");
  }
  auto model = make_recognizer(cfg);
  run.audit = zeroshot::apply_surgery(*model, run.trained, pretrained);
  if (progress) progress("fine-tuning after surgery");
  run.finetune_losses = train_recognizer(*model, seen, cfg, cfg.finetune_epochs, cfg.finetune_lr, kFinetuneData, progress);
  run.finetuned = snapshot(model->params(), cfg, "rnt-recognizer");

  run.sets = zeroshot::build_confusable_sets(ds.specs);
  zeroshot::attach_features(run.sets, ds.specs, *model);
  const auto truth = stroke_truth(ds.specs);
  run.seen = zeroshot::evaluate_zero_shot(*model, run.sets, truth, test_items(seen, cfg, kSeenEval), ds.split.n_seen);
  const auto unseen_items = test_items(ds.unseen(), cfg, kUnseenEval);
  run.unseen = zeroshot::evaluate_zero_shot(*model, run.sets, truth, unseen_items, ds.split.n_seen);
  run.random_baseline = zeroshot::random_baseline(run.sets, unseen_items, cfg.pad_len, cfg.baseline_trials,
                                                  stream_rng(cfg.seed, kBaseline)());
  return run;
}

// ---- embeddings ----

EmbeddingReport embed_alphabet(const vit::ViTModel& model, const std::vector<CharacterSpec>& specs,
                               const RunConfig& cfg) {
  EmbeddingReport rep;
  const strokes::RasterOptions opt{cfg.vit_image};
  std::map<std::string, std::size_t> radical_index;
  for (const auto& r : strokes::radical_library()) {
    bool used = false;
    for (const auto& s : specs) used = used || std::find(s.radicals.begin(), s.radicals.end(), r.name) != s.radicals.end();
    if (!used) continue;
    const auto spec = strokes::radical_character(r);
    radical_index[r.name] = rep.radicals.size();
    rep.radicals.push_back(embed::embed_character(model, strokes::render_full(spec, opt), spec.stroke_count(), r.name));
  }
  for (const auto& s : specs) {
    std::vector<std::size_t> truth;
    for (const auto& r : s.radicals)
      if (auto it = radical_index.find(r); it != radical_index.end()) truth.push_back(it->second);
    if (truth.empty()) continue;
    rep.characters.push_back(embed::embed_character(model, strokes::render_full(s, opt), s.stroke_count(), s.label));
    rep.truth.push_back(std::move(truth));
  }
  require(!rep.characters.empty(), ErrorKind::Data, "no characters with known radicals to embed");
  rep.similarity = embed::cosine_matrix(rep.characters, rep.radicals);
  rep.mrr = embed::mean_reciprocal_rank(rep.similarity, rep.truth);
  return rep;
}

}  // namespace sae::pipeline
