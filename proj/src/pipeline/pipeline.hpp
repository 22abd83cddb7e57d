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

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "embed/embed.hpp"
#include "pipeline/config.hpp"
#include "tensor/checkpoint.hpp"
#include "zeroshot/zeroshot.hpp"

namespace sae::pipeline {

struct Dataset {
  std::vector<strokes::CharacterSpec> specs;  // class index order
  strokes::DatasetSplit split;

  std::vector<strokes::CharacterSpec> seen() const;
  std::vector<strokes::CharacterSpec> unseen() const;
};

// Synthetic alphabet or the configured stroke file, split by n_seen.
Dataset build_dataset(const RunConfig& cfg);
// Writes specs.json, split.csv, config.txt and golden PGM renders.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds, const RunConfig& cfg);
Dataset load_dataset(const std::filesystem::path& dir, const RunConfig& cfg);
std::string split_manifest(const Dataset& ds);

// ---- pre-training ----

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
};

struct ReconstructionScore {
  double mse = 0.0;        // predicted vs target frames over pad_len slots
  double blank_mse = 0.0;  // all-blank predictor on the same frames
};

struct PretrainResult {
  std::vector<EpochMetrics> metrics;
  std::size_t best_epoch = 0;
  ad::Checkpoint best;   // lowest validation MSE
  ad::Checkpoint last;  // after the last epoch, optimiser state included
  ReconstructionScore seen;
  ReconstructionScore unseen;
};

using Progress = std::function<void(const std::string&)>;

// Either architecture behind one handle.
struct SaeModel {
  Arch arch = Arch::Vit;
  std::unique_ptr<vit::ViTModel> vit;
  std::unique_ptr<rnt::RntModel> rnt;

  ad::ParameterStore& params();
  const ad::ParameterStore& params() const;
};

SaeModel make_model(const RunConfig& cfg);
// Model rebuilt from a checkpoint written by pretrain.
SaeModel load_model(const ad::Checkpoint& ckpt, RunConfig* cfg_out = nullptr);
RunConfig checkpoint_config(const ad::Checkpoint& ckpt);

// Training pairs for one character: prefix samples (vit, when enabled) or the
// full render with every frame.
std::vector<models::Example> pretrain_examples(const strokes::CharacterSpec& spec, const RunConfig& cfg);
// Full render input with pad_len target frames, for scoring.
models::Example reconstruction_example(const strokes::CharacterSpec& spec, const RunConfig& cfg);
std::vector<strokes::Image> reconstruct(const SaeModel& model, const strokes::Image& input);
ReconstructionScore reconstruction_score(const SaeModel& model, const std::vector<strokes::CharacterSpec>& specs,
                                         const RunConfig& cfg);

PretrainResult pretrain(const RunConfig& cfg, const Dataset& ds, const Progress& progress = {});

std::string metrics_csv(const std::vector<EpochMetrics>& metrics);

// ---- zero-shot ----

struct ZeroShotRun {
  ad::Checkpoint trained;    // recogniser trained from scratch on seen classes
  ad::Checkpoint finetuned;  // after surgery and fine-tuning
  zeroshot::SurgeryAudit audit;
  std::vector<double> recognizer_losses;
  std::vector<double> finetune_losses;
  zeroshot::ZeroShotReport seen;    // fresh jittered renders of seen classes
  zeroshot::ZeroShotReport unseen;  // jittered renders of unseen classes
  double random_baseline = 0.0;
  std::vector<zeroshot::ConfusableSet> sets;
};

std::unique_ptr<rnt::RntModel> make_recognizer(const RunConfig& cfg);
std::unique_ptr<rnt::RntModel> load_recognizer(const ad::Checkpoint& ckpt, RunConfig* cfg_out = nullptr);

// Jittered renders of the given specs; `round` selects an independent draw.
std::vector<zeroshot::RecognitionExample> recognition_examples(const std::vector<strokes::CharacterSpec>& specs,
                                                               const RunConfig& cfg, std::uint64_t round);
std::vector<zeroshot::TestItem> test_items(const std::vector<strokes::CharacterSpec>& specs, const RunConfig& cfg,
                                           std::uint64_t round);

// Trains `model` for `epochs` on fresh jitter each epoch; returns per-epoch loss.
std::vector<double> train_recognizer(rnt::RntModel& model, const std::vector<strokes::CharacterSpec>& specs,
                                     const RunConfig& cfg, std::size_t epochs, double lr, std::uint64_t stream,
                                     const Progress& progress = {});

// Recogniser from scratch (unless `trained` is given), surgery with the
// pre-trained SAE checkpoint, fine-tuning, then evaluation.
ZeroShotRun run_zero_shot(const RunConfig& cfg, const Dataset& ds, const ad::Checkpoint& pretrained,
                          const std::optional<ad::Checkpoint>& trained = std::nullopt,
                          const Progress& progress = {});

// Evaluates a fine-tuned recogniser on the unseen classes.
zeroshot::ZeroShotReport evaluate(const rnt::RntModel& model, const RunConfig& cfg, const Dataset& ds,
                                  std::vector<zeroshot::ConfusableSet>* sets_out = nullptr);

std::map<std::string, std::string> stroke_truth(const std::vector<strokes::CharacterSpec>& specs);

// ---- embeddings ----

struct EmbeddingReport {
  std::vector<embed::CharEmbedding> characters;
  std::vector<embed::CharEmbedding> radicals;
  std::vector<std::vector<double>> similarity;  // characters x radicals
  std::vector<std::vector<std::size_t>> truth;  // radical indices per character
  double mrr = 0.0;
};

// Characters with recorded radicals embedded at their stroke count, radicals
// rendered alone.
EmbeddingReport embed_alphabet(const vit::ViTModel& model, const std::vector<strokes::CharacterSpec>& specs,
                               const RunConfig& cfg);

}  // namespace sae::pipeline
