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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rnt/rnt.hpp"
#include "tensor/checkpoint.hpp"

namespace sae::zeroshot {

// Characters sharing one stroke string, with a reference feature vector per
// member (filled by attach_features).
struct ConfusableSet {
  std::string key;
  std::vector<std::string> members;
  std::vector<std::vector<double>> features;
};

// Partition of `specs` by stroke string; sets ordered by key, members by label.
std::vector<ConfusableSet> build_confusable_sets(const std::vector<strokes::CharacterSpec>& specs);
// Reference features: flattened encode_image output of each member's clean render.
void attach_features(std::vector<ConfusableSet>& sets, const std::vector<strokes::CharacterSpec>& specs,
                     const rnt::RntModel& model);
std::string confusable_json(const std::vector<ConfusableSet>& sets);

// Flattened patch tokens of the image under the model's encoder.
std::vector<double> image_features(const rnt::RntModel& model, const strokes::Image& image);

// Stroke string -> symbols; throws a data error on characters other than 1..5.
std::vector<int> stroke_symbols(const std::string& strokes);

struct RecognitionExample {
  strokes::Image image;
  std::string strokes;
};

// Teacher-forced cross entropy summed over steps up to EOS, averaged over the
// batch, then one AdamW update of the trainable parameters.
double finetune_step(rnt::RntModel& model, ad::AdamW& optim, const std::vector<RecognitionExample>& batch,
                     double lr);
double recognition_loss(const rnt::RntModel& model, const std::vector<RecognitionExample>& batch);

struct StrokePrediction {
  std::string strokes;
  bool truncated = false;  // no EOS within max steps
};

// Greedy decoding from BOS; the first step is restricted to stroke classes.
StrokePrediction predict_strokes(const rnt::RntModel& model, const strokes::Image& image);

// argmax_i cosine(F, F'_i), lowest index on ties.
std::size_t resolve_confusable(const std::vector<double>& feature, const ConfusableSet& set);

// ---- parameter surgery ----

enum class Disposition { Overwrite, Freeze, Tune };
const char* disposition_name(Disposition d);

struct SurgeryPlan {
  std::vector<std::string> overwrite_prefixes{"rnt.encoder.block4.", "rnt.decoder."};
  std::vector<std::string> freeze_prefixes{"rnt.encoder.block1.", "rnt.encoder.block2.", "rnt.encoder.block3."};

  Disposition classify(const std::string& name) const;
};

struct SurgeryAudit {
  std::vector<std::pair<std::string, Disposition>> entries;  // every parameter and buffer
  std::size_t count(Disposition d) const;
  std::string csv() const;
};

// Loads `trained` into the model, copies the overwrite set from `pretrained`
// and marks the freeze set non-trainable. Shape mismatches or missing entries
// on the overwrite set raise a surgery error naming the parameter.
SurgeryAudit apply_surgery(rnt::RntModel& model, const ad::Checkpoint& trained, const ad::Checkpoint& pretrained,
                           const SurgeryPlan& plan = {});

// ---- evaluation ----

struct TestItem {
  std::string label;
  strokes::Image image;
};

struct ItemResult {
  std::string label;
  std::string predicted_strokes;
  std::string predicted_label;  // empty on a miss
  bool stroke_match = false;
  bool correct = false;
};

struct ZeroShotReport {
  std::size_t n_seen = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  double stroke_match_rate = 0.0;
  std::size_t unmatched = 0;  // predicted strings with no confusable set
  std::vector<ItemResult> items;

  std::string csv_header() const { return "n_seen,accuracy,stroke_match_rate,n_test"; }
  std::string csv_row() const;
};

using StrokePredictor = std::function<std::string(const strokes::Image&)>;
using FeatureFn = std::function<std::vector<double>(const strokes::Image&)>;

// Predicted string -> set lookup -> cosine resolution when the set has several
// members. `truth` maps labels to their stroke strings.
ZeroShotReport evaluate_zero_shot(const StrokePredictor& predict, const FeatureFn& features,
                                  const std::vector<ConfusableSet>& sets,
                                  const std::map<std::string, std::string>& truth,
                                  const std::vector<TestItem>& items, std::size_t n_seen);
ZeroShotReport evaluate_zero_shot(const rnt::RntModel& model, const std::vector<ConfusableSet>& sets,
                                  const std::map<std::string, std::string>& truth,
                                  const std::vector<TestItem>& items, std::size_t n_seen);

// Expected accuracy of a predictor emitting a uniform length in 1..max_len
// and uniform stroke classes, estimated by simulation; on a set with several
// members it picks one uniformly.
double random_baseline(const std::vector<ConfusableSet>& sets, const std::vector<TestItem>& items,
                       std::size_t max_len, std::size_t trials, std::uint64_t seed);

}  // namespace sae::zeroshot
