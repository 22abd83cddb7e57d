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

#include "zeroshot/zeroshot.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "common/error.hpp"
#include "json.hpp"

namespace sae::zeroshot {

using ad::Graph;
using ad::Tensor;
using ad::Var;
using strokes::CharacterSpec;
using strokes::Image;

std::vector<ConfusableSet> build_confusable_sets(const std::vector<CharacterSpec>& specs) {
  std::map<std::string, std::vector<std::string>> by_key;
  for (const auto& s : specs) by_key[strokes::encode_strokes(s)].push_back(s.label);
  std::vector<ConfusableSet> sets;
  for (auto& [key, members] : by_key) {
    std::sort(members.begin(), members.end());
    sets.push_back({key, std::move(members), {}});
  }
  return sets;
}

std::vector<double> image_features(const rnt::RntModel& model, const Image& image) {
  Graph g(false);
  const Tensor t = model.encode_image(g, image, false).value();
  return {t.data().begin(), t.data().end()};
}

void attach_features(std::vector<ConfusableSet>& sets, const std::vector<CharacterSpec>& specs,
                     const rnt::RntModel& model) {
  std::map<std::string, const CharacterSpec*> by_label;
  for (const auto& s : specs) by_label[s.label] = &s;
  const strokes::RasterOptions opt{model.config().input_size};
  for (auto& set : sets) {
    set.features.clear();
    for (const auto& m : set.members) {
      auto it = by_label.find(m);
      require(it != by_label.end(), ErrorKind::Data, "no stroke data for confusable-set member '" + m + "'");
      set.features.push_back(image_features(model, strokes::render_full(*it->second, opt)));
    }
  }
}

std::string confusable_json(const std::vector<ConfusableSet>& sets) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : sets) j[s.key] = s.members;
  return j.dump(2) + "\n";
}

std::vector<int> stroke_symbols(const std::string& strokes) {
  std::vector<int> out;
  for (char c : strokes) {
    require(c >= '1' && c <= '5', ErrorKind::Data, std::string("stroke symbol '") + c + "' outside 1..5");
    out.push_back(c - '0');
  }
  return out;
}

namespace {

// Decoder inputs [BOS, s1..sn, PAD...] and targets [s1..sn, EOS, skip...].
void teacher_sequences(const std::string& strokes, std::size_t steps, std::vector<int>& inputs,
                       std::vector<int>& targets) {
  const auto sym = stroke_symbols(strokes);
  require(!sym.empty() && sym.size() < steps, ErrorKind::Data,
          "stroke string of length " + std::to_string(sym.size()) + " does not fit " + std::to_string(steps) +
              " decoder steps");
  inputs.assign(steps, rnt::kPad);
  targets.assign(steps, -1);
  inputs[0] = rnt::kBos;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    inputs[i + 1] = sym[i];
    targets[i] = sym[i];
  }
  targets[sym.size()] = rnt::kEos;
}

Tensor image_stack(const std::vector<RecognitionExample>& batch, std::size_t size) {
  Tensor t({batch.size(), 1, size, size});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Image& img = batch[i].image;
    require(img.height == size && img.width == size, ErrorKind::Dimension, "recognition image has the wrong size");
    std::copy(img.pixels.begin(), img.pixels.end(), t.ptr() + i * size * size);
  }
  return t;
}

Var batch_loss(Graph& g, const rnt::RntModel& model, const std::vector<RecognitionExample>& batch, bool training) {
  require(!batch.empty(), ErrorKind::Usage, "empty batch");
  const auto& cfg = model.config();
  require(cfg.head == rnt::HeadKind::Symbols, ErrorKind::Usage, "fine-tuning needs the recognition head");
  Var features = model.encoder_features(g, g.constant(image_stack(batch, cfg.input_size)), training);
  std::vector<Var> losses;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::vector<int> inputs, targets;
    teacher_sequences(batch[b].strokes, cfg.max_steps(), inputs, targets);
    Var logits = model.decode(g, model.symbol_inputs(g, inputs), model.patch_tokens(features, b));
    losses.push_back(softmax_cross_entropy(logits, targets));
  }
  return scale(sum(stack(losses)), 1.0 / static_cast<double>(batch.size()));
}

}  // namespace

double finetune_step(rnt::RntModel& model, ad::AdamW& optim, const std::vector<RecognitionExample>& batch,
                     double lr) {
  Graph g;
  model.params().zero_grad();
  Var loss = batch_loss(g, model, batch, true);
  const double value = loss.value()[0];
  models::check_loss(value, "fine-tune step");
  g.backward(loss);
  optim.step(model.params(), lr);
  return value;
}

double recognition_loss(const rnt::RntModel& model, const std::vector<RecognitionExample>& batch) {
  Graph g(false);
  return batch_loss(g, model, batch, false).value()[0];
}

StrokePrediction predict_strokes(const rnt::RntModel& model, const Image& image) {
  const auto& cfg = model.config();
  require(cfg.head == rnt::HeadKind::Symbols, ErrorKind::Usage, "stroke prediction needs the recognition head");
  Graph g(false);
  Var patches = model.encode_image(g, image, false);
  const std::size_t steps = cfg.max_steps();
  std::vector<int> seq(steps, rnt::kPad);
  seq[0] = rnt::kBos;
  StrokePrediction out;
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor& logits = model.decode(g, model.symbol_inputs(g, seq), patches).value();
    int best = 1;
    for (int k = 2; k <= 5; ++k)
      if (logits.at(t, k) > logits.at(t, best)) best = k;
    if (t > 0 && logits.at(t, rnt::kEos) > logits.at(t, best)) return out;
    if (t + 1 == steps) break;
    out.strokes.push_back(static_cast<char>('0' + best));
    seq[t + 1] = best;
  }
  out.truncated = true;
  return out;
}

std::size_t resolve_confusable(const std::vector<double>& feature, const ConfusableSet& set) {
  require(!set.features.empty() && set.features.size() == set.members.size(), ErrorKind::Usage,
          "confusable set '" + set.key + "' has no reference features");
  std::size_t best = 0;
  double best_sim = models::cosine_similarity(feature, set.features[0]);
  for (std::size_t i = 1; i < set.features.size(); ++i) {
    const double s = models::cosine_similarity(feature, set.features[i]);
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  return best;
}

const char* disposition_name(Disposition d) {
  switch (d) {
    case Disposition::Overwrite: return "overwrite";
    case Disposition::Freeze: return "freeze";
    case Disposition::Tune: return "tune";
  }
  return "?";
}

Disposition SurgeryPlan::classify(const std::string& name) const {
  const auto matches = [&](const std::vector<std::string>& prefixes) {
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return name.starts_with(p); });
  };
  const bool ow = matches(overwrite_prefixes), fr = matches(freeze_prefixes);
  require(!(ow && fr), ErrorKind::Config, "parameter '" + name + "' is in both the overwrite and freeze sets");
  return ow ? Disposition::Overwrite : fr ? Disposition::Freeze : Disposition::Tune;
}

std::size_t SurgeryAudit::count(Disposition d) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [d](const auto& e) { return e.second == d; }));
}

std::string SurgeryAudit::csv() const {
  std::string out = "parameter,disposition\n";
  for (const auto& [name, d] : entries) out += name + "," + disposition_name(d) + "\n";
  return out;
}

SurgeryAudit apply_surgery(rnt::RntModel& model, const ad::Checkpoint& trained, const ad::Checkpoint& pretrained,
                           const SurgeryPlan& plan) {
  SurgeryAudit audit;
  model.params().for_each([&](ad::Parameter& p) { audit.entries.emplace_back(p.name, plan.classify(p.name)); });
  // Check the overwrite set before touching the model.
  for (const auto& [name, d] : audit.entries) {
    if (d != Disposition::Overwrite) continue;
    const Tensor* src = pretrained.find(name);
    require(src != nullptr, ErrorKind::Surgery, "pre-trained checkpoint has no entry '" + name + "'");
    const auto& p = model.params().get(name);
    require(src->shape() == p.value.shape(), ErrorKind::Surgery,
            "shape mismatch for '" + name + "': model " + ad::shape_str(p.value.shape()) + ", pre-trained " +
                ad::shape_str(src->shape()));
  }
  ad::import_parameters(model.params(), trained);
  for (const auto& [name, d] : audit.entries) {
    ad::Parameter& p = model.params().get(name);
    if (d == Disposition::Overwrite) p.value = pretrained.get(name);
    p.trainable = d != Disposition::Freeze;
    p.grad = Tensor();
  }
  return audit;
}

std::string ZeroShotReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << n_seen << ',' << accuracy << ',' << stroke_match_rate << ',' << n_test;
  return os.str();
}

ZeroShotReport evaluate_zero_shot(const StrokePredictor& predict, const FeatureFn& features,
                                  const std::vector<ConfusableSet>& sets,
                                  const std::map<std::string, std::string>& truth, const std::vector<TestItem>& items,
                                  std::size_t n_seen) {
  std::map<std::string, const ConfusableSet*> by_key;
  for (const auto& s : sets) by_key[s.key] = &s;
  ZeroShotReport rep;
  rep.n_seen = n_seen;
  rep.n_test = items.size();
  std::size_t correct = 0, matched = 0;
  for (const auto& item : items) {
    auto t = truth.find(item.label);
    require(t != truth.end(), ErrorKind::Data, "no stroke string for test label '" + item.label + "'");
    ItemResult r;
    r.label = item.label;
    r.predicted_strokes = predict(item.image);
    r.stroke_match = r.predicted_strokes == t->second;
    auto it = by_key.find(r.predicted_strokes);
    if (it == by_key.end()) {
      ++rep.unmatched;
    } else {
      const ConfusableSet& set = *it->second;
      const std::size_t idx = set.members.size() == 1 ? 0 : resolve_confusable(features(item.image), set);
      r.predicted_label = set.members[idx];
    }
    r.correct = r.predicted_label == item.label;
    correct += r.correct;
    matched += r.stroke_match;
    rep.items.push_back(std::move(r));
  }
  if (!items.empty()) {
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
    rep.stroke_match_rate = static_cast<double>(matched) / static_cast<double>(items.size());
  }
  return rep;
}

ZeroShotReport evaluate_zero_shot(const rnt::RntModel& model, const std::vector<ConfusableSet>& sets,
                                  const std::map<std::string, std::string>& truth, const std::vector<TestItem>& items,
                                  std::size_t n_seen) {
  return evaluate_zero_shot([&](const Image& img) { return predict_strokes(model, img).strokes; },
                            [&](const Image& img) { return image_features(model, img); }, sets, truth, items, n_seen);
}

double random_baseline(const std::vector<ConfusableSet>& sets, const std::vector<TestItem>& items,
                       std::size_t max_len, std::size_t trials, std::uint64_t seed) {
  require(max_len > 0 && trials > 0, ErrorKind::Config, "random baseline needs max_len > 0 and trials > 0");
  if (items.empty()) return 0.0;
  std::map<std::string, const ConfusableSet*> by_label;
  for (const auto& s : sets)
    for (const auto& m : s.members) by_label[m] = &s;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
  std::uniform_int_distribution<int> digit(1, 5);
  std::size_t hits = 0;
  std::string guess;
  for (const auto& item : items) {
    auto it = by_label.find(item.label);
    require(it != by_label.end(), ErrorKind::Data, "test label '" + item.label + "' is in no confusable set");
    const ConfusableSet& set = *it->second;
    std::uniform_int_distribution<std::size_t> member(0, set.members.size() - 1);
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t len = len_dist(rng);
      guess.clear();
      for (std::size_t i = 0; i < len; ++i) guess.push_back(static_cast<char>('0' + digit(rng)));
      if (guess == set.key && set.members[member(rng)] == item.label) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(trials * items.size());
}

}  // namespace sae::zeroshot
