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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "support/errors.hpp"
#include "tensor/checkpoint.hpp"
#include "zeroshot/zeroshot.hpp"

using namespace sae;
using strokes::Image;
using testing::thrown_by;

namespace {

rnt::RntConfig tiny(rnt::HeadKind head, std::size_t width = 8) {
  rnt::RntConfig c;
  c.input_size = 12;
  c.width = width;
  c.heads = 2;
  c.ffn_hidden = 2 * width;
  c.pad_len = 8;
  c.head = head;
  return c;
}

ad::Checkpoint snapshot(const rnt::RntModel& m) {
  ad::Checkpoint c;
  ad::export_parameters(m.params(), c);
  return c;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

bool same(const ad::Tensor& a, const ad::Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("confusable sets partition the character set by stroke string") {
  const auto specs = strokes::load_stroke_file(SAE_TEST_DATA_DIR "/hanzi_sample.json");
  const auto sets = zeroshot::build_confusable_sets(specs);
  std::multiset<std::string> seen;
  for (const auto& s : sets) {
    for (const auto& m : s.members) {
      seen.insert(m);
      auto it = std::find_if(specs.begin(), specs.end(), [&](const auto& c) { return c.label == m; });
      CHECK(strokes::encode_strokes(*it) == s.key);
    }
  }
  CHECK(seen.size() == specs.size());
  for (const auto& c : specs) CHECK(seen.count(c.label) == 1);
  auto five = std::find_if(sets.begin(), sets.end(), [](const auto& s) { return s.key == "25112"; });
  REQUIRE(five != sets.end());
  CHECK(five->members.size() == 4);
  for (const char* label : {"甲", "叶", "叮", "申"})
    CHECK(std::count(five->members.begin(), five->members.end(), label) == 1);
  CHECK(zeroshot::confusable_json(sets).find("25112") != std::string::npos);
}

TEST_CASE("stroke symbols") {
  CHECK(zeroshot::stroke_symbols("25135") == std::vector<int>{2, 5, 1, 3, 5});
  CHECK(thrown_by([] { zeroshot::stroke_symbols("126"); }).kind == ErrorKind::Data);
  CHECK(thrown_by([] { zeroshot::stroke_symbols("1a"); }).kind == ErrorKind::Data);
}

TEST_CASE("cosine resolution picks the scaled, noisy reference") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> count(1, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    zeroshot::ConfusableSet set;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      set.members.push_back("c" + std::to_string(i));
      set.features.push_back(random_vector(64, rng));
    }
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    auto noise = random_vector(64, rng);
    const double target = 0.099 * unit(rng) * norm(set.features[j]);
    const double nn = norm(noise);
    std::vector<double> f(64);
    const double c = 0.1 + 5.0 * unit(rng);
    for (std::size_t k = 0; k < 64; ++k) f[k] = c * (set.features[j][k] + noise[k] / nn * target);
    CHECK(zeroshot::resolve_confusable(f, set) == j);

    // Brute-force argmax of the cosine, lowest index first.
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < 64; ++k) dot += f[k] * set.features[i][k];
      const double cs = dot / (norm(f) * norm(set.features[i]));
      if (cs > best_cos) {
        best_cos = cs;
        best = i;
      }
    }
    CHECK(best == j);
  }
}

TEST_CASE("resolution edge cases") {
  zeroshot::ConfusableSet set;
  set.members = {"a"};
  set.features = {{1.0, 2.0}};
  CHECK(zeroshot::resolve_confusable({2.0, 4.0}, set) == 0);
  set.members = {"a", "b"};
  set.features = {{1.0, 0.0}, {1.0, 0.0}};
  CHECK(zeroshot::resolve_confusable({3.0, 0.0}, set) == 0);
  CHECK(thrown_by([&] { zeroshot::resolve_confusable({1.0}, set); }).kind == ErrorKind::Dimension);
  set.features.clear();
  CHECK(thrown_by([&] { zeroshot::resolve_confusable({1.0, 0.0}, set); }).kind == ErrorKind::Usage);
}

TEST_CASE("recognition memorises one stroke string") {
  const auto specs = strokes::load_stroke_file(SAE_TEST_DATA_DIR "/hanzi_sample.json");
  auto ming = std::find_if(specs.begin(), specs.end(), [](const auto& s) { return s.label == "鸣"; });
  REQUIRE(ming != specs.end());
  rnt::RntModel model(tiny(rnt::HeadKind::Symbols, 16), 12);
  const std::vector<zeroshot::RecognitionExample> batch{
      {strokes::render_full(*ming, {12}), strokes::encode_strokes(*ming)}};
  CHECK(batch[0].strokes == "25135451");
  ad::AdamW optim;
  const double first = zeroshot::recognition_loss(model, batch);
  for (int step = 0; step < 300; ++step) zeroshot::finetune_step(model, optim, batch, 3e-3);
  CHECK(zeroshot::recognition_loss(model, batch) < 0.01 * first);
  const auto pred = zeroshot::predict_strokes(model, batch[0].image);
  CHECK(pred.strokes == "25135451");
  CHECK_FALSE(pred.truncated);
}

TEST_CASE("recognition rejects strings longer than the decoder") {
  rnt::RntModel model(tiny(rnt::HeadKind::Symbols), 13);
  const std::vector<zeroshot::RecognitionExample> batch{{Image(12, 12), "123451234"}};
  CHECK(thrown_by([&] { zeroshot::recognition_loss(model, batch); }).kind == ErrorKind::Data);
}

TEST_CASE("surgery partitions, overwrites and freezes") {
  rnt::RntModel pretrained(tiny(rnt::HeadKind::Pixels), 14);
  rnt::RntModel trained(tiny(rnt::HeadKind::Symbols), 15);
  rnt::RntModel model(tiny(rnt::HeadKind::Symbols), 16);
  const auto pre = snapshot(pretrained);
  const auto tr = snapshot(trained);
  const auto audit = zeroshot::apply_surgery(model, tr, pre);

  std::set<std::string> names;
  model.params().for_each([&](const ad::Parameter& p) { names.insert(p.name); });
  CHECK(audit.entries.size() == names.size());
  std::set<std::string> covered;
  for (const auto& e : audit.entries) covered.insert(e.first);
  CHECK(covered == names);
  CHECK(audit.count(zeroshot::Disposition::Overwrite) + audit.count(zeroshot::Disposition::Freeze) +
            audit.count(zeroshot::Disposition::Tune) ==
        names.size());
  CHECK(audit.count(zeroshot::Disposition::Overwrite) > 0);
  CHECK(audit.count(zeroshot::Disposition::Freeze) > 0);
  CHECK(audit.count(zeroshot::Disposition::Tune) > 0);
  CHECK(audit.csv().rfind("parameter,disposition\n", 0) == 0);

  for (const auto& [name, d] : audit.entries) {
    const auto& p = model.params().get(name);
    const auto& expect = d == zeroshot::Disposition::Overwrite ? pre.get(name) : tr.get(name);
    CHECK(same(p.value, expect));
    CHECK(p.trainable == (d != zeroshot::Disposition::Freeze));
  }

  // Ten fine-tuning steps: the freeze set stays bitwise, overwritten weights move.
  const auto start = snapshot(model);
  ad::AdamW optim;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<zeroshot::RecognitionExample> batch;
  for (int i = 0; i < 4; ++i) {
    Image img(12, 12);
    for (auto& v : img.pixels) v = u(rng) < 0.3 ? 1.0 : 0.0;
    batch.push_back({img, std::string(1 + i, static_cast<char>('1' + i))});
  }
  for (int step = 0; step < 10; ++step) zeroshot::finetune_step(model, optim, batch, 1e-3);
  bool overwrite_moved = false;
  for (const auto& [name, d] : audit.entries) {
    const auto& now = model.params().get(name);
    if (d == zeroshot::Disposition::Freeze) CHECK(same(now.value, start.get(name)));
    if (d == zeroshot::Disposition::Overwrite && !now.buffer)
      overwrite_moved = overwrite_moved || !same(now.value, pre.get(name));
  }
  CHECK(overwrite_moved);

  // Applying the same surgery again gives the same model.
  rnt::RntModel again(tiny(rnt::HeadKind::Symbols), 18);
  zeroshot::apply_surgery(again, tr, pre);
  zeroshot::apply_surgery(again, tr, pre);
  for (const auto& e : audit.entries)
    CHECK(same(again.params().get(e.first).value, start.get(e.first)));
}

TEST_CASE("surgery rejects mismatched checkpoints") {
  rnt::RntModel wide(tiny(rnt::HeadKind::Pixels, 12), 19);
  rnt::RntModel trained(tiny(rnt::HeadKind::Symbols), 20);
  rnt::RntModel model(tiny(rnt::HeadKind::Symbols), 21);
  const auto before = snapshot(model);
  auto t = thrown_by([&] { zeroshot::apply_surgery(model, snapshot(trained), snapshot(wide)); });
  CHECK(t.kind == ErrorKind::Surgery);
  CHECK(t.message.find("shape mismatch") != std::string::npos);
  model.params().for_each([&](const ad::Parameter& p) { CHECK(same(p.value, before.get(p.name))); });

  ad::Checkpoint empty;
  CHECK(thrown_by([&] { zeroshot::apply_surgery(model, snapshot(trained), empty); }).kind == ErrorKind::Surgery);

  zeroshot::SurgeryPlan plan;
  plan.freeze_prefixes.push_back("rnt.decoder.");
  CHECK(thrown_by([&] { plan.classify("rnt.decoder.norm.gamma"); }).kind == ErrorKind::Config);
}

TEST_CASE("evaluation with oracle predictors") {
  const auto specs = strokes::load_stroke_file(SAE_TEST_DATA_DIR "/hanzi_sample.json");
  auto sets = zeroshot::build_confusable_sets(specs);
  std::map<std::string, std::string> truth;
  std::map<std::string, std::size_t> index;
  for (const auto& s : specs) {
    truth[s.label] = strokes::encode_strokes(s);
    index[s.label] = index.size();
  }
  // Image pixel 0 carries the item index so oracles can look it up.
  auto one_hot = [&](std::size_t i) {
    std::vector<double> v(specs.size(), 0.0);
    v[i] = 1.0;
    return v;
  };
  for (auto& s : sets)
    for (const auto& m : s.members) s.features.push_back(one_hot(index[m]));
  std::vector<zeroshot::TestItem> items;
  for (const auto& s : specs) {
    Image img(8, 8);
    img.pixels[0] = static_cast<double>(index[s.label]);
    items.push_back({s.label, img});
  }
  auto label_of = [&](const Image& img) { return specs[static_cast<std::size_t>(img.pixels[0])].label; };
  const auto rep = zeroshot::evaluate_zero_shot([&](const Image& img) { return truth[label_of(img)]; },
                                                [&](const Image& img) { return one_hot(static_cast<std::size_t>(img.pixels[0])); },
                                                sets, truth, items, 3);
  CHECK(rep.accuracy == 1.0);
  CHECK(rep.stroke_match_rate == 1.0);
  CHECK(rep.unmatched == 0);
  CHECK(rep.csv_row() == "3,1,1," + std::to_string(specs.size()));

  const auto miss = zeroshot::evaluate_zero_shot([](const Image&) { return std::string("5"); },
                                                 [&](const Image& img) { return one_hot(static_cast<std::size_t>(img.pixels[0])); },
                                                 sets, truth, items, 3);
  CHECK(miss.accuracy == 0.0);
  CHECK(miss.unmatched == specs.size());
}

TEST_CASE("random baseline matches its closed form") {
  zeroshot::ConfusableSet a{"1", {"x"}, {}};
  zeroshot::ConfusableSet b{"12", {"y", "z"}, {}};
  const std::vector<zeroshot::TestItem> items{{"x", Image(8, 8)}, {"y", Image(8, 8)}};
  // Lengths uniform over {1, 2}: x hits with 1/2 * 1/5, y with 1/2 * 1/25 * 1/2.
  const double analytic = (0.5 / 5.0 + 0.5 / 25.0 / 2.0) / 2.0;
  const double sim = zeroshot::random_baseline({a, b}, items, 2, 400000, 23);
  CHECK(std::abs(sim - analytic) < 0.002);
  CHECK(zeroshot::random_baseline({a, b}, items, 2, 1000, 5) == zeroshot::random_baseline({a, b}, items, 2, 1000, 5));
  CHECK(thrown_by([&] { zeroshot::random_baseline({a}, items, 2, 10, 1); }).kind == ErrorKind::Data);
}
