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

// One PASS/FAIL line per acceptance criterion. Tolerances and budgets are
// fixed here; pass criterion numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "models/common.hpp"
#include "pipeline/pipeline.hpp"
#include "support/gradient_suite.hpp"

using namespace sae;
using Clock = std::chrono::steady_clock;

namespace {

// Criterion 1
constexpr int kGradInstances = 20;
constexpr double kGradRelErr = 1e-4;
constexpr double kGradBudgetSec = 120.0;
// Criterion 2
constexpr double kRasterBudgetSec = 60.0;
// Criterion 3
constexpr double kMatmulTol = 1e-12;
constexpr double kConvTol = 1e-10;
constexpr double kCosineTol = 1e-12;
constexpr double kSoftmaxCeTol = 1e-10;
constexpr double kKmeansTol = 1e-12;
constexpr int kOracleInstances = 200;
constexpr double kOracleBudgetSec = 60.0;
// Criteria 4 and 5
constexpr double kTrainRatio = 0.20;
constexpr double kPretrainBudgetSec = 15 * 60.0;
// Criterion 6
constexpr double kSeenMatch = 0.95;
constexpr double kZeroShotBudgetSec = 20 * 60.0;
// Criterion 7
constexpr int kResolveTrials = 1000;
constexpr std::size_t kResolveMaxN = 8;
constexpr double kResolveNoise = 0.1;
// Criterion 8
constexpr int kSurgerySteps = 10;
// Criterion 9
constexpr std::size_t kShuffles = 20;
constexpr std::size_t kShuffleWins = 16;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

pipeline::RunConfig desk(pipeline::Arch arch) {
  auto cfg = pipeline::desk_config();
  cfg.arch = arch;
  cfg.seed = 7;
  cfg.epochs = 200;
  cfg.n_seen = 45;
  if (arch == pipeline::Arch::Rnt) {
    // Same values as configs/desk-rnt.cfg.
    cfg.lr_max = 1e-3;
    cfg.batch_size = 8;
  }
  return cfg;
}

// ---- 1 ----

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  std::string worst_name;
  std::size_t ops = 0;
  for (const auto& c : testing::gradient_cases()) {
    ++ops;
    for (int i = 0; i < kGradInstances; ++i) {
      const double e = c.run(rng).max_rel_err;
      if (e > worst) {
        worst = e;
        worst_name = c.name;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst < kGradRelErr && t < kGradBudgetSec,
          fmt("%zu ops x %d instances, worst rel err %.2e (%s), %.1f s", ops, kGradInstances, worst,
              worst_name.c_str(), t)};
}

// ---- 2 ----

Outcome rasterization_suite() {
  const auto t0 = Clock::now();
  const auto specs = strokes::synthetic_alphabet(12, 60, 7);
  std::size_t checked = 0, failures = 0;
  for (std::size_t size : {28u, 140u}) {
    const strokes::RasterOptions opt{size};
    for (const auto& spec : specs) {
      const auto a = strokes::rasterize(spec, opt, strokes::Form::Cumulative);
      const auto b = strokes::rasterize(spec, opt, strokes::Form::Incremental);
      const auto full = strokes::render_full(spec, opt);
      bool ok = a.frames.size() == spec.strokes.size() && b.frames.size() == spec.strokes.size();
      for (std::size_t k = 1; ok && k < a.frames.size(); ++k)
        for (std::size_t i = 0; i < full.pixels.size(); ++i) ok = ok && a.frames[k].pixels[i] >= a.frames[k - 1].pixels[i];
      ok = ok && a.frames.back().pixels == full.pixels;
      strokes::Image bmax(size, size);
      for (const auto& f : b.frames) bmax = strokes::pixel_max(bmax, f);
      ok = ok && bmax.pixels == full.pixels;
      for (const auto* seq : {&a, &b}) {
        const auto padded = strokes::pad_sequence(*seq, strokes::kMaxStrokes);
        ok = ok && padded.frames.size() == strokes::kMaxStrokes;
        for (std::size_t k = 0; ok && k < padded.frames.size(); ++k)
          ok = k < seq->frames.size() ? padded.frames[k].pixels == seq->frames[k].pixels : padded.frames[k].blank();
      }
      ++checked;
      failures += !ok;
    }
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < kRasterBudgetSec,
          fmt("%zu character renders, %zu violations, %.1f s", checked, failures, t)};
}

// ---- 3 ----

ad::Tensor random_tensor(ad::Shape s, std::mt19937_64& rng) { return testing::random_tensor(std::move(s), rng); }

double matmul_oracle_err(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(1, 7);
  const std::size_t m = d(rng), k = d(rng), n = d(rng);
  const auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
  ad::Graph g(false);
  const auto c = ad::matmul(g.constant(a), g.constant(b)).value();
  double err = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      err = std::max(err, std::abs(s - c[i * n + j]));
    }
  return err;
}

double conv_oracle_err(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> small(1, 3), side(3, 8), kern(1, 3), pad(0, 1), stride(1, 2);
  const std::size_t n = small(rng), c = small(rng), f = small(rng), h = side(rng), w = side(rng);
  const std::size_t kh = kern(rng), kw = kern(rng), p = pad(rng), s = stride(rng);
  if (h + 2 * p < kh || w + 2 * p < kw) return 0.0;
  const auto x = random_tensor({n, c, h, w}, rng), k = random_tensor({f, c, kh, kw}, rng);
  ad::Graph g(false);
  const auto y = ad::conv2d(g.constant(x), g.constant(k), s, p).value();
  const std::size_t oh = (h + 2 * p - kh) / s + 1, ow = (w + 2 * p - kw) / s + 1;
  if (y.shape() != ad::Shape{n, f, oh, ow}) return INFINITY;
  double err = 0.0;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < f; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long yy = static_cast<long>(i * s + u) - static_cast<long>(p);
                const long xx = static_cast<long>(j * s + v) - static_cast<long>(p);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
                acc += x[((b * c + ch) * h + yy) * w + xx] * k[((o * c + ch) * kh + u) * kw + v];
              }
          err = std::max(err, std::abs(acc - y[((b * f + o) * oh + i) * ow + j]));
        }
  return err;
}

double cosine_oracle_err(std::mt19937_64& rng) {
  const std::size_t d = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
  std::vector<double> a(d), b(d);
  std::normal_distribution<double> nd;
  for (auto& v : a) v = nd(rng);
  for (auto& v : b) v = nd(rng);
  double aa = 0.0, bb = 0.0, dd = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    dd += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const double oracle = std::clamp((aa + bb - dd) / (2.0 * std::sqrt(aa * bb)), -1.0, 1.0);
  return std::abs(models::cosine_similarity(a, b) - oracle);
}

double softmax_ce_oracle_err(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(1, 6);
  const std::size_t rows = d(rng), cls = d(rng) + 1;
  auto logits = random_tensor({rows, cls}, rng);
  for (auto& v : logits.data()) v *= 5.0;
  std::vector<int> t(rows);
  for (auto& v : t) v = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, cls - 1)(rng));
  ad::Graph g(false);
  const double got = ad::softmax_cross_entropy(g.constant(logits), t).value()[0];
  double oracle = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    // Softmax first, then the log of the target probability.
    long double z = 0.0L;
    for (std::size_t j = 0; j < cls; ++j) z += std::exp(static_cast<long double>(logits[r * cls + j]));
    const long double p = std::exp(static_cast<long double>(logits[r * cls + static_cast<std::size_t>(t[r])])) / z;
    oracle -= static_cast<double>(std::log(p));
  }
  return std::abs(got - oracle);
}

double sphere_objective(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& assign, std::size_t k) {
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> sum(pts[0].size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (assign[i] != c) continue;
      double n = 0.0;
      for (double v : pts[i]) n += v * v;
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += pts[i][j] / std::sqrt(n);
    }
    double s = 0.0;
    for (double v : sum) s += v * v;
    total += std::sqrt(s);
  }
  return total;
}

// 6 points in two tight bundles; k = 2 must reach the best of all 2-partitions.
double kmeans_oracle_err(std::mt19937_64& rng) {
  std::normal_distribution<double> nd, noise(0.0, 0.05);
  std::vector<double> ca(4), cb(4);
  for (;;) {
    for (auto& v : ca) v = nd(rng);
    for (auto& v : cb) v = nd(rng);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < 4; ++i) dot += ca[i] * cb[i], na += ca[i] * ca[i], nb += cb[i] * cb[i];
    if (dot / std::sqrt(na * nb) < 0.5) break;
  }
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 6; ++i) {
    auto p = i % 2 == 0 ? ca : cb;
    for (auto& v : p) v += noise(rng);
    pts.push_back(p);
  }
  double best = 0.0;
  for (unsigned mask = 0; mask < 64; ++mask) {
    std::vector<std::size_t> a(6);
    for (std::size_t i = 0; i < 6; ++i) a[i] = (mask >> i) & 1U;
    best = std::max(best, sphere_objective(pts, a, 2));
  }
  const auto r = embed::kmeans_cosine(pts, 2, rng());
  return std::abs(sphere_objective(pts, r.assignment, 2) - best);
}

Outcome oracle_equivalences() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  struct Op {
    const char* name;
    double tol;
    std::function<double(std::mt19937_64&)> err;
  };
  const std::vector<Op> ops{{"matmul", kMatmulTol, matmul_oracle_err},
                            {"conv2d", kConvTol, conv_oracle_err},
                            {"cosine", kCosineTol, cosine_oracle_err},
                            {"softmax-CE", kSoftmaxCeTol, softmax_ce_oracle_err},
                            {"k-means", kKmeansTol, kmeans_oracle_err}};
  bool ok = true;
  std::string detail;
  for (const auto& op : ops) {
    double worst = 0.0;
    for (int i = 0; i < kOracleInstances; ++i) worst = std::max(worst, op.err(rng));
    ok = ok && worst < op.tol;
    detail += fmt("%s %.1e<%.0e ", op.name, worst, op.tol);
  }
  const double t = seconds_since(t0);
  return {ok && t < kOracleBudgetSec, detail + fmt("(%d instances each), %.1f s", kOracleInstances, t)};
}

// ---- 4, 5, 6 ----

struct PretrainRun {
  pipeline::RunConfig cfg;
  pipeline::PretrainResult result;
  double seconds = 0.0;
};

PretrainRun run_pretrain(pipeline::Arch arch) {
  PretrainRun r;
  r.cfg = desk(arch);
  const auto ds = pipeline::build_dataset(r.cfg);
  const auto t0 = Clock::now();
  r.result = pipeline::pretrain(r.cfg, ds);
  r.seconds = seconds_since(t0);
  return r;
}

Outcome pretrain_checks(const PretrainRun& r) {
  const auto& m = r.result.metrics;
  const double ratio = m.back().train_mse / m.front().train_mse;
  const auto& u = r.result.unseen;
  return {ratio < kTrainRatio && u.mse < u.blank_mse && r.seconds < kPretrainBudgetSec,
          fmt("train mse %.4g -> %.4g (ratio %.3f < %.2f), unseen mse %.5g vs blank %.5g, %.0f s", m.front().train_mse,
              m.back().train_mse, ratio, kTrainRatio, u.mse, u.blank_mse, r.seconds)};
}

// Replacing frames k.. by noise leaves predictions 0..k bitwise unchanged.
bool causality_holds(const rnt::RntModel& model, const pipeline::RunConfig& cfg, const pipeline::Dataset& ds) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t dim = cfg.rnt_input * cfg.rnt_input;
  for (const auto& spec : ds.unseen()) {
    const auto ex = pipeline::reconstruction_example(spec, cfg);
    ad::Graph g0(false);
    const auto base = rnt::decode_teacher_forced(g0, model, ex.input, ex.targets).value();
    for (std::size_t k = 0; k < cfg.pad_len; ++k) {
      auto noisy = ex.targets;
      for (std::size_t j = k; j < noisy.size(); ++j)
        for (auto& v : noisy[j].pixels) v = u(rng);
      ad::Graph g(false);
      const auto out = rnt::decode_teacher_forced(g, model, ex.input, noisy).value();
      for (std::size_t i = 0; i < (k + 1) * dim; ++i)
        if (out[i] != base[i]) return false;
    }
  }
  return true;
}

struct ZeroShotRun {
  pipeline::ZeroShotRun run;
  double seconds = 0.0;
};

ZeroShotRun run_zero_shot(const PretrainRun& rnt_run) {
  ZeroShotRun z;
  const auto ds = pipeline::build_dataset(rnt_run.cfg);
  const auto t0 = Clock::now();
  z.run = pipeline::run_zero_shot(rnt_run.cfg, ds, rnt_run.result.best);
  z.seconds = seconds_since(t0);
  return z;
}

Outcome zero_shot_checks(const ZeroShotRun& z) {
  const auto& r = z.run;
  return {r.seen.stroke_match_rate >= kSeenMatch && r.unseen.accuracy > r.random_baseline &&
              z.seconds < kZeroShotBudgetSec,
          fmt("seen stroke match %.3f >= %.2f, unseen accuracy %.4f vs random baseline %.3g (%zu trials/item), %.0f s",
              r.seen.stroke_match_rate, kSeenMatch, r.unseen.accuracy, r.random_baseline,
              static_cast<std::size_t>(desk(pipeline::Arch::Rnt).baseline_trials), z.seconds)};
}

// ---- 7 ----

Outcome resolution() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(1, kResolveMaxN);
  const std::size_t d = 64;
  int correct = 0;
  for (int trial = 0; trial < kResolveTrials; ++trial) {
    zeroshot::ConfusableSet set;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> f(d);
      for (auto& v : f) v = nd(rng);
      set.members.push_back("m" + std::to_string(i));
      set.features.push_back(std::move(f));
    }
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const auto& ref = set.features[j];
    double ref_norm = 0.0;
    for (double v : ref) ref_norm += v * v;
    ref_norm = std::sqrt(ref_norm);
    std::vector<double> noise(d);
    double noise_norm = 0.0;
    for (auto& v : noise) v = nd(rng), noise_norm += v * v;
    noise_norm = std::sqrt(noise_norm);
    // Strictly below the bound.
    const double target = kResolveNoise * ref_norm * u(rng) * (1.0 - 1e-9);
    const double c = std::exp(4.0 * u(rng) - 2.0);
    std::vector<double> f(d);
    for (std::size_t k = 0; k < d; ++k) f[k] = c * ref[k] + noise[k] / noise_norm * target;
    correct += zeroshot::resolve_confusable(f, set) == j;
  }
  return {correct == kResolveTrials,
          fmt("%d/%d correct, N in 1..%zu, noise < %.1f x |F'|", correct, kResolveTrials, kResolveMaxN, kResolveNoise)};
}

// ---- 8 ----

Outcome surgery_contract() {
  auto cfg = desk(pipeline::Arch::Rnt);
  const auto ds = pipeline::build_dataset(cfg);
  rnt::RntModel pretrained(cfg.rnt_config(rnt::HeadKind::Pixels), 31);
  rnt::RntModel trained(cfg.rnt_config(rnt::HeadKind::Symbols), 32);
  ad::Checkpoint pre, tr;
  ad::export_parameters(pretrained.params(), pre);
  ad::export_parameters(trained.params(), tr);
  rnt::RntModel model(cfg.rnt_config(rnt::HeadKind::Symbols), 33);
  const zeroshot::SurgeryPlan plan;
  const auto audit = zeroshot::apply_surgery(model, tr, pre, plan);

  std::set<std::string> names, covered;
  model.params().for_each([&](const ad::Parameter& p) { names.insert(p.name); });
  for (const auto& e : audit.entries) covered.insert(e.first);
  const std::size_t o = audit.count(zeroshot::Disposition::Overwrite), f = audit.count(zeroshot::Disposition::Freeze),
                    t = audit.count(zeroshot::Disposition::Tune);
  const bool partition = covered == names && audit.entries.size() == names.size() && o + f + t == names.size();

  auto same = [](const ad::Tensor& a, const ad::Tensor& b) {
    return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
  };
  bool step0 = true;
  for (const auto& [name, d] : audit.entries) {
    const auto& p = model.params().get(name);
    if (d == zeroshot::Disposition::Overwrite) step0 = step0 && same(p.value, pre.get(name));
    else step0 = step0 && same(p.value, tr.get(name));
    step0 = step0 && p.trainable == (d != zeroshot::Disposition::Freeze);
  }

  ad::Checkpoint start;
  ad::export_parameters(model.params(), start);
  ad::AdamW optim(cfg.adamw());
  const auto batch = pipeline::recognition_examples(ds.seen(), cfg, 1);
  std::vector<zeroshot::RecognitionExample> small(batch.begin(), batch.begin() + 16);
  for (int s = 0; s < kSurgerySteps; ++s) zeroshot::finetune_step(model, optim, small, cfg.lr_max);
  bool frozen = true;
  std::size_t overwrite_params = 0, overwrite_moved = 0;
  for (const auto& [name, d] : audit.entries) {
    const auto& p = model.params().get(name);
    if (d == zeroshot::Disposition::Freeze) frozen = frozen && same(p.value, start.get(name));
    if (d == zeroshot::Disposition::Overwrite && !p.buffer) {
      ++overwrite_params;
      overwrite_moved += !same(p.value, pre.get(name));
    }
  }
  // Overwrite entries are tunable under the default plan, so every one of them
  // moves away from the pre-trained start.
  const bool tuned = overwrite_moved == overwrite_params;
  return {partition && step0 && frozen && tuned,
          fmt("%zu overwrite / %zu freeze / %zu tune of %zu; step 0 %s; after %d steps freeze %s, %zu/%zu overwrite "
              "tensors moved",
              o, f, t, names.size(), step0 ? "matches" : "DIFFERS", kSurgerySteps, frozen ? "bitwise fixed" : "CHANGED",
              overwrite_moved, overwrite_params)};
}

// ---- 9 ----

Outcome embedding_check(const PretrainRun& vit_run) {
  const auto ds = pipeline::build_dataset(vit_run.cfg);
  const auto model = pipeline::load_model(vit_run.result.best);
  const auto rep = pipeline::embed_alphabet(*model.vit, ds.specs, vit_run.cfg);
  const auto control = embed::shuffled_mrr(rep.similarity, rep.truth, kShuffles, vit_run.cfg.seed);
  std::size_t wins = 0;
  double mean = 0.0;
  for (double c : control) {
    wins += rep.mrr > c;
    mean += c / static_cast<double>(control.size());
  }
  return {wins >= kShuffleWins, fmt("MRR %.4f vs shuffled mean %.4f, better in %zu/%zu shuffles (need %zu)", rep.mrr,
                                    mean, wins, kShuffles, kShuffleWins)};
}

// ---- 10 ----

bool same_checkpoint(const ad::Checkpoint& a, const ad::Checkpoint& b) { return a.serialize() == b.serialize(); }

bool same_pretrain(const pipeline::PretrainResult& a, const pipeline::PretrainResult& b) {
  if (a.metrics.size() != b.metrics.size() || a.best_epoch != b.best_epoch) return false;
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    const auto &x = a.metrics[i], &y = b.metrics[i];
    if (x.train_mse != y.train_mse || x.val_mse != y.val_mse || x.lr != y.lr) return false;
  }
  return a.seen.mse == b.seen.mse && a.unseen.mse == b.unseen.mse && a.seen.blank_mse == b.seen.blank_mse &&
         same_checkpoint(a.best, b.best) && same_checkpoint(a.last, b.last);
}

bool same_report(const zeroshot::ZeroShotReport& a, const zeroshot::ZeroShotReport& b) {
  if (a.accuracy != b.accuracy || a.stroke_match_rate != b.stroke_match_rate || a.items.size() != b.items.size())
    return false;
  for (std::size_t i = 0; i < a.items.size(); ++i)
    if (a.items[i].predicted_strokes != b.items[i].predicted_strokes ||
        a.items[i].predicted_label != b.items[i].predicted_label)
      return false;
  return true;
}

bool same_zero_shot(const pipeline::ZeroShotRun& a, const pipeline::ZeroShotRun& b) {
  return a.recognizer_losses == b.recognizer_losses && a.finetune_losses == b.finetune_losses &&
         same_report(a.seen, b.seen) && same_report(a.unseen, b.unseen) && a.random_baseline == b.random_baseline &&
         same_checkpoint(a.trained, b.trained) && same_checkpoint(a.finetuned, b.finetuned);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };
  int failures = 0;
  auto report = [&](int n, const char* title, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("CRITERION %d %s - %s: %s\n", n, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
    std::fflush(stdout);
  };

  if (want(1)) report(1, "gradient suite", gradient_suite);
  if (want(2)) report(2, "rasterization suite", rasterization_suite);
  if (want(3)) report(3, "oracle equivalences", oracle_equivalences);

  std::optional<PretrainRun> vit_run, rnt_run;
  std::optional<ZeroShotRun> zs_run;
  auto need_vit = [&] {
    if (!vit_run) vit_run = run_pretrain(pipeline::Arch::Vit);
    return *vit_run;
  };
  auto need_rnt = [&] {
    if (!rnt_run) rnt_run = run_pretrain(pipeline::Arch::Rnt);
    return *rnt_run;
  };
  if (want(4) || want(9) || want(10))
    report(4, "vit desk pre-training", [&] { return pretrain_checks(need_vit()); });
  if (want(5) || want(6) || want(10))
    report(5, "rnt desk pre-training", [&] {
      const auto& r = need_rnt();
      auto o = pretrain_checks(r);
      const auto model = pipeline::load_model(r.result.best);
      const bool causal = causality_holds(*model.rnt, r.cfg, pipeline::build_dataset(r.cfg));
      o.pass = o.pass && causal;
      o.detail += causal ? ", causality bitwise" : ", CAUSALITY VIOLATED";
      return o;
    });
  if (want(6) || want(10))
    report(6, "zero-shot desk pipeline", [&] {
      zs_run = run_zero_shot(need_rnt());
      return zero_shot_checks(*zs_run);
    });
  if (want(7)) report(7, "confusable-set resolution", resolution);
  if (want(8)) report(8, "surgery contract", surgery_contract);
  if (want(9)) report(9, "embedding intrinsic check", [&] { return embedding_check(need_vit()); });
  if (want(10))
    report(10, "determinism", [&] {
      const auto vit2 = run_pretrain(pipeline::Arch::Vit);
      const auto rnt2 = run_pretrain(pipeline::Arch::Rnt);
      const auto zs2 = run_zero_shot(rnt2);
      const bool v = same_pretrain(vit_run->result, vit2.result);
      const bool r = same_pretrain(rnt_run->result, rnt2.result);
      const bool z = zs_run && same_zero_shot(zs_run->run, zs2.run);
      return Outcome{v && r && z, fmt("vit rerun %s, rnt rerun %s, zero-shot rerun %s", v ? "identical" : "DIFFERS",
                                      r ? "identical" : "DIFFERS", z ? "identical" : "DIFFERS")};
    });

  std::printf("%d criterion failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
