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

#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <string>

#include "common/error.hpp"
#include "json.hpp"
#include "pipeline/pipeline.hpp"
#include "sae/sae.h"

using namespace sae;

struct sae_config {
  pipeline::RunConfig cfg;
  std::string scratch;
};

struct sae_dataset {
  pipeline::Dataset ds;
  pipeline::RunConfig cfg;
};

struct sae_checkpoint {
  ad::Checkpoint ckpt;
};

struct sae_pretrain_result {
  pipeline::PretrainResult res;
  pipeline::RunConfig cfg;
};

struct sae_zeroshot_result {
  pipeline::ZeroShotRun run;
  pipeline::RunConfig cfg;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
sae_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return SAE_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<sae_status>(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SAE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SAE_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* what) {
  require(p != nullptr, ErrorKind::Usage, std::string(what) + " is NULL");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

std::filesystem::path make_dir(const char* dir) {
  need(dir, "output directory");
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  require(!ec, ErrorKind::Io, "cannot create " + p.string() + ": " + ec.message());
  return p;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

pipeline::Progress progress_fn(sae_progress_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

sae_eval_report to_c(const zeroshot::ZeroShotReport& r) {
  return {r.n_seen, r.n_test, r.accuracy, r.stroke_match_rate, r.unmatched};
}

std::string items_csv(const zeroshot::ZeroShotReport& r) {
  std::string out = "label,predicted_strokes,predicted_label,stroke_match,correct\n";
  for (const auto& i : r.items)
    out += i.label + "," + i.predicted_strokes + "," + i.predicted_label + "," + (i.stroke_match ? "1" : "0") + "," +
           (i.correct ? "1" : "0") + "\n";
  return out;
}

// Dataset as seen by a checkpoint's run: same characters, the dataset split.
pipeline::RunConfig with_split(pipeline::RunConfig cfg, const sae_dataset* ds) {
  cfg.n_seen = ds->ds.split.n_seen;
  return cfg;
}

}  // namespace

extern "C" {

const char* sae_version(void) { return "0.1.0"; }

const char* sae_last_error(void) { return last_error.c_str(); }

const char* sae_status_name(sae_status status) {
  if (status == SAE_OK) return "ok";
  if (status < SAE_ERR_INTERNAL || status > SAE_ERR_DATA) return "unknown";
  return to_string(static_cast<ErrorKind>(status));
}

sae_status sae_config_new(sae_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new sae_config{};
  });
}

void sae_config_free(sae_config* cfg) { delete cfg; }

sae_status sae_config_set(sae_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

sae_status sae_config_get(sae_config* cfg, const char* key, const char** value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->scratch = cfg->cfg.get(key);
    *value = cfg->scratch.c_str();
  });
}

sae_status sae_config_load(sae_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "config");
    need(path, "path");
    cfg->cfg.load_file(path);
  });
}

sae_status sae_config_serialize(sae_config* cfg, const char** text) {
  return guard([&] {
    need(cfg, "config");
    need(text, "text");
    cfg->scratch = cfg->cfg.serialize();
    *text = cfg->scratch.c_str();
  });
}

sae_status sae_config_validate(const sae_config* cfg) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.validate();
  });
}

sae_status sae_dataset_build(const sae_config* cfg, sae_dataset** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    cfg->cfg.validate();
    *out = new sae_dataset{pipeline::build_dataset(cfg->cfg), cfg->cfg};
  });
}

sae_status sae_dataset_load(const sae_config* cfg, const char* dir, sae_dataset** out) {
  return guard([&] {
    need(cfg, "config");
    need(dir, "dir");
    need(out, "out");
    *out = new sae_dataset{pipeline::load_dataset(dir, cfg->cfg), cfg->cfg};
  });
}

sae_status sae_dataset_write(const sae_dataset* ds, const sae_config* cfg, const char* dir) {
  return guard([&] {
    need(ds, "dataset");
    need(cfg, "config");
    pipeline::write_dataset(make_dir(dir), ds->ds, cfg->cfg);
  });
}

sae_status sae_dataset_counts(const sae_dataset* ds, size_t* n_chars, size_t* n_seen, size_t* n_test) {
  return guard([&] {
    need(ds, "dataset");
    if (n_chars) *n_chars = ds->ds.specs.size();
    if (n_seen) *n_seen = ds->ds.split.train.size();
    if (n_test) *n_test = ds->ds.split.test.size();
  });
}

void sae_dataset_free(sae_dataset* ds) { delete ds; }

sae_status sae_checkpoint_load(const char* path, sae_checkpoint** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new sae_checkpoint{ad::Checkpoint::load(path)};
  });
}

sae_status sae_checkpoint_save(const sae_checkpoint* ckpt, const char* path) {
  return guard([&] {
    need(ckpt, "checkpoint");
    need(path, "path");
    ckpt->ckpt.save(path);
  });
}

sae_status sae_checkpoint_meta(const sae_checkpoint* ckpt, const char* key, const char** value) {
  return guard([&] {
    need(ckpt, "checkpoint");
    need(key, "key");
    need(value, "value");
    *value = ckpt->ckpt.meta_at(key).c_str();
  });
}

sae_status sae_checkpoint_config(const sae_checkpoint* ckpt, sae_config** out) {
  return guard([&] {
    need(ckpt, "checkpoint");
    need(out, "out");
    *out = new sae_config{pipeline::checkpoint_config(ckpt->ckpt), {}};
  });
}

void sae_checkpoint_free(sae_checkpoint* ckpt) { delete ckpt; }

sae_status sae_pretrain(const sae_config* cfg, const sae_dataset* ds, sae_progress_fn progress, void* user,
                        sae_pretrain_result** out) {
  return guard([&] {
    need(cfg, "config");
    need(ds, "dataset");
    need(out, "out");
    const auto run_cfg = with_split(cfg->cfg, ds);
    auto res = std::make_unique<sae_pretrain_result>();
    res->res = pipeline::pretrain(run_cfg, ds->ds, progress_fn(progress, user));
    res->cfg = run_cfg;
    *out = res.release();
  });
}

size_t sae_pretrain_epochs(const sae_pretrain_result* res) { return res ? res->res.metrics.size() : 0; }

sae_status sae_pretrain_epoch(const sae_pretrain_result* res, size_t index, sae_epoch_metrics* out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    require(index < res->res.metrics.size(), ErrorKind::Range, "epoch index out of range");
    const auto& m = res->res.metrics[index];
    *out = {m.epoch, m.train_mse, m.val_mse, m.lr};
  });
}

sae_status sae_pretrain_scores(const sae_pretrain_result* res, size_t* best_epoch, sae_recon_score* seen,
                               sae_recon_score* unseen) {
  return guard([&] {
    need(res, "result");
    if (best_epoch) *best_epoch = res->res.best_epoch;
    if (seen) *seen = {res->res.seen.mse, res->res.seen.blank_mse};
    if (unseen) *unseen = {res->res.unseen.mse, res->res.unseen.blank_mse};
  });
}

sae_status sae_pretrain_checkpoint(const sae_pretrain_result* res, int which, sae_checkpoint** out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    require(which == SAE_CKPT_BEST || which == SAE_CKPT_LAST, ErrorKind::Usage, "expected SAE_CKPT_BEST or SAE_CKPT_LAST");
    *out = new sae_checkpoint{which == SAE_CKPT_BEST ? res->res.best : res->res.last};
  });
}

sae_status sae_pretrain_write(const sae_pretrain_result* res, const char* dir) {
  return guard([&] {
    need(res, "result");
    const auto d = make_dir(dir);
    const auto& r = res->res;
    r.best.save(d / "best.ckpt");
    r.last.save(d / "last.ckpt");
    write_text(d / "metrics.csv", pipeline::metrics_csv(r.metrics));
    write_text(d / "config.txt", res->cfg.serialize());
    nlohmann::ordered_json j;
    j["arch"] = pipeline::arch_name(res->cfg.arch);
    j["form"] = strokes::form_name(res->cfg.data_form());
    j["epochs"] = r.metrics.size();
    j["best_epoch"] = r.best_epoch;
    j["best_val_mse"] = std::stod(r.best.meta_at("val_mse"));
    j["first_train_mse"] = r.metrics.front().train_mse;
    j["final_train_mse"] = r.metrics.back().train_mse;
    j["seen"] = {{"mse", r.seen.mse}, {"blank_mse", r.seen.blank_mse}};
    j["unseen"] = {{"mse", r.unseen.mse}, {"blank_mse", r.unseen.blank_mse}};
    write_text(d / "summary.json", j.dump(2) + "\n");
  });
}

void sae_pretrain_result_free(sae_pretrain_result* res) { delete res; }

sae_status sae_zeroshot(const sae_config* cfg, const sae_dataset* ds, const sae_checkpoint* pretrained,
                        const sae_checkpoint* trained, sae_progress_fn progress, void* user,
                        sae_zeroshot_result** out) {
  return guard([&] {
    need(cfg, "config");
    need(ds, "dataset");
    need(pretrained, "pre-trained checkpoint");
    need(out, "out");
    auto run_cfg = with_split(cfg->cfg, ds);
    run_cfg.arch = pipeline::Arch::Rnt;
    std::optional<ad::Checkpoint> tr;
    if (trained != nullptr) tr = trained->ckpt;
    auto res = std::make_unique<sae_zeroshot_result>();
    res->run = pipeline::run_zero_shot(run_cfg, ds->ds, pretrained->ckpt, tr, progress_fn(progress, user));
    res->cfg = run_cfg;
    *out = res.release();
  });
}

sae_status sae_zeroshot_summary_get(const sae_zeroshot_result* res, sae_zeroshot_summary* out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    const auto& r = res->run;
    *out = {to_c(r.seen),
            to_c(r.unseen),
            r.random_baseline,
            r.audit.count(zeroshot::Disposition::Overwrite),
            r.audit.count(zeroshot::Disposition::Freeze),
            r.audit.count(zeroshot::Disposition::Tune)};
  });
}

sae_status sae_zeroshot_checkpoint(const sae_zeroshot_result* res, int which, sae_checkpoint** out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    require(which == SAE_CKPT_TRAINED || which == SAE_CKPT_FINETUNED, ErrorKind::Usage,
            "expected SAE_CKPT_TRAINED or SAE_CKPT_FINETUNED");
    *out = new sae_checkpoint{which == SAE_CKPT_TRAINED ? res->run.trained : res->run.finetuned};
  });
}

sae_status sae_zeroshot_write(const sae_zeroshot_result* res, const char* dir) {
  return guard([&] {
    need(res, "result");
    const auto d = make_dir(dir);
    const auto& r = res->run;
    r.trained.save(d / "trained.ckpt");
    r.finetuned.save(d / "finetuned.ckpt");
    write_text(d / "config.txt", res->cfg.serialize());
    write_text(d / "surgery.csv", r.audit.csv());
    write_text(d / "confusable.json", zeroshot::confusable_json(r.sets));
    std::string losses = "stage,epoch,loss\n";
    for (std::size_t i = 0; i < r.recognizer_losses.size(); ++i)
      losses += "recognizer," + std::to_string(i + 1) + "," + num(r.recognizer_losses[i]) + "\n";
    for (std::size_t i = 0; i < r.finetune_losses.size(); ++i)
      losses += "finetune," + std::to_string(i + 1) + "," + num(r.finetune_losses[i]) + "\n";
    write_text(d / "losses.csv", losses);
    write_text(d / "eval.csv", r.unseen.csv_header() + "\n" + r.unseen.csv_row() + "\n");
    write_text(d / "items.csv", items_csv(r.unseen));
    write_text(d / "seen_items.csv", items_csv(r.seen));
    nlohmann::ordered_json j;
    j["seen_accuracy"] = r.seen.accuracy;
    j["seen_stroke_match_rate"] = r.seen.stroke_match_rate;
    j["unseen_accuracy"] = r.unseen.accuracy;
    j["unseen_stroke_match_rate"] = r.unseen.stroke_match_rate;
    j["random_baseline"] = r.random_baseline;
    write_text(d / "summary.json", j.dump(2) + "\n");
  });
}

void sae_zeroshot_result_free(sae_zeroshot_result* res) { delete res; }

sae_status sae_evaluate(const sae_checkpoint* recognizer, const sae_dataset* ds, const char* out_dir,
                        sae_eval_report* out) {
  return guard([&] {
    need(recognizer, "checkpoint");
    need(ds, "dataset");
    pipeline::RunConfig cfg;
    const auto model = pipeline::load_recognizer(recognizer->ckpt, &cfg);
    cfg = with_split(cfg, ds);
    const auto rep = pipeline::evaluate(*model, cfg, ds->ds);
    if (out_dir != nullptr) {
      const auto d = make_dir(out_dir);
      write_text(d / "config.txt", cfg.serialize());
      write_text(d / "eval.csv", rep.csv_header() + "\n" + rep.csv_row() + "\n");
      write_text(d / "items.csv", items_csv(rep));
    }
    if (out) *out = to_c(rep);
  });
}

sae_status sae_reconstruct(const sae_checkpoint* model, const sae_dataset* ds, const char* out_dir,
                           sae_recon_score* seen, sae_recon_score* unseen) {
  return guard([&] {
    need(model, "checkpoint");
    need(ds, "dataset");
    pipeline::RunConfig cfg;
    const auto m = pipeline::load_model(model->ckpt, &cfg);
    cfg = with_split(cfg, ds);
    std::filesystem::path d;
    std::string csv = "index,label,split,frames,mse,blank_mse\n";
    if (out_dir != nullptr) d = make_dir(out_dir);
    auto score = [&](const std::vector<std::size_t>& indices, const char* split) {
      pipeline::ReconstructionScore s;
      for (auto i : indices) {
        const auto ex = pipeline::reconstruction_example(ds->ds.specs[i], cfg);
        const auto frames = pipeline::reconstruct(m, ex.input);
        const double mse = models::frames_mse(frames, ex.targets), blank = models::blank_mse(ex.targets);
        s.mse += mse;
        s.blank_mse += blank;
        if (out_dir != nullptr) {
          char name[32];
          std::snprintf(name, sizeof(name), "char%04zu.pgm", i);
          strokes::write_pgm(d / name, strokes::tile_rows({ex.targets, frames}));
          csv += std::to_string(i) + "," + ds->ds.specs[i].label + "," + split + "," + std::to_string(frames.size()) +
                 "," + num(mse) + "," + num(blank) + "\n";
        }
      }
      if (!indices.empty()) {
        s.mse /= static_cast<double>(indices.size());
        s.blank_mse /= static_cast<double>(indices.size());
      }
      return s;
    };
    const auto a = score(ds->ds.split.train, "seen");
    const auto b = score(ds->ds.split.test, "unseen");
    if (out_dir != nullptr) {
      write_text(d / "config.txt", cfg.serialize());
      write_text(d / "reconstruction.csv", csv);
    }
    if (seen) *seen = {a.mse, a.blank_mse};
    if (unseen) *unseen = {b.mse, b.blank_mse};
  });
}

sae_status sae_embed(const sae_checkpoint* vit, const sae_dataset* ds, size_t max_characters, size_t k_clusters,
                     uint64_t seed, const char* out_dir, sae_embed_summary* out) {
  return guard([&] {
    need(vit, "checkpoint");
    need(ds, "dataset");
    pipeline::RunConfig cfg;
    const auto m = pipeline::load_model(vit->ckpt, &cfg);
    require(m.arch == pipeline::Arch::Vit, ErrorKind::Usage, "embeddings need a vit checkpoint");
    auto specs = ds->ds.specs;
    if (max_characters > 0 && max_characters < specs.size()) specs.resize(max_characters);
    const auto rep = pipeline::embed_alphabet(*m.vit, specs, cfg);
    constexpr std::size_t kShuffles = 20;
    const auto control = embed::shuffled_mrr(rep.similarity, rep.truth, kShuffles, seed);
    sae_embed_summary s{rep.characters.size(), rep.radicals.size(), rep.mrr, 0.0, 0, kShuffles};
    for (double c : control) {
      s.shuffled_mrr_mean += c / static_cast<double>(kShuffles);
      s.shuffle_wins += rep.mrr > c;
    }
    if (out_dir != nullptr) {
      const auto d = make_dir(out_dir);
      write_text(d / "config.txt", cfg.serialize());
      embed::export_embeddings(rep.characters, d / "embeddings.csv");
      embed::export_embeddings(rep.radicals, d / "radicals.csv");
      std::vector<std::string> rows, cols;
      for (const auto& c : rep.characters) rows.push_back(c.label);
      for (const auto& r : rep.radicals) cols.push_back(r.label);
      embed::export_matrix(rep.similarity, rows, cols, d / "similarity.csv");
      if (k_clusters > 0) {
        std::vector<std::vector<double>> pts;
        for (const auto& c : rep.characters) pts.push_back(c.vector);
        const auto km = embed::kmeans_cosine(pts, std::min(k_clusters, pts.size()), seed);
        std::string csv = "label,cluster\n";
        for (std::size_t i = 0; i < rows.size(); ++i) csv += rows[i] + "," + std::to_string(km.assignment[i]) + "\n";
        write_text(d / "clusters.csv", csv);
      }
      nlohmann::ordered_json j;
      j["characters"] = s.n_characters;
      j["radicals"] = s.n_radicals;
      j["mrr"] = s.mrr;
      j["shuffled_mrr"] = control;
      j["shuffle_wins"] = s.shuffle_wins;
      write_text(d / "summary.json", j.dump(2) + "\n");
    }
    if (out) *out = s;
  });
}

}  // extern "C"
