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
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sae/sae.h"

namespace {

// Thrown after a failed C call; carries the status as exit code.
struct Failure {
  sae_status status;
};

void check(sae_status s) {
  if (s != SAE_OK) throw Failure{s};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  throw Failure{SAE_ERR_USAGE};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<sae_config, sae_config_free>;
using Dataset = Handle<sae_dataset, sae_dataset_free>;
using Checkpoint = Handle<sae_checkpoint, sae_checkpoint_free>;
using Pretrain = Handle<sae_pretrain_result, sae_pretrain_result_free>;
using ZeroShot = Handle<sae_zeroshot_result, sae_zeroshot_result_free>;

struct Options {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> arch, form, scale;
  std::optional<std::size_t> n_seen, epochs;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string out;
  bool quiet = false;
  bool force = false;
};

void progress(const char* msg, void* user) {
  if (!*static_cast<bool*>(user)) std::fprintf(stderr, "%s\n", msg);
}

void set(sae_config* cfg, const std::string& key, const std::string& value) { check(sae_config_set(cfg, key.c_str(), value.c_str())); }

// Config file first, then --set pairs, then the named flags.
void apply(sae_config* cfg, const Options& o) {
  if (!o.config_file.empty()) check(sae_config_load(cfg, o.config_file.c_str()));
  if (o.scale) set(cfg, "scale", *o.scale);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) usage_error("--set expects key=value, got '" + kv + "'");
    set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.arch) set(cfg, "arch", *o.arch);
  if (o.form) set(cfg, "form", *o.form);
  if (o.n_seen) set(cfg, "n_seen", std::to_string(*o.n_seen));
  if (o.epochs) set(cfg, "epochs", std::to_string(*o.epochs));
  if (o.seed) set(cfg, "seed", std::to_string(*o.seed));
  check(sae_config_validate(cfg));
}

std::string data_dir(const Options& o) {
  if (!o.data.empty()) return o.data;
  if (const char* env = std::getenv("SAE_DATA_DIR"); env != nullptr && *env != '\0') return env;
  usage_error("no dataset: pass --data or set SAE_DATA_DIR");
}

// Run outputs go to a fresh directory.
std::string out_dir(const Options& o) {
  if (o.out.empty()) usage_error("--out is required");
  std::error_code ec;
  if (std::filesystem::exists(o.out, ec) && !std::filesystem::is_empty(o.out, ec) && !o.force) {
    std::fprintf(stderr, "error: output directory %s is not empty (use --force to reuse it)\n", o.out.c_str());
    throw Failure{SAE_ERR_IO};
  }
  return o.out;
}

void load_checkpoint(const std::string& path, Checkpoint& c) { check(sae_checkpoint_load(path.c_str(), c.out())); }

// Run configuration of a checkpoint with the command-line overrides applied.
void checkpoint_config(const Checkpoint& ckpt, const Options& o, Config& cfg) {
  check(sae_checkpoint_config(ckpt.get(), cfg.out()));
  apply(cfg.get(), o);
}

void load_data(const Config& cfg, const Options& o, Dataset& ds) {
  check(sae_dataset_load(cfg.get(), data_dir(o).c_str(), ds.out()));
}

void print_eval(const char* name, const sae_eval_report& r) {
  std::printf("%s: accuracy %.4f  stroke_match_rate %.4f  n_test %zu  n_seen %zu\n", name, r.accuracy,
              r.stroke_match_rate, r.n_test, r.n_seen);
}

int gen_data(const Options& o) {
  Config cfg;
  check(sae_config_new(cfg.out()));
  apply(cfg.get(), o);
  const std::string dir = o.out.empty() ? data_dir(o) : out_dir(o);
  Dataset ds;
  check(sae_dataset_build(cfg.get(), ds.out()));
  check(sae_dataset_write(ds.get(), cfg.get(), dir.c_str()));
  std::size_t n = 0, seen = 0, test = 0;
  check(sae_dataset_counts(ds.get(), &n, &seen, &test));
  std::printf("wrote %zu characters (%zu seen, %zu unseen) to %s\n", n, seen, test, dir.c_str());
  return 0;
}

int pretrain(Options o) {
  Config cfg;
  check(sae_config_new(cfg.out()));
  apply(cfg.get(), o);
  const std::string dir = out_dir(o);
  Dataset ds;
  load_data(cfg, o, ds);
  Pretrain res;
  check(sae_pretrain(cfg.get(), ds.get(), progress, &o.quiet, res.out()));
  check(sae_pretrain_write(res.get(), dir.c_str()));
  std::size_t best = 0;
  sae_recon_score seen{}, unseen{};
  check(sae_pretrain_scores(res.get(), &best, &seen, &unseen));
  std::printf("best epoch %zu\nseen reconstruction mse %.6g (blank %.6g)\nunseen reconstruction mse %.6g (blank %.6g)\n",
              best, seen.mse, seen.blank_mse, unseen.mse, unseen.blank_mse);
  return 0;
}

int finetune(Options o, const std::string& pretrained_path, const std::string& trained_path) {
  Checkpoint pretrained, trained;
  load_checkpoint(pretrained_path, pretrained);
  if (!trained_path.empty()) load_checkpoint(trained_path, trained);
  Config cfg;
  checkpoint_config(trained_path.empty() ? pretrained : trained, o, cfg);
  const std::string dir = out_dir(o);
  Dataset ds;
  load_data(cfg, o, ds);
  ZeroShot res;
  check(sae_zeroshot(cfg.get(), ds.get(), pretrained.get(), trained.get(), progress, &o.quiet, res.out()));
  check(sae_zeroshot_write(res.get(), dir.c_str()));
  sae_zeroshot_summary s{};
  check(sae_zeroshot_summary_get(res.get(), &s));
  std::printf("surgery: %zu overwrite, %zu freeze, %zu tune\n", s.overwrite, s.freeze, s.tune);
  print_eval("seen", s.seen);
  print_eval("unseen", s.unseen);
  std::printf("random baseline %.6g\n", s.random_baseline);
  return 0;
}

int eval(const Options& o, const std::string& model_path) {
  Checkpoint model;
  load_checkpoint(model_path, model);
  Config cfg;
  checkpoint_config(model, o, cfg);
  Dataset ds;
  load_data(cfg, o, ds);
  const std::string dir = o.out.empty() ? std::string() : out_dir(o);
  sae_eval_report r{};
  check(sae_evaluate(model.get(), ds.get(), dir.empty() ? nullptr : dir.c_str(), &r));
  std::printf("n_seen,accuracy,stroke_match_rate,n_test\n%zu,%.17g,%.17g,%zu\n", r.n_seen, r.accuracy,
              r.stroke_match_rate, r.n_test);
  return 0;
}

int reconstruct(const Options& o, const std::string& model_path) {
  Checkpoint model;
  load_checkpoint(model_path, model);
  Config cfg;
  checkpoint_config(model, o, cfg);
  Dataset ds;
  load_data(cfg, o, ds);
  const std::string dir = out_dir(o);
  sae_recon_score seen{}, unseen{};
  check(sae_reconstruct(model.get(), ds.get(), dir.c_str(), &seen, &unseen));
  std::printf("seen mse %.6g (blank %.6g)\nunseen mse %.6g (blank %.6g)\n", seen.mse, seen.blank_mse, unseen.mse,
              unseen.blank_mse);
  return 0;
}

int embed(const Options& o, const std::string& model_path, std::size_t count, std::size_t clusters) {
  Checkpoint model;
  load_checkpoint(model_path, model);
  Config cfg;
  checkpoint_config(model, o, cfg);
  Dataset ds;
  load_data(cfg, o, ds);
  const std::string dir = out_dir(o);
  const char* seed_text = nullptr;
  check(sae_config_get(cfg.get(), "seed", &seed_text));
  sae_embed_summary s{};
  check(sae_embed(model.get(), ds.get(), count, clusters, std::strtoull(seed_text, nullptr, 10), dir.c_str(), &s));
  std::printf("%zu characters, %zu radicals\nMRR %.6g (shuffled mean %.6g, better in %zu/%zu shuffles)\n",
              s.n_characters, s.n_radicals, s.mrr, s.shuffled_mrr_mean, s.shuffle_wins, s.shuffles);
  return 0;
}

void common_flags(CLI::App* cmd, Options& o, bool training) {
  cmd->add_option("--config", o.config_file, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "override one configuration key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--n-seen", o.n_seen, "number of seen (training) classes");
  cmd->add_option("--data", o.data, "dataset directory (default: $SAE_DATA_DIR)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--force", o.force, "allow a non-empty output directory");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
  if (training) {
    cmd->add_option("--scale", o.scale, "size preset: full or desk");
    cmd->add_option("--arch", o.arch, "vit or rnt");
    cmd->add_option("--form", o.form, "data form A (cumulative) or B (incremental)");
    cmd->add_option("--epochs", o.epochs, "training epochs");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stroke-sequence autoencoders for Chinese characters"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sae_version()));
  Options o;
  std::string pretrained, trained, model;
  std::size_t count = 0, clusters = 8;

  auto* gen = app.add_subcommand("gen-data", "generate or ingest a character set and write a dataset directory");
  common_flags(gen, o, true);
  gen->add_option("--source", [&](const std::vector<std::string>& v) {
    o.sets.push_back("source=" + v.front());
    return true;
  }, "stroke JSON file (default: synthetic alphabet)");

  auto* pre = app.add_subcommand("pretrain", "pre-train a stroke autoencoder");
  common_flags(pre, o, true);

  auto* fine = app.add_subcommand("finetune", "parameter surgery, fine-tuning and zero-shot evaluation");
  common_flags(fine, o, true);
  fine->add_option("--pretrained", pretrained, "pre-trained rnt checkpoint")->required();
  fine->add_option("--trained", trained, "recogniser checkpoint (default: train one first)");

  auto* ev = app.add_subcommand("eval", "zero-shot evaluation of a fine-tuned recogniser");
  common_flags(ev, o, false);
  ev->add_option("--model", model, "fine-tuned recogniser checkpoint")->required();

  auto* rec = app.add_subcommand("reconstruct", "write reconstruction strips for every character");
  common_flags(rec, o, false);
  rec->add_option("--model", model, "pre-trained autoencoder checkpoint")->required();

  auto* emb = app.add_subcommand("embed", "export character and radical embeddings");
  common_flags(emb, o, false);
  emb->add_option("--model", model, "pre-trained vit checkpoint")->required();
  emb->add_option("--count", count, "number of characters to embed (default: all)");
  emb->add_option("--clusters", clusters, "k for cosine k-means (0 to skip)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : SAE_ERR_USAGE;
  }

  try {
    if (gen->parsed()) return gen_data(o);
    if (pre->parsed()) return pretrain(o);
    if (fine->parsed()) return finetune(o, pretrained, trained);
    if (ev->parsed()) return eval(o, model);
    if (rec->parsed()) return reconstruct(o, model);
    if (emb->parsed()) return embed(o, model, count, clusters);
  } catch (const Failure& f) {
    const char* msg = sae_last_error();
    if (*msg != '\0') std::fprintf(stderr, "error (%s): %s\n", sae_status_name(f.status), msg);
    return static_cast<int>(f.status);
  }
  return SAE_ERR_USAGE;
}
