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

#ifndef SAE_SAE_H
#define SAE_SAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SAE_API __declspec(dllexport)
#else
#define SAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes of the command-line tool. */
typedef enum sae_status {
  SAE_OK = 0,
  SAE_ERR_INTERNAL = 1,
  SAE_ERR_CONFIG = 2,
  SAE_ERR_IO = 3,
  SAE_ERR_NUMERIC = 4,
  SAE_ERR_SURGERY = 5,
  SAE_ERR_DIMENSION = 6,
  SAE_ERR_PARSE = 7,
  SAE_ERR_RANGE = 8,
  SAE_ERR_USAGE = 9,
  SAE_ERR_RENDER = 10,
  SAE_ERR_DATA = 11
} sae_status;

typedef struct sae_config sae_config;
typedef struct sae_dataset sae_dataset;
typedef struct sae_checkpoint sae_checkpoint;
typedef struct sae_pretrain_result sae_pretrain_result;
typedef struct sae_zeroshot_result sae_zeroshot_result;

typedef void (*sae_progress_fn)(const char* message, void* user);

SAE_API const char* sae_version(void);
/* Message of the last failed call on this thread; empty after success. */
SAE_API const char* sae_last_error(void);
SAE_API const char* sae_status_name(sae_status status);

/* ---- run configuration ---- */

SAE_API sae_status sae_config_new(sae_config** out);
SAE_API void sae_config_free(sae_config* cfg);
SAE_API sae_status sae_config_set(sae_config* cfg, const char* key, const char* value);
/* The returned string stays valid until the next get or serialize on cfg. */
SAE_API sae_status sae_config_get(sae_config* cfg, const char* key, const char** value);
SAE_API sae_status sae_config_load(sae_config* cfg, const char* path);
SAE_API sae_status sae_config_serialize(sae_config* cfg, const char** text);
SAE_API sae_status sae_config_validate(const sae_config* cfg);

/* ---- datasets ---- */

SAE_API sae_status sae_dataset_build(const sae_config* cfg, sae_dataset** out);
SAE_API sae_status sae_dataset_load(const sae_config* cfg, const char* dir, sae_dataset** out);
/* specs.json, split.csv, config.txt and samples/char####.pgm under dir. */
SAE_API sae_status sae_dataset_write(const sae_dataset* ds, const sae_config* cfg, const char* dir);
SAE_API sae_status sae_dataset_counts(const sae_dataset* ds, size_t* n_chars, size_t* n_seen, size_t* n_test);
SAE_API void sae_dataset_free(sae_dataset* ds);

/* ---- checkpoints ---- */

SAE_API sae_status sae_checkpoint_load(const char* path, sae_checkpoint** out);
SAE_API sae_status sae_checkpoint_save(const sae_checkpoint* ckpt, const char* path);
/* Valid while ckpt lives. */
SAE_API sae_status sae_checkpoint_meta(const sae_checkpoint* ckpt, const char* key, const char** value);
/* Run configuration stored in the checkpoint, as a new handle. */
SAE_API sae_status sae_checkpoint_config(const sae_checkpoint* ckpt, sae_config** out);
SAE_API void sae_checkpoint_free(sae_checkpoint* ckpt);

/* ---- pre-training ---- */

typedef struct sae_epoch_metrics {
  size_t epoch;
  double train_mse;
  double val_mse;
  double lr;
} sae_epoch_metrics;

typedef struct sae_recon_score {
  double mse;
  double blank_mse;
} sae_recon_score;

enum { SAE_CKPT_BEST = 0, SAE_CKPT_LAST = 1, SAE_CKPT_TRAINED = 2, SAE_CKPT_FINETUNED = 3 };

SAE_API sae_status sae_pretrain(const sae_config* cfg, const sae_dataset* ds, sae_progress_fn progress, void* user,
                                sae_pretrain_result** out);
SAE_API size_t sae_pretrain_epochs(const sae_pretrain_result* res);
SAE_API sae_status sae_pretrain_epoch(const sae_pretrain_result* res, size_t index, sae_epoch_metrics* out);
SAE_API sae_status sae_pretrain_scores(const sae_pretrain_result* res, size_t* best_epoch, sae_recon_score* seen,
                                       sae_recon_score* unseen);
/* which: SAE_CKPT_BEST or SAE_CKPT_LAST; the copy is owned by the caller. */
SAE_API sae_status sae_pretrain_checkpoint(const sae_pretrain_result* res, int which, sae_checkpoint** out);
/* best.ckpt, last.ckpt, metrics.csv and summary.json under dir. */
SAE_API sae_status sae_pretrain_write(const sae_pretrain_result* res, const char* dir);
SAE_API void sae_pretrain_result_free(sae_pretrain_result* res);

/* ---- zero-shot recognition ---- */

typedef struct sae_eval_report {
  size_t n_seen;
  size_t n_test;
  double accuracy;
  double stroke_match_rate;
  size_t unmatched;
} sae_eval_report;

typedef struct sae_zeroshot_summary {
  sae_eval_report seen;
  sae_eval_report unseen;
  double random_baseline;
  size_t overwrite;
  size_t freeze;
  size_t tune;
} sae_zeroshot_summary;

/* Trains a recogniser (unless `trained` is given), applies surgery with the
 * pre-trained rnt checkpoint, fine-tunes and evaluates. */
SAE_API sae_status sae_zeroshot(const sae_config* cfg, const sae_dataset* ds, const sae_checkpoint* pretrained,
                                const sae_checkpoint* trained, sae_progress_fn progress, void* user,
                                sae_zeroshot_result** out);
SAE_API sae_status sae_zeroshot_summary_get(const sae_zeroshot_result* res, sae_zeroshot_summary* out);
/* which: SAE_CKPT_TRAINED or SAE_CKPT_FINETUNED. */
SAE_API sae_status sae_zeroshot_checkpoint(const sae_zeroshot_result* res, int which, sae_checkpoint** out);
/* trained.ckpt, finetuned.ckpt, surgery.csv, confusable.json, losses.csv,
 * eval.csv and items.csv under dir. */
SAE_API sae_status sae_zeroshot_write(const sae_zeroshot_result* res, const char* dir);
SAE_API void sae_zeroshot_result_free(sae_zeroshot_result* res);

/* Zero-shot evaluation of a fine-tuned recogniser on the unseen classes.
 * Writes eval.csv and items.csv when out_dir is not NULL. */
SAE_API sae_status sae_evaluate(const sae_checkpoint* recognizer, const sae_dataset* ds, const char* out_dir,
                                sae_eval_report* out);

/* Reconstructs every character of the split with a pre-trained model. When
 * out_dir is not NULL, writes one strip per character (targets above, the
 * reconstruction below) and reconstruction.csv. */
SAE_API sae_status sae_reconstruct(const sae_checkpoint* model, const sae_dataset* ds, const char* out_dir,
                                   sae_recon_score* seen, sae_recon_score* unseen);

typedef struct sae_embed_summary {
  size_t n_characters;
  size_t n_radicals;
  double mrr;
  double shuffled_mrr_mean;
  size_t shuffle_wins; /* shuffles whose MRR falls strictly below the true MRR */
  size_t shuffles;
} sae_embed_summary;

/* Embeds up to max_characters characters (0 for all) and the radicals they
 * use with a pre-trained vit checkpoint. Writes embeddings.csv, radicals.csv,
 * similarity.csv and clusters.csv (k_clusters groups, 0 to skip) under
 * out_dir when it is not NULL. */
SAE_API sae_status sae_embed(const sae_checkpoint* vit, const sae_dataset* ds, size_t max_characters,
                             size_t k_clusters, uint64_t seed, const char* out_dir, sae_embed_summary* out);

#ifdef __cplusplus
}
#endif

#endif
