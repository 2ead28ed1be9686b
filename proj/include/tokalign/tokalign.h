// Copyright 2026 The tokalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * tokalign C API.
 *
 * Objects are opaque handles released with their *_free function (NULL is
 * accepted). Every fallible call returns a ta_status; on failure the message
 * is available from ta_last_error() on the same thread until the next call.
 * Strings returned through char** are heap allocated and must be released
 * with ta_string_free().
 */
#ifndef TOKALIGN_H
#define TOKALIGN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TA_API __declspec(dllexport)
#else
#define TA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ta_status {
    TA_OK = 0,
    TA_ERR_USAGE = 1,
    TA_ERR_DATA = 2,
    TA_ERR_NUMERICAL = 3,
    TA_ERR_INTERNAL = 4
} ta_status;

typedef struct ta_vocab ta_vocab;
typedef struct ta_tokens ta_tokens;
typedef struct ta_cooccur ta_cooccur;
typedef struct ta_embeddings ta_embeddings;
typedef struct ta_lexicon ta_lexicon;

TA_API const char* ta_version(void);
TA_API const char* ta_last_error(void);
TA_API void ta_string_free(char* s);

/* Vocabularies */
TA_API ta_status ta_vocab_load(const char* path, ta_vocab** out);
TA_API ta_status ta_vocab_save(const ta_vocab* vocab, const char* path);
TA_API void ta_vocab_free(ta_vocab* vocab);
TA_API size_t ta_vocab_size(const ta_vocab* vocab);
/* Looks up raw token bytes. TA_ERR_DATA when absent. */
TA_API ta_status ta_vocab_find(const ta_vocab* vocab, const char* bytes, size_t len, uint32_t* id);
TA_API ta_status ta_vocab_stats_json(const ta_vocab* vocab, char** json);
TA_API ta_status ta_vocab_overlap_json(const ta_vocab* src, const ta_vocab* tgt, char** json);

/* Token streams (TITS) */
TA_API ta_status ta_tokens_read(const char* path, ta_tokens** out);
TA_API ta_status ta_tokens_write(const ta_tokens* tokens, const char* path);
TA_API void ta_tokens_free(ta_tokens* tokens);
TA_API uint64_t ta_tokens_total(const ta_tokens* tokens);
TA_API size_t ta_tokens_doc_count(const ta_tokens* tokens);
/* Greedy longest-match tokenization of a text file, one document per line. */
TA_API ta_status ta_tokenize_file(const ta_vocab* vocab, const char* text_path, unsigned threads, ta_tokens** out);
TA_API ta_status ta_compression_rate_json(const ta_vocab* vocab, const char* text_path, int per_document,
                                          unsigned threads, char** json);

/* Co-occurrence (TCOC) */
TA_API ta_status ta_cooccur_build(const ta_tokens* tokens, uint32_t window, int distance_weighting, unsigned shards,
                                  unsigned threads, ta_cooccur** out);
TA_API ta_status ta_cooccur_read(const char* path, ta_cooccur** out);
TA_API ta_status ta_cooccur_write(const ta_cooccur* m, const char* path);
TA_API void ta_cooccur_free(ta_cooccur* m);
TA_API uint64_t ta_cooccur_entry_count(const ta_cooccur* m);
TA_API double ta_cooccur_total_weight(const ta_cooccur* m);

/* Token vectors */
typedef struct ta_glove_config {
    uint32_t dim;
    uint32_t epochs;
    double x_max;
    double alpha;
    double learning_rate;
    double grad_clip;
    uint64_t seed;
    unsigned threads; /* > 1: lock-free, not bit-reproducible */
} ta_glove_config;

TA_API void ta_glove_config_default(ta_glove_config* cfg);
/* report (nullable) receives {"epoch_loss": [...], "coverage": ...}. */
TA_API ta_status ta_glove_train(const ta_cooccur* m, const ta_glove_config* cfg, ta_embeddings** out, char** report);
TA_API ta_status ta_hidden_pool(const char* states_path, const ta_vocab* vocab, const char* mode, ta_embeddings** out);
TA_API ta_status ta_embeddings_read(const char* path, ta_embeddings** out);
TA_API ta_status ta_embeddings_write(const ta_embeddings* e, const char* path);
TA_API ta_status ta_embeddings_write_text(const ta_embeddings* e, const char* path);
TA_API void ta_embeddings_free(ta_embeddings* e);
TA_API size_t ta_embeddings_rows(const ta_embeddings* e);
TA_API size_t ta_embeddings_dim(const ta_embeddings* e);
/* Sets per-token frequencies (e.g. unigram counts) used to rank tokens for alignment. */
TA_API ta_status ta_embeddings_set_frequency(ta_embeddings* e, const ta_tokens* tokens);

/* Alignment */
typedef struct ta_align_config {
    const char* similarity; /* "csls" | "cosine" */
    const char* induction;  /* "union" (default) | "mutual" | "forward" */
    int csls_k;
    size_t top_n;
    int use_shared_seed;    /* seed dictionary = shared tokens */
    int unsupervised_init;  /* similarity-distribution init when the seed is empty */
    int self_learning;
    uint32_t patience;
    uint32_t max_iter;
    double tol;
    double keep_prob_initial;
    size_t induction_vocab;
    size_t unsupervised_vocab;
    uint64_t seed;
    unsigned threads;
} ta_align_config;

TA_API void ta_align_config_default(ta_align_config* cfg);
/* Normalizes both spaces, learns the mapping and extracts both lexicons.
 * t2s / s2t / report are each nullable. */
TA_API ta_status ta_align(const ta_embeddings* src, const ta_embeddings* tgt, const ta_vocab* src_vocab,
                          const ta_vocab* tgt_vocab, const ta_align_config* cfg, ta_lexicon** t2s, ta_lexicon** s2t,
                          char** report);
TA_API ta_status ta_lexicon_read(const char* path, ta_lexicon** out); /* .json or TSV by extension */
TA_API ta_status ta_lexicon_write(const ta_lexicon* lex, const char* path);
TA_API void ta_lexicon_free(ta_lexicon* lex);
TA_API size_t ta_lexicon_query_count(const ta_lexicon* lex);
TA_API ta_status ta_lexicon_top1(const ta_lexicon* lex, uint32_t query, uint32_t* candidate);

/* Evaluation: s2t nullable; semantic files (nullable) hold interleaved A/B document embeddings. */
TA_API ta_status ta_evaluate_json(const ta_tokens* src, const ta_tokens* tgt, const ta_lexicon* t2s,
                                  const ta_lexicon* s2t, const char* semantic_t2s, const char* semantic_s2t,
                                  unsigned threads, char** json);
TA_API ta_status ta_bleu1(const ta_tokens* candidate, const ta_tokens* reference, double* out);

/* Parameter remap between TAL bundles. */
TA_API ta_status ta_remap_file(const char* src_bundle, const ta_lexicon* t2s, const char* strategy, uint64_t seed,
                               size_t tgt_vocab_size, unsigned threads, const char* out_path);

/* Plans. Override pointers are nullable. */
TA_API ta_status ta_plan_two_stage_json(uint64_t steps, double embed_frac, double learning_rate, uint64_t batch_tokens,
                                        const char* lr_schedule, char** json);
TA_API ta_status ta_plan_distill_json(const char* teacher, const char* student, const double* kd_weight,
                                      const double* task_sample_fraction, const double* temperature, char** json);

/* Pipeline. seed / threads nullable (use the config's values). */
typedef void (*ta_log_fn)(const char* message, void* user);
TA_API ta_status ta_run_pipeline(const char* config_path, const uint64_t* seed, const unsigned* threads, int use_cache,
                                 ta_log_fn log, void* log_user, char** manifest);

#ifdef __cplusplus
}
#endif

#endif /* TOKALIGN_H */
