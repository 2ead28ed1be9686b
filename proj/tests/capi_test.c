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

/* Exercises the shared library through its C header only. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "tokalign/tokalign.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
    do {                                                                \
        if (!(cond)) {                                                  \
            fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                 \
        }                                                               \
    } while (0)

static void write_text(const char* path, const char* text) {
    FILE* f = fopen(path, "wb");
    fputs(text, f);
    fclose(f);
}

int main(void) {
    const char* dir = TOKALIGN_CAPI_SCRATCH;
    char vocab_path[512], corpus_path[512], tits_path[512], lex_path[512], bundle_path[512], out_path[512];
    snprintf(vocab_path, sizeof vocab_path, "%s/sample_vocab.json", TOKALIGN_TEST_DATA_DIR);
    snprintf(corpus_path, sizeof corpus_path, "%s/sample_corpus.txt", TOKALIGN_TEST_DATA_DIR);
    snprintf(tits_path, sizeof tits_path, "%s/capi.tits", dir);
    snprintf(lex_path, sizeof lex_path, "%s/capi_lex.tsv", dir);
    snprintf(bundle_path, sizeof bundle_path, "%s/capi_missing.tal", dir);
    snprintf(out_path, sizeof out_path, "%s/capi_out.tal", dir);

    EXPECT(strlen(ta_version()) > 0);

    ta_vocab* v = NULL;
    EXPECT(ta_vocab_load("/nonexistent/vocab.json", &v) == TA_ERR_DATA);
    EXPECT(v == NULL);
    EXPECT(strlen(ta_last_error()) > 0);
    EXPECT(ta_vocab_load(NULL, &v) == TA_ERR_USAGE);

    EXPECT(ta_vocab_load(vocab_path, &v) == TA_OK);
    EXPECT(ta_vocab_size(v) == 1956);
    uint32_t id = 0;
    EXPECT(ta_vocab_find(v, "A", 1, &id) == TA_OK && id == 65);

    char* json = NULL;
    EXPECT(ta_vocab_overlap_json(v, v, &json) == TA_OK);
    EXPECT(json && strstr(json, "\"shared_tokens\": 1956") != NULL);
    ta_string_free(json);

    json = NULL;
    EXPECT(ta_compression_rate_json(v, corpus_path, 0, 1, &json) == TA_OK);
    EXPECT(json && strstr(json, "4.4583858334752255") != NULL);
    ta_string_free(json);

    ta_tokens* toks = NULL;
    EXPECT(ta_tokenize_file(v, corpus_path, 1, &toks) == TA_OK);
    EXPECT(ta_tokens_doc_count(toks) == 1426);
    EXPECT(ta_tokens_write(toks, tits_path) == TA_OK);
    ta_tokens* back = NULL;
    EXPECT(ta_tokens_read(tits_path, &back) == TA_OK);
    EXPECT(ta_tokens_total(back) == ta_tokens_total(toks));
    double bleu = 0;
    EXPECT(ta_bleu1(back, toks, &bleu) == TA_OK && bleu == 1.0);

    ta_cooccur* m = NULL;
    EXPECT(ta_cooccur_build(toks, 10, 1, 4, 1, &m) == TA_OK);
    EXPECT(ta_cooccur_entry_count(m) > 0);
    EXPECT(ta_cooccur_build(toks, 0, 1, 1, 1, &m) == TA_ERR_USAGE);

    ta_glove_config gc;
    ta_glove_config_default(&gc);
    EXPECT(gc.dim == 300 && gc.epochs == 15 && gc.seed == 7);
    gc.dim = 8;
    gc.epochs = 2;
    ta_embeddings* e = NULL;
    EXPECT(ta_glove_train(m, &gc, &e, NULL) == TA_OK);
    EXPECT(ta_embeddings_rows(e) == 1956 && ta_embeddings_dim(e) == 8);
    EXPECT(ta_embeddings_set_frequency(e, toks) == TA_OK);

    ta_align_config ac;
    ta_align_config_default(&ac);
    EXPECT(ac.csls_k == 10 && ac.top_n == 3 && strcmp(ac.induction, "union") == 0);
    ac.patience = 2;
    ta_lexicon* t2s = NULL;
    char* report = NULL;
    EXPECT(ta_align(e, e, v, v, &ac, &t2s, NULL, &report) == TA_OK);
    EXPECT(ta_lexicon_query_count(t2s) == 1956);
    uint32_t top = 0;
    EXPECT(ta_lexicon_top1(t2s, 300, &top) == TA_OK && top == 300);
    EXPECT(ta_lexicon_top1(t2s, 5000, &top) == TA_ERR_DATA);
    ta_string_free(report);
    EXPECT(ta_lexicon_write(t2s, lex_path) == TA_OK);

    json = NULL;
    EXPECT(ta_evaluate_json(toks, toks, t2s, NULL, NULL, NULL, 1, &json) == TA_OK);
    EXPECT(json && strstr(json, "\"bleu1\": 1.0") != NULL);
    ta_string_free(json);

    EXPECT(ta_remap_file(bundle_path, t2s, "tokalign", 7, 1956, 1, out_path) == TA_ERR_DATA);
    EXPECT(ta_remap_file(bundle_path, t2s, "bogus", 7, 1956, 1, out_path) == TA_ERR_USAGE);

    json = NULL;
    EXPECT(ta_plan_two_stage_json(1000, 0.5, 5e-5, 2097152, "constant", &json) == TA_OK);
    EXPECT(json && strstr(json, "\"end\": 500") != NULL);
    ta_string_free(json);
    EXPECT(ta_plan_two_stage_json(1000, 2.0, 5e-5, 2097152, "constant", &json) == TA_ERR_USAGE);
    double frac = 0.3;
    json = NULL;
    EXPECT(ta_plan_distill_json("t", "s", NULL, &frac, NULL, &json) == TA_OK);
    EXPECT(json && strstr(json, "0.3") != NULL);
    ta_string_free(json);

    write_text(out_path, "{\"output_dir\": \"x\"}");
    EXPECT(ta_run_pipeline(out_path, NULL, NULL, 1, NULL, NULL, &json) == TA_ERR_USAGE);

    ta_lexicon_free(t2s);
    ta_embeddings_free(e);
    ta_cooccur_free(m);
    ta_tokens_free(back);
    ta_tokens_free(toks);
    ta_vocab_free(v);
    ta_vocab_free(NULL);

    if (failures) fprintf(stderr, "%d C API check(s) failed\n", failures);
    else printf("C API checks passed\n");
    return failures ? 1 : 0;
}
