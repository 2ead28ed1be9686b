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

#include "tokalign/tokalign.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "tokalign/align.hpp"
#include "tokalign/binary_io.hpp"
#include "tokalign/compression.hpp"
#include "tokalign/cooccur.hpp"
#include "tokalign/corpus.hpp"
#include "tokalign/error.hpp"
#include "tokalign/glove.hpp"
#include "tokalign/hidden_rep.hpp"
#include "tokalign/metrics.hpp"
#include "tokalign/parallel.hpp"
#include "tokalign/pipeline.hpp"
#include "tokalign/plan.hpp"
#include "tokalign/remap.hpp"
#include "tokalign/tensor_file.hpp"

struct ta_vocab {
    tokalign::Vocab v;
};
struct ta_tokens {
    tokalign::TokenStream s;
};
struct ta_cooccur {
    tokalign::CooccurMatrix m;
};
struct ta_embeddings {
    tokalign::Embeddings e;
};
struct ta_lexicon {
    tokalign::AlignmentLexicon l;
};

namespace {

using namespace tokalign;
using ojson = nlohmann::ordered_json;

thread_local std::string g_last_error;

template <class Fn>
ta_status guard(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return TA_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<ta_status>(static_cast<int>(e.kind()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return TA_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TA_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return TA_ERR_INTERNAL;
    }
}

template <class T>
const T& need(const T* p, const char* what) {
    if (!p) fail_usage(what, " is NULL");
    return *p;
}

void need_out(const void* p) {
    if (!p) fail_usage("output pointer is NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

std::string str(const char* s, const char* what) {
    if (!s) fail_usage(what, " is NULL");
    return s;
}

bool is_json_path(const std::string& p) { return p.size() >= 5 && p.compare(p.size() - 5, 5, ".json") == 0; }

}  // namespace

extern "C" {

const char* ta_version(void) { return "1.0.0"; }
const char* ta_last_error(void) { return g_last_error.c_str(); }
void ta_string_free(char* s) { std::free(s); }

ta_status ta_vocab_load(const char* path, ta_vocab** out) {
    return guard([&] {
        need_out(out);
        *out = new ta_vocab{load_vocab(str(path, "path"))};
    });
}

ta_status ta_vocab_save(const ta_vocab* vocab, const char* path) {
    return guard([&] { save_vocab(need(vocab, "vocab").v, str(path, "path")); });
}

void ta_vocab_free(ta_vocab* vocab) { delete vocab; }
size_t ta_vocab_size(const ta_vocab* vocab) { return vocab ? vocab->v.size() : 0; }

ta_status ta_vocab_find(const ta_vocab* vocab, const char* bytes, size_t len, uint32_t* id) {
    return guard([&] {
        need_out(id);
        if (!bytes && len > 0) fail_usage("bytes is NULL");
        const auto found = need(vocab, "vocab").v.find(std::string_view(bytes ? bytes : "", len));
        if (!found) fail_data("token not in vocabulary");
        *id = *found;
    });
}

ta_status ta_vocab_stats_json(const ta_vocab* vocab, char** json) {
    return guard([&] {
        need_out(json);
        const auto& v = need(vocab, "vocab").v;
        std::size_t single = 0, max_len = 0, total = 0;
        for (const auto& t : v.tokens()) {
            single += t.size() == 1;
            max_len = std::max(max_len, t.size());
            total += t.size();
        }
        ojson j;
        j["size"] = v.size();
        j["single_byte_tokens"] = single;
        j["byte_coverage"] = [&] {
            for (int b = 0; b < 256; ++b)
                if (!v.find(std::string(1, static_cast<char>(b)))) return false;
            return true;
        }();
        j["max_token_bytes"] = max_len;
        j["mean_token_bytes"] = v.size() ? static_cast<double>(total) / static_cast<double>(v.size()) : 0.0;
        *json = dup_string(j.dump(2));
    });
}

ta_status ta_vocab_overlap_json(const ta_vocab* src, const ta_vocab* tgt, char** json) {
    return guard([&] {
        need_out(json);
        const auto s = shared_tokens(need(src, "src").v, need(tgt, "tgt").v);
        ojson j;
        j["src_size"] = s.src_size;
        j["tgt_size"] = s.tgt_size;
        j["shared_tokens"] = s.pairs.size();
        j["overlap_ratio_src"] = s.overlap_ratio_src;
        j["overlap_ratio_tgt"] = s.overlap_ratio_tgt;
        *json = dup_string(j.dump(2));
    });
}

ta_status ta_tokens_read(const char* path, ta_tokens** out) {
    return guard([&] {
        need_out(out);
        *out = new ta_tokens{read_token_stream(str(path, "path"))};
    });
}

ta_status ta_tokens_write(const ta_tokens* tokens, const char* path) {
    return guard([&] { write_token_stream(need(tokens, "tokens").s, str(path, "path")); });
}

void ta_tokens_free(ta_tokens* tokens) { delete tokens; }
uint64_t ta_tokens_total(const ta_tokens* tokens) { return tokens ? tokens->s.total_tokens() : 0; }
size_t ta_tokens_doc_count(const ta_tokens* tokens) { return tokens ? tokens->s.doc_count() : 0; }

ta_status ta_tokenize_file(const ta_vocab* vocab, const char* text_path, unsigned threads, ta_tokens** out) {
    return guard([&] {
        need_out(out);
        const GreedyTokenizer tok(need(vocab, "vocab").v);
        const auto docs = read_documents(str(text_path, "text_path"));
        *out = new ta_tokens{tok.tokenize_documents(docs, resolve_threads(threads))};
    });
}

ta_status ta_compression_rate_json(const ta_vocab* vocab, const char* text_path, int per_document, unsigned threads,
                                   char** json) {
    return guard([&] {
        need_out(json);
        const GreedyTokenizer tok(need(vocab, "vocab").v);
        const auto docs = read_documents(str(text_path, "text_path"));
        const auto stream = tok.tokenize_documents(docs, resolve_threads(threads));
        const auto r = compression_rate(docs, stream, per_document != 0);
        ojson j;
        j["bytes_per_token"] = r.bytes_per_token;
        j["total_bytes"] = r.total_bytes;
        j["total_tokens"] = r.total_tokens;
        j["documents"] = docs.size();
        if (per_document) {
            auto& arr = j["per_document"] = ojson::array();
            for (double d : r.per_document) arr.push_back(std::isnan(d) ? ojson() : ojson(d));
        }
        *json = dup_string(j.dump(2));
    });
}

ta_status ta_cooccur_build(const ta_tokens* tokens, uint32_t window, int distance_weighting, unsigned shards,
                           unsigned threads, ta_cooccur** out) {
    return guard([&] {
        need_out(out);
        CooccurOptions o;
        o.window = window;
        o.distance_weighting = distance_weighting != 0;
        o.shards = shards;
        o.threads = resolve_threads(threads);
        *out = new ta_cooccur{accumulate(need(tokens, "tokens").s, o)};
    });
}

ta_status ta_cooccur_read(const char* path, ta_cooccur** out) {
    return guard([&] {
        need_out(out);
        *out = new ta_cooccur{read_cooccur(str(path, "path"))};
    });
}

ta_status ta_cooccur_write(const ta_cooccur* m, const char* path) {
    return guard([&] { write_cooccur(need(m, "matrix").m, str(path, "path")); });
}

void ta_cooccur_free(ta_cooccur* m) { delete m; }
uint64_t ta_cooccur_entry_count(const ta_cooccur* m) { return m ? m->m.entries().size() : 0; }
double ta_cooccur_total_weight(const ta_cooccur* m) { return m ? m->m.total_weight() : 0.0; }

void ta_glove_config_default(ta_glove_config* cfg) {
    if (!cfg) return;
    const GloveConfig d;
    cfg->dim = d.dim;
    cfg->epochs = d.epochs;
    cfg->x_max = d.x_max;
    cfg->alpha = d.alpha;
    cfg->learning_rate = d.learning_rate;
    cfg->grad_clip = d.grad_clip;
    cfg->seed = d.seed;
    cfg->threads = d.threads;
}

ta_status ta_glove_train(const ta_cooccur* m, const ta_glove_config* cfg, ta_embeddings** out, char** report) {
    return guard([&] {
        need_out(out);
        const auto& c = need(cfg, "cfg");
        GloveConfig g;
        g.dim = c.dim;
        g.epochs = c.epochs;
        g.x_max = c.x_max;
        g.alpha = c.alpha;
        g.learning_rate = c.learning_rate;
        g.grad_clip = c.grad_clip;
        g.seed = c.seed;
        g.threads = resolve_threads(c.threads);
        auto result = train_glove(need(m, "matrix").m, g);
        if (report) {
            ojson j;
            j["epoch_loss"] = result.epoch_loss;
            j["coverage"] = result.embeddings.coverage();
            j["covered_tokens"] = result.embeddings.covered_count();
            *report = dup_string(j.dump(2));
        }
        *out = new ta_embeddings{std::move(result.embeddings)};
    });
}

ta_status ta_hidden_pool(const char* states_path, const ta_vocab* vocab, const char* mode, ta_embeddings** out) {
    return guard([&] {
        need_out(out);
        const auto pm = parse_pool_mode(mode ? mode : "last");
        *out = new ta_embeddings{build_embeddings(read_hidden_states(str(states_path, "states_path")),
                                                  need(vocab, "vocab").v, pm)};
    });
}

ta_status ta_embeddings_read(const char* path, ta_embeddings** out) {
    return guard([&] {
        need_out(out);
        *out = new ta_embeddings{read_embeddings(str(path, "path"))};
    });
}

ta_status ta_embeddings_write(const ta_embeddings* e, const char* path) {
    return guard([&] { write_embeddings(need(e, "embeddings").e, str(path, "path")); });
}

ta_status ta_embeddings_write_text(const ta_embeddings* e, const char* path) {
    return guard([&] { write_embeddings_text(need(e, "embeddings").e, str(path, "path")); });
}

void ta_embeddings_free(ta_embeddings* e) { delete e; }
size_t ta_embeddings_rows(const ta_embeddings* e) { return e ? e->e.vocab_size() : 0; }
size_t ta_embeddings_dim(const ta_embeddings* e) { return e ? e->e.dim() : 0; }

ta_status ta_embeddings_set_frequency(ta_embeddings* e, const ta_tokens* tokens) {
    return guard([&] {
        if (!e) fail_usage("embeddings is NULL");
        const auto& s = need(tokens, "tokens").s;
        if (s.vocab_size() != e->e.vocab_size())
            fail_usage("token stream vocabulary (", s.vocab_size(), ") differs from embedding rows (", e->e.vocab_size(), ")");
        const auto counts = s.unigram_counts();
        e->e.frequency.assign(counts.begin(), counts.end());
    });
}

void ta_align_config_default(ta_align_config* cfg) {
    if (!cfg) return;
    const AlignConfig a;
    cfg->similarity = "csls";
    cfg->induction = "union";
    cfg->csls_k = a.csls_k;
    cfg->top_n = 3;
    cfg->use_shared_seed = 1;
    cfg->unsupervised_init = a.unsupervised_init;
    cfg->self_learning = a.self_learning;
    cfg->patience = a.patience;
    cfg->max_iter = a.max_iter;
    cfg->tol = a.tol;
    cfg->keep_prob_initial = a.keep_prob_initial;
    cfg->induction_vocab = a.induction_vocab;
    cfg->unsupervised_vocab = a.unsupervised_vocab;
    cfg->seed = a.seed;
    cfg->threads = a.threads;
}

ta_status ta_align(const ta_embeddings* src, const ta_embeddings* tgt, const ta_vocab* src_vocab,
                   const ta_vocab* tgt_vocab, const ta_align_config* cfg, ta_lexicon** t2s, ta_lexicon** s2t,
                   char** report) {
    return guard([&] {
        const auto& c = need(cfg, "cfg");
        const auto& vs = need(src_vocab, "src_vocab").v;
        const auto& vt = need(tgt_vocab, "tgt_vocab").v;
        AlignConfig a;
        a.csls_k = c.csls_k;
        a.induction = parse_induction(c.induction ? c.induction : "mutual");
        a.unsupervised_init = c.unsupervised_init != 0;
        a.self_learning = c.self_learning != 0;
        a.patience = c.patience;
        a.max_iter = c.max_iter;
        a.tol = c.tol;
        a.keep_prob_initial = c.keep_prob_initial;
        a.induction_vocab = c.induction_vocab;
        a.unsupervised_vocab = c.unsupervised_vocab;
        a.seed = c.seed;
        a.threads = resolve_threads(c.threads);
        LexiconOptions lo;
        lo.similarity = parse_similarity(c.similarity ? c.similarity : "csls");
        lo.csls_k = c.csls_k;
        lo.top_n = c.top_n;
        lo.threads = a.threads;

        const Embeddings es = normalize(need(src, "src").e);
        const Embeddings et = normalize(need(tgt, "tgt").e);
        if (es.vocab_size() != vs.size() || et.vocab_size() != vt.size())
            fail_usage("embedding rows do not match vocabulary sizes");
        const auto shared = shared_tokens(vs, vt);
        std::vector<TokenPair> seed;
        if (c.use_shared_seed) seed = shared.pairs;
        const auto m = self_learn_align(es, et, seed, a);
        if (t2s) {
            lo.direction = Direction::TgtToSrc;
            *t2s = new ta_lexicon{extract_lexicon(es, et, m, shared, lo)};
        }
        if (s2t) {
            lo.direction = Direction::SrcToTgt;
            *s2t = new ta_lexicon{extract_lexicon(es, et, m, shared, lo)};
        }
        if (report) {
            ojson j;
            j["objective"] = m.objective;
            j["iterations"] = m.iterations;
            j["best_iteration"] = m.best_iteration;
            j["dictionary_size"] = m.dictionary_size;
            j["reached_max_iter"] = m.reached_max_iter;
            j["shared_tokens"] = shared.pairs.size();
            j["src_coverage"] = es.coverage();
            j["tgt_coverage"] = et.coverage();
            *report = dup_string(j.dump(2));
        }
    });
}

ta_status ta_lexicon_read(const char* path, ta_lexicon** out) {
    return guard([&] {
        need_out(out);
        const auto p = str(path, "path");
        *out = new ta_lexicon{is_json_path(p) ? lexicon_from_json(io::read_text_file(p)) : read_lexicon_tsv(p)};
    });
}

ta_status ta_lexicon_write(const ta_lexicon* lex, const char* path) {
    return guard([&] {
        const auto p = str(path, "path");
        const auto& l = need(lex, "lexicon").l;
        if (is_json_path(p)) {
            const auto text = lexicon_to_json(l);
            io::write_file(p, text.data(), text.size());
        } else {
            write_lexicon_tsv(l, p);
        }
    });
}

void ta_lexicon_free(ta_lexicon* lex) { delete lex; }
size_t ta_lexicon_query_count(const ta_lexicon* lex) { return lex ? lex->l.query_vocab() : 0; }

ta_status ta_lexicon_top1(const ta_lexicon* lex, uint32_t query, uint32_t* candidate) {
    return guard([&] {
        need_out(candidate);
        *candidate = need(lex, "lexicon").l.top1(query);
    });
}

ta_status ta_evaluate_json(const ta_tokens* src, const ta_tokens* tgt, const ta_lexicon* t2s, const ta_lexicon* s2t,
                           const char* semantic_t2s, const char* semantic_s2t, unsigned threads, char** json) {
    return guard([&] {
        need_out(json);
        BidirectionalInput in{&need(src, "src").s, &need(tgt, "tgt").s, t2s ? &t2s->l : nullptr,
                              s2t ? &s2t->l : nullptr};
        auto reports = evaluate_bidirectional(in, resolve_threads(threads));
        auto semantic = [&](const char* path, Direction d) {
            if (!path) return;
            for (auto& r : reports) {
                if (r.direction != d) continue;
                const auto rows = read_document_embeddings(path);
                if (rows.size() != 2 * r.documents)
                    fail_data(path, ": expected ", 2 * r.documents, " rows (A/B per document), got ", rows.size());
                r.semantic_score = semantic_similarity_interleaved(rows);
            }
        };
        semantic(semantic_t2s, Direction::TgtToSrc);
        semantic(semantic_s2t, Direction::SrcToTgt);
        *json = dup_string(report_to_json(reports));
    });
}

ta_status ta_bleu1(const ta_tokens* candidate, const ta_tokens* reference, double* out) {
    return guard([&] {
        need_out(out);
        *out = bleu1(need(candidate, "candidate").s, need(reference, "reference").s).bleu1;
    });
}

ta_status ta_remap_file(const char* src_bundle, const ta_lexicon* t2s, const char* strategy, uint64_t seed,
                        size_t tgt_vocab_size, unsigned threads, const char* out_path) {
    return guard([&] {
        InitStrategy st;
        st.kind = parse_init_kind(strategy ? strategy : "tokalign");
        st.seed = seed;
        const auto bundle = read_bundle(str(src_bundle, "src_bundle"));
        write_bundle(remap_parameters(bundle, need(t2s, "lexicon").l, st, tgt_vocab_size, resolve_threads(threads)),
                     str(out_path, "out_path"));
    });
}

ta_status ta_plan_two_stage_json(uint64_t steps, double embed_frac, double learning_rate, uint64_t batch_tokens,
                                 const char* lr_schedule, char** json) {
    return guard([&] {
        need_out(json);
        *json = dup_string(plan_to_json(
            emit_two_stage_plan(steps, embed_frac, learning_rate, batch_tokens, lr_schedule ? lr_schedule : "constant")));
    });
}

ta_status ta_plan_distill_json(const char* teacher, const char* student, const double* kd_weight,
                               const double* task_sample_fraction, const double* temperature, char** json) {
    return guard([&] {
        need_out(json);
        DistillOverrides o;
        if (kd_weight) o.kd_weight = *kd_weight;
        if (task_sample_fraction) o.task_sample_fraction = *task_sample_fraction;
        if (temperature) o.temperature = *temperature;
        *json = dup_string(distill_to_json(emit_distill_config(teacher ? teacher : "", student ? student : "", o)));
    });
}

ta_status ta_run_pipeline(const char* config_path, const uint64_t* seed, const unsigned* threads, int use_cache,
                          ta_log_fn log, void* log_user, char** manifest) {
    return guard([&] {
        PipelineOptions o;
        if (seed) o.seed = *seed;
        if (threads) o.threads = *threads;
        o.use_cache = use_cache != 0;
        if (log) o.log = [log, log_user](std::string_view msg) { log(std::string(msg).c_str(), log_user); };
        const auto text = run_pipeline_file(str(config_path, "config_path"), o);
        if (manifest) *manifest = dup_string(text);
    });
}

}  // extern "C"
