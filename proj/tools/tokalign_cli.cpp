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

// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tokalign/tokalign.h"

namespace {

// Non-zero status from the library: print the message, exit with the status code.
struct Failure {
    ta_status status;
    std::string message;
};

void check(ta_status s) {
    if (s != TA_OK) throw Failure{s, ta_last_error()};
}

[[noreturn]] void usage(const std::string& msg) { throw Failure{TA_ERR_USAGE, msg}; }

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
    T** out() { return &p; }
    T* get() const { return p; }
};

using Vocab = Handle<ta_vocab, ta_vocab_free>;
using Tokens = Handle<ta_tokens, ta_tokens_free>;
using Cooccur = Handle<ta_cooccur, ta_cooccur_free>;
using Emb = Handle<ta_embeddings, ta_embeddings_free>;
using Lexicon = Handle<ta_lexicon, ta_lexicon_free>;

struct String {
    char* p = nullptr;
    ~String() { ta_string_free(p); }
    char** out() { return &p; }
    std::string str() const { return p ? p : ""; }
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw Failure{TA_ERR_DATA, "cannot open " + out_path + " for writing"};
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
    if (!f) throw Failure{TA_ERR_DATA, "write error on " + out_path};
}

struct Globals {
    std::uint64_t seed = 7;
    unsigned threads = 1;
    std::string config;
    bool seed_given = false;
    bool threads_given = false;
};

// --config supplies defaults for the global flags; explicit flags win.
void apply_config(Globals& g) {
    if (g.config.empty()) return;
    std::ifstream in(g.config);
    if (!in) usage("cannot open config " + g.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        usage(std::string("config: ") + e.what());
    }
    if (!g.seed_given && j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
    if (!g.threads_given && j.contains("threads")) g.threads = j["threads"].get<unsigned>();
}

void log_line(const char* msg, void*) { std::cerr << "[tokalign] " << msg << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tokalign: token-alignment lexicons between tokenizer vocabularies"};
    app.require_subcommand(1);
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Top-level random seed")->default_val(7);
    auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->default_val(1);
    app.add_option("--config", g.config, "JSON config file (pipeline config for `run`)");
    app.fallthrough();

    std::function<void()> action;

    // vocab
    auto* vocab = app.add_subcommand("vocab", "Vocabulary statistics and overlap");
    vocab->require_subcommand(1);
    std::string v_path, v_src, v_tgt;
    auto* v_stats = vocab->add_subcommand("stats", "Size and byte coverage of a vocabulary");
    v_stats->add_option("path", v_path, "Vocabulary JSON")->required();
    v_stats->callback([&] {
        action = [&] {
            Vocab v;
            check(ta_vocab_load(v_path.c_str(), v.out()));
            String s;
            check(ta_vocab_stats_json(v.get(), s.out()));
            emit(s.str(), "");
        };
    });
    auto* v_overlap = vocab->add_subcommand("overlap", "Shared tokens between two vocabularies");
    v_overlap->add_option("src", v_src, "Source vocabulary JSON")->required();
    v_overlap->add_option("tgt", v_tgt, "Target vocabulary JSON")->required();
    v_overlap->callback([&] {
        action = [&] {
            Vocab s, t;
            check(ta_vocab_load(v_src.c_str(), s.out()));
            check(ta_vocab_load(v_tgt.c_str(), t.out()));
            String out;
            check(ta_vocab_overlap_json(s.get(), t.get(), out.out()));
            emit(out.str(), "");
        };
    });

    // tokenize
    std::string tk_vocab, tk_in, tk_out;
    auto* tokenize = app.add_subcommand("tokenize", "Greedy longest-match tokenization to TITS");
    tokenize->add_option("--vocab", tk_vocab)->required();
    tokenize->add_option("--in", tk_in, "Text file, one document per line")->required();
    tokenize->add_option("--out", tk_out)->required();
    tokenize->callback([&] {
        action = [&] {
            Vocab v;
            check(ta_vocab_load(tk_vocab.c_str(), v.out()));
            Tokens t;
            check(ta_tokenize_file(v.get(), tk_in.c_str(), g.threads, t.out()));
            check(ta_tokens_write(t.get(), tk_out.c_str()));
            std::cerr << ta_tokens_doc_count(t.get()) << " documents, " << ta_tokens_total(t.get()) << " tokens\n";
        };
    });

    // compress-rate
    std::string cr_vocab, cr_corpus, cr_out;
    bool cr_per_doc = false;
    auto* compress = app.add_subcommand("compress-rate", "Bytes of UTF-8 text per token");
    compress->add_option("--vocab", cr_vocab)->required();
    compress->add_option("--corpus", cr_corpus, "Text file, one document per line")->required();
    compress->add_flag("--per-document", cr_per_doc);
    compress->add_option("--out", cr_out);
    compress->callback([&] {
        action = [&] {
            Vocab v;
            check(ta_vocab_load(cr_vocab.c_str(), v.out()));
            String s;
            check(ta_compression_rate_json(v.get(), cr_corpus.c_str(), cr_per_doc, g.threads, s.out()));
            emit(s.str(), cr_out);
        };
    });

    // cooccur
    std::string co_in, co_out;
    std::uint32_t co_window = 10;
    unsigned co_shards = 1;
    bool co_flat = false;
    auto* cooccur = app.add_subcommand("cooccur", "Build the co-occurrence matrix (TCOC)");
    cooccur->add_option("--in", co_in, "TITS token stream")->required();
    cooccur->add_option("--window", co_window)->default_val(10);
    cooccur->add_flag("--no-distance-weighting", co_flat, "Weight every pair 1 instead of 1/d");
    cooccur->add_option("--shards", co_shards)->default_val(1);
    cooccur->add_option("--out", co_out)->required();
    cooccur->callback([&] {
        action = [&] {
            Tokens t;
            check(ta_tokens_read(co_in.c_str(), t.out()));
            Cooccur m;
            check(ta_cooccur_build(t.get(), co_window, !co_flat, co_shards, g.threads, m.out()));
            check(ta_cooccur_write(m.get(), co_out.c_str()));
            std::cerr << ta_cooccur_entry_count(m.get()) << " entries, total weight " << ta_cooccur_total_weight(m.get())
                      << '\n';
        };
    });

    // glove
    ta_glove_config gc;
    ta_glove_config_default(&gc);
    std::string gl_in, gl_out, gl_text, gl_tokens, gl_report;
    bool gl_parallel = false;
    auto* glove = app.add_subcommand("glove", "Train token vectors on a co-occurrence matrix");
    glove->add_option("--cooccur", gl_in)->required();
    glove->add_option("--dim", gc.dim)->default_val(gc.dim);
    glove->add_option("--epochs", gc.epochs)->default_val(gc.epochs);
    glove->add_option("--x-max", gc.x_max)->default_val(gc.x_max);
    glove->add_option("--alpha", gc.alpha)->default_val(gc.alpha);
    glove->add_option("--lr", gc.learning_rate)->default_val(gc.learning_rate);
    glove->add_option("--grad-clip", gc.grad_clip)->default_val(gc.grad_clip);
    glove->add_flag("--parallel", gl_parallel, "Lock-free multi-threaded epochs (not bit-reproducible)");
    glove->add_option("--tokens", gl_tokens, "TITS stream whose unigram counts are stored as token frequency");
    glove->add_option("--text-out", gl_text, "Also write the text embedding format");
    glove->add_option("--report", gl_report, "Write per-epoch loss JSON here");
    glove->add_option("--out", gl_out)->required();
    glove->callback([&] {
        action = [&] {
            Cooccur m;
            check(ta_cooccur_read(gl_in.c_str(), m.out()));
            gc.seed = g.seed;
            gc.threads = gl_parallel ? g.threads : 1;
            Emb e;
            String report;
            check(ta_glove_train(m.get(), &gc, e.out(), report.out()));
            if (!gl_tokens.empty()) {
                Tokens t;
                check(ta_tokens_read(gl_tokens.c_str(), t.out()));
                check(ta_embeddings_set_frequency(e.get(), t.get()));
            }
            check(ta_embeddings_write(e.get(), gl_out.c_str()));
            if (!gl_text.empty()) check(ta_embeddings_write_text(e.get(), gl_text.c_str()));
            if (!gl_report.empty()) emit(report.str(), gl_report);
        };
    });

    // hidden-pool
    std::string hp_in, hp_vocab, hp_mode = "last", hp_out, hp_tokens;
    auto* hidden = app.add_subcommand("hidden-pool", "Token vectors from exported hidden states (THSR)");
    hidden->add_option("--in", hp_in)->required();
    hidden->add_option("--vocab", hp_vocab)->required();
    hidden->add_option("--mode", hp_mode, "max | avg | last")->default_val("last");
    hidden->add_option("--tokens", hp_tokens, "TITS stream whose unigram counts are stored as token frequency");
    hidden->add_option("--out", hp_out)->required();
    hidden->callback([&] {
        action = [&] {
            Vocab v;
            check(ta_vocab_load(hp_vocab.c_str(), v.out()));
            Emb e;
            check(ta_hidden_pool(hp_in.c_str(), v.get(), hp_mode.c_str(), e.out()));
            if (!hp_tokens.empty()) {
                Tokens t;
                check(ta_tokens_read(hp_tokens.c_str(), t.out()));
                check(ta_embeddings_set_frequency(e.get(), t.get()));
            }
            check(ta_embeddings_write(e.get(), hp_out.c_str()));
        };
    });

    // align
    ta_align_config ac;
    ta_align_config_default(&ac);
    std::string al_src, al_tgt, al_vs, al_vt, al_out, al_out_rev, al_report, al_sim = "csls", al_induction = "union",
                                                                            al_seed_dict = "shared";
    bool al_unsup = false, al_no_self = false;
    auto* align = app.add_subcommand("align", "Learn the mapping and extract lexicons");
    align->add_option("--src-emb", al_src)->required();
    align->add_option("--tgt-emb", al_tgt)->required();
    align->add_option("--src-vocab", al_vs)->required();
    align->add_option("--tgt-vocab", al_vt)->required();
    align->add_option("--sim", al_sim, "csls | cosine")->default_val("csls");
    align->add_option("--k", ac.csls_k, "CSLS neighbourhood size")->default_val(ac.csls_k);
    align->add_option("--top-n", ac.top_n)->default_val(ac.top_n);
    align->add_option("--induction", al_induction, "union | mutual | forward")->default_val("union");
    align->add_option("--seed-dict", al_seed_dict, "shared | none")->default_val("shared");
    align->add_flag("--unsupervised", al_unsup, "Similarity-distribution init when the seed is empty");
    align->add_flag("--no-self-learning", al_no_self, "Single Procrustes fit on the seed");
    align->add_option("--patience", ac.patience)->default_val(ac.patience);
    align->add_option("--max-iter", ac.max_iter)->default_val(ac.max_iter);
    align->add_option("--tol", ac.tol)->default_val(ac.tol);
    align->add_option("--out", al_out, "Target-to-source lexicon (.tsv or .json)")->required();
    align->add_option("--out-s2t", al_out_rev, "Source-to-target lexicon");
    align->add_option("--report", al_report, "Alignment statistics JSON");
    align->callback([&] {
        action = [&] {
            if (al_seed_dict != "shared" && al_seed_dict != "none") usage("--seed-dict must be shared or none");
            Vocab vs, vt;
            check(ta_vocab_load(al_vs.c_str(), vs.out()));
            check(ta_vocab_load(al_vt.c_str(), vt.out()));
            Emb es, et;
            check(ta_embeddings_read(al_src.c_str(), es.out()));
            check(ta_embeddings_read(al_tgt.c_str(), et.out()));
            ac.similarity = al_sim.c_str();
            ac.induction = al_induction.c_str();
            ac.use_shared_seed = al_seed_dict == "shared";
            ac.unsupervised_init = al_unsup;
            ac.self_learning = !al_no_self;
            ac.seed = g.seed;
            ac.threads = g.threads;
            Lexicon t2s, s2t;
            String report;
            check(ta_align(es.get(), et.get(), vs.get(), vt.get(), &ac, t2s.out(), al_out_rev.empty() ? nullptr : s2t.out(),
                           report.out()));
            check(ta_lexicon_write(t2s.get(), al_out.c_str()));
            if (!al_out_rev.empty()) check(ta_lexicon_write(s2t.get(), al_out_rev.c_str()));
            emit(report.str(), al_report);
        };
    });

    // eval
    std::string ev_lex, ev_lex_rev, ev_src, ev_tgt, ev_out, ev_sem, ev_sem_rev;
    auto* eval = app.add_subcommand("eval", "BLEU-1 / semantic score of lexicon-converted corpora");
    eval->add_option("--lexicon", ev_lex, "Target-to-source lexicon")->required();
    eval->add_option("--lexicon-s2t", ev_lex_rev, "Source-to-target lexicon (reverse direction)");
    eval->add_option("--src", ev_src, "Source tokenization (TITS)")->required();
    eval->add_option("--tgt", ev_tgt, "Target tokenization of the same text (TITS)")->required();
    eval->add_option("--semantic-t2s", ev_sem, "Interleaved document embeddings for the t2s conversion");
    eval->add_option("--semantic-s2t", ev_sem_rev, "Interleaved document embeddings for the s2t conversion");
    eval->add_option("--out", ev_out);
    eval->callback([&] {
        action = [&] {
            Tokens s, t;
            check(ta_tokens_read(ev_src.c_str(), s.out()));
            check(ta_tokens_read(ev_tgt.c_str(), t.out()));
            Lexicon l, lr;
            check(ta_lexicon_read(ev_lex.c_str(), l.out()));
            if (!ev_lex_rev.empty()) check(ta_lexicon_read(ev_lex_rev.c_str(), lr.out()));
            String out;
            check(ta_evaluate_json(s.get(), t.get(), l.get(), lr.get(), ev_sem.empty() ? nullptr : ev_sem.c_str(),
                                   ev_sem_rev.empty() ? nullptr : ev_sem_rev.c_str(), g.threads, out.out()));
            emit(out.str(), ev_out);
        };
    });

    // remap
    std::string rm_src, rm_lex, rm_strategy = "tokalign", rm_out, rm_tgt_vocab;
    std::size_t rm_tgt_size = 0;
    auto* remap = app.add_subcommand("remap", "Transplant embedding / lm_head rows onto the target vocabulary");
    remap->add_option("--src-bundle", rm_src)->required();
    remap->add_option("--lexicon", rm_lex, "Target-to-source lexicon")->required();
    remap->add_option("--strategy", rm_strategy, "tokalign | random_init | random_permutation | multivariate | mean")
        ->default_val("tokalign");
    remap->add_option("--tgt-vocab", rm_tgt_vocab, "Target vocabulary (sets the output row count)");
    remap->add_option("--tgt-vocab-size", rm_tgt_size, "Output row count when no vocabulary file is given");
    remap->add_option("--out", rm_out)->required();
    remap->callback([&] {
        action = [&] {
            Lexicon l;
            check(ta_lexicon_read(rm_lex.c_str(), l.out()));
            std::size_t rows = rm_tgt_size;
            if (!rm_tgt_vocab.empty()) {
                Vocab v;
                check(ta_vocab_load(rm_tgt_vocab.c_str(), v.out()));
                rows = ta_vocab_size(v.get());
            }
            if (rows == 0) rows = ta_lexicon_query_count(l.get());
            check(ta_remap_file(rm_src.c_str(), l.get(), rm_strategy.c_str(), g.seed, rows, g.threads, rm_out.c_str()));
        };
    });

    // plan
    auto* plan = app.add_subcommand("plan", "Emit training plans as JSON");
    plan->require_subcommand(1);
    std::uint64_t pl_steps = 1000, pl_batch = 2097152;
    double pl_frac = 0.5, pl_lr = 5e-5;
    std::string pl_sched = "constant", pl_out;
    auto* two = plan->add_subcommand("two-stage", "Embedding-first then full tuning");
    two->add_option("--steps", pl_steps)->default_val(1000);
    two->add_option("--embed-frac", pl_frac)->default_val(0.5);
    two->add_option("--lr", pl_lr)->default_val(5e-5);
    two->add_option("--batch-tokens", pl_batch)->default_val(2097152);
    two->add_option("--lr-schedule", pl_sched)->default_val("constant");
    two->add_option("--out", pl_out);
    two->callback([&] {
        action = [&] {
            String s;
            check(ta_plan_two_stage_json(pl_steps, pl_frac, pl_lr, pl_batch, pl_sched.c_str(), s.out()));
            emit(s.str(), pl_out);
        };
    });
    std::string ds_teacher, ds_student, ds_out;
    std::optional<double> ds_kd, ds_frac, ds_temp;
    auto* distill = plan->add_subcommand("distill", "Token-level distillation config");
    distill->add_option("--teacher", ds_teacher)->required();
    distill->add_option("--student", ds_student)->required();
    distill->add_option("--kd-weight", ds_kd);
    distill->add_option("--fraction", ds_frac, "Share of training samples that get the KL term");
    distill->add_option("--temperature", ds_temp);
    distill->add_option("--out", ds_out);
    distill->callback([&] {
        action = [&] {
            String s;
            check(ta_plan_distill_json(ds_teacher.c_str(), ds_student.c_str(), ds_kd ? &*ds_kd : nullptr,
                                       ds_frac ? &*ds_frac : nullptr, ds_temp ? &*ds_temp : nullptr, s.out()));
            emit(s.str(), ds_out);
        };
    });

    // run
    std::string run_cfg;
    bool run_no_cache = false, run_quiet = false;
    auto* run = app.add_subcommand("run", "Run the full pipeline from a JSON config");
    run->add_option("config_file", run_cfg, "Pipeline config (defaults to --config)");
    run->add_flag("--no-cache", run_no_cache, "Recompute every stage");
    run->add_flag("--quiet", run_quiet, "No progress lines on stderr");
    run->callback([&] {
        action = [&] {
            const std::string path = run_cfg.empty() ? g.config : run_cfg;
            if (path.empty()) usage("run: no config file given");
            const std::uint64_t* seed = g.seed_given ? &g.seed : nullptr;
            const unsigned* threads = g.threads_given ? &g.threads : nullptr;
            String manifest;
            check(ta_run_pipeline(path.c_str(), seed, threads, !run_no_cache, run_quiet ? nullptr : log_line, nullptr,
                                  manifest.out()));
            emit(manifest.str(), "");
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return TA_ERR_USAGE;
    }

    try {
        g.seed_given = seed_opt->count() > 0;
        g.threads_given = threads_opt->count() > 0;
        if (!run->parsed()) apply_config(g);
        if (!action) usage("no command given");
        action();
    } catch (const Failure& f) {
        std::cerr << "tokalign: " << f.message << '\n';
        return f.status == TA_ERR_INTERNAL ? TA_ERR_DATA : f.status;
    } catch (const std::exception& e) {
        std::cerr << "tokalign: " << e.what() << '\n';
        return TA_ERR_USAGE;
    }
    return 0;
}
