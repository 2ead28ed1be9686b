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

#include "tokalign/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include <json.hpp>

#include "tokalign/align.hpp"
#include "tokalign/binary_io.hpp"
#include "tokalign/compression.hpp"
#include "tokalign/cooccur.hpp"
#include "tokalign/corpus.hpp"
#include "tokalign/error.hpp"
#include "tokalign/glove.hpp"
#include "tokalign/hash.hpp"
#include "tokalign/hidden_rep.hpp"
#include "tokalign/metrics.hpp"
#include "tokalign/parallel.hpp"
#include "tokalign/plan.hpp"
#include "tokalign/remap.hpp"
#include "tokalign/rng.hpp"

namespace tokalign {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr int kManifestVersion = 1;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) fail_usage("config: \"", where, "\" must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) fail_usage("config: unknown key \"", key, "\" in ", where);
    }
}

template <class T>
T value(const json& j, const char* key, T fallback, std::string_view where) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        fail_usage("config: ", where, ".", key, " has the wrong type");
    }
}

json section(const json& j, const char* key) {
    return j.contains(key) && !j[key].is_null() ? j[key] : json::object();
}

struct Config {
    fs::path base;
    fs::path out_dir;
    fs::path src_vocab, tgt_vocab;
    std::uint64_t seed = 7;
    unsigned threads = 1;

    std::vector<WeightedCorpus> texts;
    fs::path src_tokens, tgt_tokens;
    std::uint64_t token_budget = 0;

    bool glove_mode = true;
    CooccurOptions cooccur;
    GloveConfig glove;
    fs::path src_states, tgt_states;
    PoolMode pool = PoolMode::Last;

    bool shared_seed = true;
    AlignConfig align;
    LexiconOptions lexicon;

    bool eval = false;
    fs::path truth;
    std::uint64_t min_frequency = 0;
    fs::path semantic_t2s, semantic_s2t;
    bool write_converted = false;

    fs::path remap_bundle;
    InitStrategy remap;

    bool plan = true;
    std::uint64_t plan_steps = 1000;
    double plan_embed_frac = 0.5;
    double plan_lr = 5e-5;
    std::uint64_t plan_batch_tokens = 2097152;
    std::string plan_lr_schedule = "constant";
    bool distill = false;
    std::string teacher, student;
    DistillOverrides distill_overrides;

    json raw;

    bool has_corpus() const { return !texts.empty() || !src_tokens.empty(); }
};

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path existing(const fs::path& base, const json& j, const char* key, std::string_view where) {
    const auto s = value<std::string>(j, key, "", where);
    if (s.empty()) return {};
    auto p = resolve(base, s);
    if (!fs::exists(p)) fail_usage("config: ", where, ".", key, " refers to missing file ", p.string());
    return p;
}

Config parse_config(std::string_view text, const fs::path& base, const PipelineOptions& opt) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        fail_usage("config: ", e.what());
    }
    check_keys(j, {"seed", "threads", "output_dir", "src_vocab", "tgt_vocab", "corpus", "representation", "cooccur",
                   "glove", "hidden", "align", "eval", "remap", "plan"},
               "top level");
    Config c;
    c.raw = j;
    c.base = base;
    c.seed = opt.seed ? *opt.seed : value<std::uint64_t>(j, "seed", 7, "top level");
    c.threads = resolve_threads(opt.threads ? *opt.threads : value<unsigned>(j, "threads", 1, "top level"));
    const auto out = value<std::string>(j, "output_dir", "", "top level");
    if (out.empty()) fail_usage("config: output_dir is required");
    c.out_dir = resolve(base, out);
    c.src_vocab = existing(base, j, "src_vocab", "top level");
    c.tgt_vocab = existing(base, j, "tgt_vocab", "top level");
    if (c.src_vocab.empty() || c.tgt_vocab.empty()) fail_usage("config: src_vocab and tgt_vocab are required");

    const json corpus = section(j, "corpus");
    check_keys(corpus, {"text", "src_tokens", "tgt_tokens", "token_budget"}, "corpus");
    if (corpus.contains("text")) {
        if (!corpus["text"].is_array()) fail_usage("config: corpus.text must be a list");
        for (const auto& e : corpus["text"]) {
            if (e.is_string()) {
                c.texts.push_back({existing(base, json{{"path", e}}, "path", "corpus.text"), 1.0});
            } else {
                check_keys(e, {"path", "weight"}, "corpus.text[]");
                c.texts.push_back({existing(base, e, "path", "corpus.text[]"), value<double>(e, "weight", 1.0, "corpus.text[]")});
            }
            if (c.texts.back().path.empty()) fail_usage("config: corpus.text entry without a path");
        }
    }
    c.src_tokens = existing(base, corpus, "src_tokens", "corpus");
    c.tgt_tokens = existing(base, corpus, "tgt_tokens", "corpus");
    if (c.src_tokens.empty() != c.tgt_tokens.empty()) fail_usage("config: corpus.src_tokens and corpus.tgt_tokens go together");
    if (!c.texts.empty() && !c.src_tokens.empty()) fail_usage("config: give either corpus.text or corpus.*_tokens, not both");
    c.token_budget = value<std::uint64_t>(corpus, "token_budget", 0, "corpus");

    const auto rep = value<std::string>(j, "representation", "glove", "top level");
    if (rep != "glove" && rep != "hidden") fail_usage("config: representation must be glove or hidden");
    c.glove_mode = rep == "glove";

    const json co = section(j, "cooccur");
    check_keys(co, {"window", "distance_weighting", "shards"}, "cooccur");
    c.cooccur.window = value<std::uint32_t>(co, "window", CooccurMatrix::kDefaultWindow, "cooccur");
    c.cooccur.distance_weighting = value<bool>(co, "distance_weighting", true, "cooccur");
    c.cooccur.shards = value<unsigned>(co, "shards", 1, "cooccur");
    c.cooccur.threads = c.threads;

    const json gl = section(j, "glove");
    check_keys(gl, {"dim", "epochs", "x_max", "alpha", "learning_rate", "grad_clip", "parallel"}, "glove");
    c.glove.dim = value<std::uint32_t>(gl, "dim", c.glove.dim, "glove");
    c.glove.epochs = value<std::uint32_t>(gl, "epochs", c.glove.epochs, "glove");
    c.glove.x_max = value<double>(gl, "x_max", c.glove.x_max, "glove");
    c.glove.alpha = value<double>(gl, "alpha", c.glove.alpha, "glove");
    c.glove.learning_rate = value<double>(gl, "learning_rate", c.glove.learning_rate, "glove");
    c.glove.grad_clip = value<double>(gl, "grad_clip", c.glove.grad_clip, "glove");
    c.glove.threads = value<bool>(gl, "parallel", false, "glove") ? c.threads : 1;
    c.glove.validate();

    const json hd = section(j, "hidden");
    check_keys(hd, {"src_states", "tgt_states", "mode"}, "hidden");
    c.src_states = existing(base, hd, "src_states", "hidden");
    c.tgt_states = existing(base, hd, "tgt_states", "hidden");
    c.pool = parse_pool_mode(value<std::string>(hd, "mode", "last", "hidden"));

    if (c.glove_mode && !c.has_corpus()) fail_usage("config: representation glove needs a corpus");
    if (!c.glove_mode && (c.src_states.empty() || c.tgt_states.empty()))
        fail_usage("config: representation hidden needs hidden.src_states and hidden.tgt_states");

    const json al = section(j, "align");
    check_keys(al, {"seed_dictionary", "unsupervised_init", "induction", "csls_k", "similarity", "top_n",
                    "self_learning", "patience", "tol", "max_iter", "keep_prob_initial", "induction_vocab",
                    "unsupervised_vocab"},
               "align");
    const auto sd = value<std::string>(al, "seed_dictionary", "shared", "align");
    if (sd != "shared" && sd != "none") fail_usage("config: align.seed_dictionary must be shared or none");
    c.shared_seed = sd == "shared";
    c.align.unsupervised_init = value<bool>(al, "unsupervised_init", false, "align");
    c.align.induction = parse_induction(value<std::string>(al, "induction", std::string(to_string(c.align.induction)), "align"));
    c.align.csls_k = value<int>(al, "csls_k", 10, "align");
    c.align.self_learning = value<bool>(al, "self_learning", true, "align");
    c.align.patience = value<std::uint32_t>(al, "patience", c.align.patience, "align");
    c.align.tol = value<double>(al, "tol", c.align.tol, "align");
    c.align.max_iter = value<std::uint32_t>(al, "max_iter", c.align.max_iter, "align");
    c.align.keep_prob_initial = value<double>(al, "keep_prob_initial", c.align.keep_prob_initial, "align");
    c.align.induction_vocab = value<std::size_t>(al, "induction_vocab", c.align.induction_vocab, "align");
    c.align.unsupervised_vocab = value<std::size_t>(al, "unsupervised_vocab", c.align.unsupervised_vocab, "align");
    c.align.seed = derive_seed(c.seed, "align");
    c.align.threads = c.threads;
    c.align.validate();
    c.lexicon.similarity = parse_similarity(value<std::string>(al, "similarity", "csls", "align"));
    c.lexicon.csls_k = c.align.csls_k;
    c.lexicon.top_n = value<std::size_t>(al, "top_n", 3, "align");
    c.lexicon.threads = c.threads;
    if (c.lexicon.top_n < 1) fail_usage("config: align.top_n must be >= 1");

    const json ev = section(j, "eval");
    check_keys(ev, {"enabled", "truth", "min_frequency", "semantic_t2s", "semantic_s2t", "write_converted"}, "eval");
    c.eval = value<bool>(ev, "enabled", c.has_corpus(), "eval");
    if (c.eval && !c.has_corpus()) fail_usage("config: eval needs a corpus");
    c.truth = existing(base, ev, "truth", "eval");
    c.min_frequency = value<std::uint64_t>(ev, "min_frequency", 0, "eval");
    c.semantic_t2s = existing(base, ev, "semantic_t2s", "eval");
    c.semantic_s2t = existing(base, ev, "semantic_s2t", "eval");
    c.write_converted = value<bool>(ev, "write_converted", false, "eval");

    const json rm = section(j, "remap");
    check_keys(rm, {"src_bundle", "strategy", "init_std"}, "remap");
    c.remap_bundle = existing(base, rm, "src_bundle", "remap");
    c.remap.kind = parse_init_kind(value<std::string>(rm, "strategy", "tokalign", "remap"));
    c.remap.init_std = value<double>(rm, "init_std", 0.02, "remap");
    c.remap.seed = derive_seed(c.seed, "remap");

    const json pl = section(j, "plan");
    check_keys(pl, {"enabled", "steps", "embed_frac", "learning_rate", "batch_tokens", "lr_schedule", "distill"}, "plan");
    c.plan = value<bool>(pl, "enabled", true, "plan");
    c.plan_steps = value<std::uint64_t>(pl, "steps", c.plan_steps, "plan");
    c.plan_embed_frac = value<double>(pl, "embed_frac", c.plan_embed_frac, "plan");
    c.plan_lr = value<double>(pl, "learning_rate", c.plan_lr, "plan");
    c.plan_batch_tokens = value<std::uint64_t>(pl, "batch_tokens", c.plan_batch_tokens, "plan");
    c.plan_lr_schedule = value<std::string>(pl, "lr_schedule", c.plan_lr_schedule, "plan");
    if (pl.contains("distill")) {
        const json d = pl["distill"];
        check_keys(d, {"teacher", "student", "kd_weight", "task_sample_fraction", "temperature"}, "plan.distill");
        c.distill = true;
        c.teacher = value<std::string>(d, "teacher", "", "plan.distill");
        c.student = value<std::string>(d, "student", "", "plan.distill");
        if (d.contains("kd_weight")) c.distill_overrides.kd_weight = value<double>(d, "kd_weight", 1.0, "plan.distill");
        if (d.contains("task_sample_fraction"))
            c.distill_overrides.task_sample_fraction = value<double>(d, "task_sample_fraction", 0.15, "plan.distill");
        if (d.contains("temperature")) c.distill_overrides.temperature = value<double>(d, "temperature", 1.0, "plan.distill");
    }
    return c;
}

// Keeps leading documents until `budget` tokens of `lead` are reached.
std::size_t budget_docs(const TokenStream& lead, std::uint64_t budget) {
    if (budget == 0) return lead.doc_count();
    std::uint64_t taken = 0;
    std::size_t d = 0;
    for (; d < lead.doc_count() && taken < budget; ++d) taken += lead.doc(d).size();
    return d;
}

TokenStream head_docs(const TokenStream& s, std::size_t n) {
    TokenStream out(s.vocab_size());
    for (std::size_t d = 0; d < n && d < s.doc_count(); ++d) out.add_document(s.doc(d));
    return out;
}

std::vector<TokenId> read_truth(const fs::path& path, std::size_t tgt_size, std::size_t src_size) {
    std::vector<TokenId> truth(tgt_size, 0xFFFFFFFFu);
    std::ifstream in(path);
    if (!in) fail_data("cannot open ", path.string());
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line[0] == '#') continue;
        unsigned long long t = 0, s = 0;
        if (std::sscanf(line.c_str(), "%llu %llu", &t, &s) != 2) fail_data(path.string(), ": line ", ln, " is not \"tgt_id src_id\"");
        if (t >= tgt_size || s >= src_size) fail_data(path.string(), ": line ", ln, " has an ID out of range");
        truth[t] = static_cast<TokenId>(s);
    }
    return truth;
}

struct OutputSpec {
    std::string label;
    fs::path path;
};

class Runner {
public:
    Runner(const Config& cfg, const PipelineOptions& opt) : cfg_(cfg), opt_(opt) {
        const auto manifest = cfg.out_dir / "manifest.json";
        if (opt.use_cache && fs::exists(manifest)) {
            try {
                previous_ = json::parse(io::read_text_file(manifest));
            } catch (...) {
                previous_ = json();
            }
        }
    }

    void add_input(const std::string& label, const fs::path& path) {
        if (path.empty()) return;
        hashes_[label] = sha256_file(path);
        ojson o;
        o["path"] = path.string();
        o["sha256"] = hashes_[label];
        inputs_[label] = std::move(o);
    }

    const std::string& hash(const std::string& label) const { return hashes_.at(label); }

    template <class Fn>
    void stage(const std::string& name, const json& params, const std::vector<std::string>& inputs,
               const std::vector<OutputSpec>& outputs, Fn&& fn) {
        json key_src;
        key_src["stage"] = name;
        key_src["params"] = params;
        key_src["version"] = kManifestVersion;
        for (const auto& in : inputs) key_src["inputs"].push_back(json{in, hashes_.at(in)});
        const std::string key = sha256_hex(key_src.dump());

        ojson rec;
        rec["name"] = name;
        rec["cache_key"] = key;
        if (reusable(name, key, outputs)) {
            rec["status"] = "cached";
            log("cached  " + name);
        } else {
            log("running " + name);
            try {
                fn();
            } catch (const Error& e) {
                fail(name, rec, outputs, e.kind(), e.what());
            } catch (const std::exception& e) {
                fail(name, rec, outputs, ErrorKind::Data, e.what());
            }
            rec["status"] = "ok";
        }
        ojson outs = ojson::object();
        for (const auto& o : outputs) {
            hashes_[o.label] = sha256_file(o.path);
            outs[o.label] = artifact(o);
            artifacts_[o.label] = outs[o.label];
        }
        rec["outputs"] = std::move(outs);
        stages_.push_back(std::move(rec));
    }

    std::string finish(const ojson& metrics) {
        auto m = manifest();
        m["metrics"] = metrics;
        const auto text = m.dump(2) + "\n";
        io::write_file(cfg_.out_dir / "manifest.json", text.data(), text.size());
        return text;
    }

    void log(const std::string& msg) const {
        if (opt_.log) opt_.log(msg);
    }

private:
    ojson manifest() const {
        ojson m;
        m["tool"] = "tokalign";
        m["manifest_version"] = kManifestVersion;
        m["seed"] = cfg_.seed;
        m["config_sha256"] = sha256_hex(cfg_.raw.dump());
        m["inputs"] = inputs_;
        m["stages"] = stages_;
        m["artifacts"] = artifacts_;
        return m;
    }

    ojson artifact(const OutputSpec& o) const {
        ojson a;
        a["path"] = fs::relative(o.path, cfg_.out_dir).generic_string();
        a["sha256"] = hashes_.at(o.label);
        a["bytes"] = fs::file_size(o.path);
        return a;
    }

    bool reusable(const std::string& name, const std::string& key, const std::vector<OutputSpec>& outputs) const {
        if (!previous_.is_object() || !previous_.contains("stages")) return false;
        for (const auto& s : previous_["stages"]) {
            if (s.value("name", "") != name) continue;
            const auto status = s.value("status", "");
            if (s.value("cache_key", "") != key || (status != "ok" && status != "cached")) return false;
            for (const auto& o : outputs) {
                if (!fs::exists(o.path) || !s.contains("outputs") || !s["outputs"].contains(o.label)) return false;
                if (s["outputs"][o.label].value("sha256", "") != sha256_file(o.path)) return false;
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& name, ojson& rec, const std::vector<OutputSpec>& outputs, ErrorKind kind,
                           const std::string& what) {
        rec["status"] = "failed";
        rec["error"] = what;
        ojson partial = ojson::object();
        for (const auto& o : outputs) {
            if (!fs::exists(o.path)) continue;
            ojson a;
            a["path"] = fs::relative(o.path, cfg_.out_dir).generic_string();
            a["sha256"] = sha256_file(o.path);
            a["partial"] = true;
            partial[o.label] = std::move(a);
        }
        rec["outputs"] = std::move(partial);
        stages_.push_back(rec);
        auto m = manifest();
        m["failed_stage"] = name;
        const auto text = m.dump(2) + "\n";
        try {
            io::write_file(cfg_.out_dir / "manifest.json", text.data(), text.size());
        } catch (...) {
        }
        throw Error(kind, "stage " + name + ": " + what);
    }

    const Config& cfg_;
    const PipelineOptions& opt_;
    json previous_;
    std::map<std::string, std::string> hashes_;
    ojson inputs_ = ojson::object();
    ojson stages_ = ojson::array();
    ojson artifacts_ = ojson::object();
};

void write_json(const fs::path& path, const ojson& j) {
    const auto text = j.dump(2) + "\n";
    io::write_file(path, text.data(), text.size());
}

}  // namespace

std::string run_pipeline(std::string_view config_json, const fs::path& base_dir, const PipelineOptions& options) {
    const Config cfg = parse_config(config_json, base_dir, options);
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) fail_data("cannot create output directory ", cfg.out_dir.string(), ": ", ec.message());

    Runner run(cfg, options);
    run.add_input("src_vocab", cfg.src_vocab);
    run.add_input("tgt_vocab", cfg.tgt_vocab);
    for (std::size_t i = 0; i < cfg.texts.size(); ++i) run.add_input("text." + std::to_string(i), cfg.texts[i].path);
    run.add_input("src_tokens", cfg.src_tokens);
    run.add_input("tgt_tokens", cfg.tgt_tokens);
    run.add_input("src_states", cfg.src_states);
    run.add_input("tgt_states", cfg.tgt_states);
    run.add_input("truth", cfg.truth);
    run.add_input("semantic_t2s", cfg.semantic_t2s);
    run.add_input("semantic_s2t", cfg.semantic_s2t);
    run.add_input("remap_src_bundle", cfg.remap_bundle);

    const fs::path out = cfg.out_dir;
    const fs::path src_tits = out / "src.tits", tgt_tits = out / "tgt.tits", ingest_json = out / "ingest.json";
    ojson metrics;

    // Both sides always carry the same documents, so conversion output can be
    // scored against the other tokenization directly.
    if (cfg.has_corpus()) {
        json params;
        params["token_budget"] = cfg.token_budget;
        params["weights"] = json::array();
        for (const auto& t : cfg.texts) params["weights"].push_back(t.weight);
        std::vector<std::string> inputs = {"src_vocab", "tgt_vocab"};
        for (std::size_t i = 0; i < cfg.texts.size(); ++i) inputs.push_back("text." + std::to_string(i));
        if (!cfg.src_tokens.empty()) inputs.insert(inputs.end(), {"src_tokens", "tgt_tokens"});
        run.stage("ingest", params, inputs,
                  {{"src_tokens", src_tits}, {"tgt_tokens", tgt_tits}, {"ingest_stats", ingest_json}}, [&] {
                      const Vocab vs = load_vocab(cfg.src_vocab), vt = load_vocab(cfg.tgt_vocab);
                      TokenStream s, t;
                      ojson stats;
                      if (!cfg.texts.empty()) {
                          const GreedyTokenizer ts(vs), tt(vt);
                          std::vector<std::string> docs;
                          s = tokenize_corpora(cfg.texts, ts, cfg.token_budget, cfg.threads, &docs);
                          t = tt.tokenize_documents(docs, cfg.threads);
                          if (s.total_tokens() > 0 && t.total_tokens() > 0) {
                              stats["src_bytes_per_token"] = compression_rate(docs, s).bytes_per_token;
                              stats["tgt_bytes_per_token"] = compression_rate(docs, t).bytes_per_token;
                          }
                      } else {
                          s = read_token_stream(cfg.src_tokens);
                          t = read_token_stream(cfg.tgt_tokens);
                          if (s.vocab_size() != vs.size() || t.vocab_size() != vt.size())
                              fail_data("token stream vocabulary sizes (", s.vocab_size(), ", ", t.vocab_size(),
                                        ") do not match the vocabularies (", vs.size(), ", ", vt.size(), ")");
                          if (s.doc_count() != t.doc_count())
                              fail_data("source and target token streams have ", s.doc_count(), " vs ", t.doc_count(),
                                        " documents");
                          const auto n = budget_docs(s, cfg.token_budget);
                          if (n < s.doc_count()) {
                              s = head_docs(s, n);
                              t = head_docs(t, n);
                          }
                      }
                      if (s.total_tokens() == 0 || t.total_tokens() == 0) fail_data("corpus is empty");
                      write_token_stream(s, src_tits);
                      write_token_stream(t, tgt_tits);
                      stats["documents"] = s.doc_count();
                      stats["src_tokens"] = s.total_tokens();
                      stats["tgt_tokens"] = t.total_tokens();
                      write_json(ingest_json, stats);
                  });
        const auto stats = json::parse(io::read_text_file(ingest_json));
        for (const auto& [k, v] : stats.items()) metrics["ingest"][k] = v;
    }

    const fs::path src_emb = out / "src_emb.tal", tgt_emb = out / "tgt_emb.tal";
    for (const std::string side : {"src", "tgt"}) {
        const fs::path tits = side == "src" ? src_tits : tgt_tits;
        const fs::path emb = side == "src" ? src_emb : tgt_emb;
        if (cfg.glove_mode) {
            const fs::path tcoc = out / (side + ".tcoc");
            json cp{{"window", cfg.cooccur.window}, {"distance_weighting", cfg.cooccur.distance_weighting}};
            run.stage("cooccur." + side, cp, {side + "_tokens"}, {{side + "_cooccur", tcoc}}, [&] {
                write_cooccur(accumulate(read_token_stream(tits), cfg.cooccur), tcoc);
            });
            GloveConfig g = cfg.glove;
            g.seed = derive_seed(cfg.seed, "glove." + side);
            json gp{{"dim", g.dim},         {"epochs", g.epochs},       {"x_max", g.x_max},
                    {"alpha", g.alpha},     {"lr", g.learning_rate},    {"grad_clip", g.grad_clip},
                    {"seed", g.seed},       {"threads", g.threads}};
            run.stage("embed." + side, gp, {side + "_cooccur", side + "_tokens"}, {{side + "_embeddings", emb}}, [&] {
                auto result = train_glove(read_cooccur(tcoc), g);
                result.embeddings.trained_token_count = read_token_stream(tits).total_tokens();
                write_embeddings(result.embeddings, emb);
            });
        } else {
            const fs::path states = side == "src" ? cfg.src_states : cfg.tgt_states;
            std::vector<std::string> inputs = {side + "_states", side + "_vocab"};
            if (cfg.has_corpus()) inputs.push_back(side + "_tokens");
            run.stage("embed." + side, json{{"mode", to_string(cfg.pool)}}, inputs, {{side + "_embeddings", emb}}, [&] {
                const Vocab v = load_vocab(side == "src" ? cfg.src_vocab : cfg.tgt_vocab);
                auto e = build_embeddings(read_hidden_states(states), v, cfg.pool);
                if (cfg.has_corpus()) {
                    const auto stream = read_token_stream(tits);
                    const auto counts = stream.unigram_counts();
                    e.frequency.assign(counts.begin(), counts.end());
                    e.trained_token_count = stream.total_tokens();
                }
                write_embeddings(e, emb);
            });
        }
    }

    const fs::path lex_t2s = out / "lexicon_t2s.tsv", lex_s2t = out / "lexicon_s2t.tsv";
    const fs::path mapping = out / "mapping.tal", align_json = out / "align.json";
    {
        const auto& a = cfg.align;
        json ap{{"seed_dictionary", cfg.shared_seed ? "shared" : "none"},
                {"unsupervised_init", a.unsupervised_init},
                {"induction", to_string(a.induction)},
                {"csls_k", a.csls_k},
                {"self_learning", a.self_learning},
                {"patience", a.patience},
                {"tol", a.tol},
                {"max_iter", a.max_iter},
                {"keep_prob_initial", a.keep_prob_initial},
                {"induction_vocab", a.induction_vocab},
                {"unsupervised_vocab", a.unsupervised_vocab},
                {"seed", a.seed},
                {"similarity", to_string(cfg.lexicon.similarity)},
                {"top_n", cfg.lexicon.top_n}};
        run.stage("align", ap, {"src_embeddings", "tgt_embeddings", "src_vocab", "tgt_vocab"},
                  {{"mapping", mapping}, {"align_stats", align_json}, {"lexicon_t2s", lex_t2s}, {"lexicon_s2t", lex_s2t}},
                  [&] {
                      const Vocab vs = load_vocab(cfg.src_vocab), vt = load_vocab(cfg.tgt_vocab);
                      const Embeddings es = normalize(read_embeddings(src_emb));
                      const Embeddings et = normalize(read_embeddings(tgt_emb));
                      if (es.vocab_size() != vs.size() || et.vocab_size() != vt.size())
                          fail_data("embedding rows do not match vocabulary sizes");
                      const auto shared = shared_tokens(vs, vt);
                      std::vector<TokenPair> seed;
                      if (cfg.shared_seed) seed = shared.pairs;
                      const MappingPair m = self_learn_align(es, et, seed, a);
                      LexiconOptions lo = cfg.lexicon;
                      lo.direction = Direction::TgtToSrc;
                      write_lexicon_tsv(extract_lexicon(es, et, m, shared, lo), lex_t2s);
                      lo.direction = Direction::SrcToTgt;
                      write_lexicon_tsv(extract_lexicon(es, et, m, shared, lo), lex_s2t);

                      TensorBundle b;
                      const auto d = static_cast<std::uint64_t>(m.w_src.rows());
                      auto flat = [&](const RowMatrix& w) {
                          std::vector<float> v(d * d);
                          for (std::uint64_t r = 0; r < d; ++r)
                              for (std::uint64_t c = 0; c < d; ++c) v[r * d + c] = static_cast<float>(w(r, c));
                          return Tensor({d, d}, std::move(v));
                      };
                      b.tensors["w_src"] = flat(m.w_src);
                      b.tensors["w_tgt"] = flat(m.w_tgt);
                      write_bundle(b, mapping);

                      ojson st;
                      st["objective"] = m.objective;
                      st["iterations"] = m.iterations;
                      st["best_iteration"] = m.best_iteration;
                      st["dictionary_size"] = m.dictionary_size;
                      st["reached_max_iter"] = m.reached_max_iter;
                      st["shared_tokens"] = shared.pairs.size();
                      st["overlap_ratio_src"] = shared.overlap_ratio_src;
                      st["overlap_ratio_tgt"] = shared.overlap_ratio_tgt;
                      st["src_coverage"] = es.coverage();
                      st["tgt_coverage"] = et.coverage();
                      write_json(align_json, st);
                  });
        metrics["align"] = json::parse(io::read_text_file(align_json));
        if (metrics["align"].value("reached_max_iter", false)) run.log("warning: alignment stopped at max_iter");
    }

    if (cfg.eval) {
        const fs::path eval_json = out / "eval.json";
        std::vector<OutputSpec> outputs = {{"eval_report", eval_json}};
        if (cfg.write_converted) {
            outputs.push_back({"converted_t2s", out / "converted_t2s.txt"});
            outputs.push_back({"converted_s2t", out / "converted_s2t.txt"});
        }
        std::vector<std::string> inputs = {"src_tokens", "tgt_tokens", "lexicon_t2s", "lexicon_s2t", "src_vocab", "tgt_vocab"};
        for (const char* opt : {"truth", "semantic_t2s", "semantic_s2t"}) {
            const fs::path& p = std::string_view(opt) == "truth"          ? cfg.truth
                                : std::string_view(opt) == "semantic_t2s" ? cfg.semantic_t2s
                                                                         : cfg.semantic_s2t;
            if (!p.empty()) inputs.push_back(opt);
        }
        json ep{{"min_frequency", cfg.min_frequency}, {"write_converted", cfg.write_converted}};
        run.stage("eval", ep, inputs, outputs, [&] {
            const auto s = read_token_stream(src_tits), t = read_token_stream(tgt_tits);
            const auto l_t2s = read_lexicon_tsv(lex_t2s), l_s2t = read_lexicon_tsv(lex_s2t);
            auto reports = evaluate_bidirectional({&s, &t, &l_t2s, &l_s2t}, cfg.threads);
            auto semantic = [&](const fs::path& p, ConversionReport& r) {
                if (p.empty()) return;
                const auto rows = read_document_embeddings(p);
                if (rows.size() != 2 * r.documents)
                    fail_data(p.string(), ": expected ", 2 * r.documents, " rows (A/B per document), got ", rows.size());
                r.semantic_score = semantic_similarity_interleaved(rows);
            };
            semantic(cfg.semantic_t2s, reports[0]);
            semantic(cfg.semantic_s2t, reports[1]);
            ojson ej;
            ej["reports"] = ojson::parse(report_to_json(reports));
            if (!cfg.truth.empty()) {
                const auto truth = read_truth(cfg.truth, l_t2s.query_vocab(), l_t2s.candidate_vocab);
                const auto counts = t.unigram_counts();
                std::vector<TokenId> queries;
                for (TokenId q = 0; q < truth.size(); ++q)
                    if (truth[q] != 0xFFFFFFFFu && counts[q] >= cfg.min_frequency && counts[q] > 0) queries.push_back(q);
                if (queries.empty()) fail_data("truth file selects no query tokens at min_frequency ", cfg.min_frequency);
                ej["top1_accuracy"] = top1_accuracy(l_t2s, truth, queries);
                ej["top1_queries"] = queries.size();
                ej["top1_min_frequency"] = cfg.min_frequency;
            }
            write_json(eval_json, ej);
            if (cfg.write_converted) {
                const Vocab vs = load_vocab(cfg.src_vocab), vt = load_vocab(cfg.tgt_vocab);
                const auto ct = detokenize_stream(convert_corpus(t, l_t2s), vs);
                const auto cs = detokenize_stream(convert_corpus(s, l_s2t), vt);
                auto write_docs = [](const fs::path& p, const std::vector<std::string>& docs) {
                    const auto text = join_documents(docs);
                    io::write_file(p, text.data(), text.size());
                };
                write_docs(out / "converted_t2s.txt", ct);
                write_docs(out / "converted_s2t.txt", cs);
            }
        });
        metrics["eval"] = json::parse(io::read_text_file(eval_json));
    }

    if (!cfg.remap_bundle.empty()) {
        const fs::path init = out / "init.tal";
        json rp{{"strategy", to_string(cfg.remap.kind)}, {"seed", cfg.remap.seed}, {"init_std", cfg.remap.init_std}};
        run.stage("remap", rp, {"remap_src_bundle", "lexicon_t2s", "tgt_vocab"}, {{"init_bundle", init}}, [&] {
            const Vocab vt = load_vocab(cfg.tgt_vocab);
            const auto lex = read_lexicon_tsv(lex_t2s);
            write_bundle(remap_parameters(read_bundle(cfg.remap_bundle), lex, cfg.remap, vt.size(), cfg.threads), init);
        });
        metrics["remap"]["identical_to_source"] = run.hash("init_bundle") == run.hash("remap_src_bundle");
    }

    if (cfg.plan) {
        const fs::path plan = out / "plan.json", distill = out / "distill.json";
        std::vector<OutputSpec> outputs = {{"plan", plan}};
        if (cfg.distill) outputs.push_back({"distill", distill});
        json pp{{"steps", cfg.plan_steps},   {"embed_frac", cfg.plan_embed_frac},     {"lr", cfg.plan_lr},
                {"batch", cfg.plan_batch_tokens}, {"schedule", cfg.plan_lr_schedule}, {"distill", cfg.distill}};
        if (cfg.distill) {
            pp["teacher"] = cfg.teacher;
            pp["student"] = cfg.student;
            pp["overrides"] = json{{"kd_weight", cfg.distill_overrides.kd_weight.value_or(-1.0)},
                                   {"fraction", cfg.distill_overrides.task_sample_fraction.value_or(-1.0)},
                                   {"temperature", cfg.distill_overrides.temperature.value_or(-1.0)}};
        }
        run.stage("plan", pp, {}, outputs, [&] {
            const auto p = emit_two_stage_plan(cfg.plan_steps, cfg.plan_embed_frac, cfg.plan_lr, cfg.plan_batch_tokens,
                                               cfg.plan_lr_schedule);
            const auto text = plan_to_json(p);
            io::write_file(plan, text.data(), text.size());
            if (cfg.distill) {
                const auto d = distill_to_json(emit_distill_config(cfg.teacher, cfg.student, cfg.distill_overrides));
                io::write_file(distill, d.data(), d.size());
            }
        });
    }
    return run.finish(metrics);
}

std::string run_pipeline_file(const fs::path& config_path, const PipelineOptions& options) {
    const auto text = io::read_text_file(config_path);
    return run_pipeline(text, fs::absolute(config_path).parent_path(), options);
}

}  // namespace tokalign
