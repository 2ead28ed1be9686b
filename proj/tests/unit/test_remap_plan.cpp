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

#include <chrono>
#include <cstring>

#include <doctest.h>

#include "support.hpp"
#include "tokalign/binary_io.hpp"
#include "tokalign/plan.hpp"
#include "tokalign/remap.hpp"

using namespace tokalign;
using namespace tokalign::testing;

namespace {

TensorBundle bundle(std::uint64_t rows, std::uint64_t dim, std::uint64_t seed, bool head = true) {
    TensorBundle b;
    SplitMix g(seed);
    std::vector<float> e(rows * dim), h(rows * dim);
    for (auto& x : e) x = static_cast<float>(g.normal() + 0.5);
    for (auto& x : h) x = static_cast<float>(g.normal());
    b.tensors["embedding"] = Tensor({rows, dim}, std::move(e));
    if (head) b.tensors["lm_head"] = Tensor({rows, dim}, std::move(h));
    b.tensors["layers.0.norm"] = Tensor({dim}, std::vector<float>(dim, 1.0f));
    b.metadata["arch"] = "toy";
    return b;
}

// Target token q maps to source row map[q]; entries with direct[q] are shared tokens.
AlignmentLexicon lexicon(const std::vector<TokenId>& map, const std::vector<bool>& direct, std::size_t src_vocab) {
    AlignmentLexicon lex;
    lex.direction = Direction::TgtToSrc;
    lex.candidate_vocab = src_vocab;
    for (std::size_t q = 0; q < map.size(); ++q) lex.entries.push_back({{{map[q], 0.5}}, direct[q], false});
    return lex;
}

bool same_row(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

}  // namespace

TEST_SUITE("remap") {
    TEST_CASE("strategy names") {
        for (auto k : {InitKind::TokAlign, InitKind::RandomInit, InitKind::RandomPermutation, InitKind::Multivariate,
                       InitKind::Mean})
            CHECK(parse_init_kind(to_string(k)) == k);
        CHECK(error_kind([] { parse_init_kind("zeros"); }) == 1);
    }

    TEST_CASE("identical vocabularies reproduce the bundle for every strategy") {
        const auto b = bundle(50, 8, 101);
        for (auto k : {InitKind::TokAlign, InitKind::RandomInit, InitKind::RandomPermutation, InitKind::Multivariate,
                       InitKind::Mean}) {
            InitStrategy s;
            s.kind = k;
            CHECK(encode_bundle(remap_parameters(b, identity_lexicon(50, Direction::TgtToSrc), s, 50)) ==
                  encode_bundle(b));
        }
    }

    TEST_CASE("tokalign with a permutation lexicon permutes rows exactly") {
        const auto b = bundle(64, 6, 102);
        const auto p = random_permutation(64, 103);
        const auto out = remap_parameters(b, lexicon(p, std::vector<bool>(64, false), 64), {}, 64);
        for (TokenId q = 0; q < 64; ++q) {
            CHECK(same_row(out.tensors.at("embedding").row(q), b.tensors.at("embedding").row(p[q])));
            CHECK(same_row(out.tensors.at("lm_head").row(q), b.tensors.at("lm_head").row(p[q])));
        }
        CHECK(out.tensors.at("layers.0.norm") == b.tensors.at("layers.0.norm"));
        CHECK(out.metadata.at("arch") == "toy");
    }

    TEST_CASE("output vocabulary governs shapes (growth and shrinkage)") {
        const auto b = bundle(40, 4, 104);
        for (std::size_t tv : {25u, 90u}) {
            std::vector<TokenId> map(tv);
            for (std::size_t q = 0; q < tv; ++q) map[q] = static_cast<TokenId>(q % 40);
            InitStrategy s;
            s.kind = InitKind::Mean;
            const auto out = remap_parameters(b, lexicon(map, std::vector<bool>(tv, false), 40), s, tv);
            CHECK(out.tensors.at("embedding").shape == std::vector<std::uint64_t>{tv, 4});
            CHECK(out.tensors.at("lm_head").shape == std::vector<std::uint64_t>{tv, 4});
        }
    }

    TEST_CASE("baseline strategies") {
        const std::size_t sv = 300, tv = 2000, d = 8;
        const auto b = bundle(sv, d, 105);
        std::vector<TokenId> map(tv);
        std::vector<bool> direct(tv, false);
        for (std::size_t q = 0; q < tv; ++q) map[q] = static_cast<TokenId>(q % sv);
        for (std::size_t q = 0; q < 50; ++q) direct[q] = true;
        const auto lex = lexicon(map, direct, sv);
        const auto& src = b.tensors.at("embedding");

        std::vector<double> mean(d, 0.0), var(d, 0.0);
        for (std::size_t r = 0; r < sv; ++r)
            for (std::size_t c = 0; c < d; ++c) mean[c] += src.row(r)[c];
        for (auto& m : mean) m /= sv;
        for (std::size_t r = 0; r < sv; ++r)
            for (std::size_t c = 0; c < d; ++c) var[c] += (src.row(r)[c] - mean[c]) * (src.row(r)[c] - mean[c]);
        for (auto& v : var) v /= sv - 1;

        for (auto kind : {InitKind::RandomInit, InitKind::RandomPermutation, InitKind::Multivariate, InitKind::Mean}) {
            CAPTURE(to_string(kind));
            InitStrategy s;
            s.kind = kind;
            const auto out = remap_parameters(b, lex, s, tv, 3);
            CHECK(encode_bundle(out) == encode_bundle(remap_parameters(b, lex, s, tv, 1)));
            const auto& e = out.tensors.at("embedding");
            for (std::size_t q = 0; q < 50; ++q) CHECK(same_row(e.row(q), src.row(map[q])));
            CHECK(out.metadata.at("remap.strategy") == std::string(to_string(kind)));

            const std::size_t n = tv - 50;
            std::vector<double> got(d, 0.0);
            for (std::size_t q = 50; q < tv; ++q)
                for (std::size_t c = 0; c < d; ++c) got[c] += e.row(q)[c];
            for (auto& g : got) g /= static_cast<double>(n);
            switch (kind) {
                case InitKind::Mean:
                    for (std::size_t q = 50; q < tv; ++q)
                        for (std::size_t c = 0; c < d; ++c) CHECK(std::abs(e.row(q)[c] - mean[c]) < 1e-7);
                    break;
                case InitKind::Multivariate:
                    for (std::size_t c = 0; c < d; ++c)
                        CHECK(std::abs(got[c] - mean[c]) < 3 * std::sqrt(var[c] / static_cast<double>(n)));
                    CHECK(out.metadata.at("remap.covariance") == "full");
                    break;
                case InitKind::RandomPermutation:
                    for (std::size_t q = 50; q < tv; ++q) {
                        bool found = false;
                        for (std::size_t r = 0; r < sv && !found; ++r) found = same_row(e.row(q), src.row(r));
                        CHECK(found);
                    }
                    break;
                case InitKind::RandomInit: {
                    double ss = 0;
                    for (std::size_t q = 50; q < tv; ++q)
                        for (std::size_t c = 0; c < d; ++c) ss += double(e.row(q)[c]) * e.row(q)[c];
                    CHECK(std::sqrt(ss / static_cast<double>(n * d)) == doctest::Approx(0.02).epsilon(0.05));
                    break;
                }
                default: break;
            }
            s.seed = 8;
            if (kind != InitKind::Mean) CHECK_FALSE(encode_bundle(remap_parameters(b, lex, s, tv)) == encode_bundle(out));
        }
    }

    TEST_CASE("multivariate falls back to diagonal on wide tensors") {
        const auto b = bundle(30, 12, 106, false);
        std::vector<TokenId> map(40, 0);
        InitStrategy s;
        s.kind = InitKind::Multivariate;
        s.full_covariance_max_dim = 8;
        const auto out = remap_parameters(b, lexicon(map, std::vector<bool>(40, false), 30), s, 40);
        CHECK(out.metadata.at("remap.covariance") == "diagonal");
        CHECK_FALSE(out.has("lm_head"));
    }

    TEST_CASE("remap errors") {
        const auto b = bundle(10, 4, 107);
        auto lex = identity_lexicon(10, Direction::SrcToTgt);
        CHECK(error_kind([&] { remap_parameters(b, lex, {}, 10); }) == 1);
        CHECK(error_kind([&] { remap_parameters(b, identity_lexicon(10, Direction::TgtToSrc), {}, 12); }) == 2);
        CHECK(error_kind([&] { remap_parameters(bundle(9, 4, 108), identity_lexicon(10, Direction::TgtToSrc), {}, 10); }) == 2);
        TensorBundle no_emb;
        no_emb.tensors["lm_head"] = b.tensors.at("lm_head");
        CHECK(error_kind([&] { remap_parameters(no_emb, identity_lexicon(10, Direction::TgtToSrc), {}, 10); }) == 2);
    }

    TEST_CASE("TAL container") {
        const auto b = bundle(20, 3, 109);
        const auto bytes = encode_bundle(b);
        CHECK(decode_bundle(bytes) == b);
        CHECK(encode_bundle(decode_bundle(bytes)) == bytes);
        CHECK(std::memcmp(bytes.data(), "TAL1", 4) == 0);
        auto cut = bytes;
        cut.resize(cut.size() - 4);
        CHECK(error_kind([&] { decode_bundle(cut); }) == 2);
        auto magic = bytes;
        magic[3] = '2';
        CHECK(error_kind([&] { decode_bundle(magic); }) == 2);
    }

    TEST_CASE("256k x 64 bundle writes and reads in under 5 s") {
        const auto dir = scratch_dir("tal_big");
        TensorBundle b;
        std::vector<float> v(256'000ull * 64);
        SplitMix g(110);
        for (auto& x : v) x = static_cast<float>(g.uniform());
        b.tensors["embedding"] = Tensor({256'000, 64}, std::move(v));
        const auto t0 = std::chrono::steady_clock::now();
        write_bundle(b, dir / "big.tal");
        const auto back = read_bundle(dir / "big.tal");
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(back == b);
        CHECK(secs < 5.0);
        std::filesystem::remove_all(dir);
    }
}

TEST_SUITE("plan") {
    TEST_CASE("default plan matches the golden file") {
        const auto p = emit_two_stage_plan();
        REQUIRE(p.stages.size() == 2);
        CHECK(p.stages[0].name == "embedding_warmup");
        CHECK(p.stages[0].start == 0);
        CHECK(p.stages[0].end == 500);
        CHECK(p.stages[0].parameter_groups == std::vector<std::string>{"embedding", "lm_head"});
        CHECK(p.stages[1].end == 1000);
        CHECK(plan_to_json(p) == io::read_text_file(golden_dir() / "plan_two_stage_default.json"));
        CHECK(plan_from_json(io::read_text_file(golden_dir() / "plan_two_stage_default.json")) == p);
    }

    TEST_CASE("boundary placement") {
        CHECK(emit_two_stage_plan(1000, 0.6).stages[0].end == 600);
        const auto full = emit_two_stage_plan(1000, 0.0);
        REQUIRE(full.stages.size() == 1);
        CHECK(full.stages[0].name == "full_tuning");
        CHECK(full.stages[0].parameter_groups.size() == 3);
        const auto emb_only = emit_two_stage_plan(10, 1.0);
        REQUIRE(emb_only.stages.size() == 1);
        CHECK(emb_only.stages[0].end == 10);
        for (std::uint64_t steps : {2u, 3u, 7u, 1001u})
            for (double f : {0.0, 0.25, 0.5, 0.999, 1.0}) {
                const auto p = emit_two_stage_plan(steps, f);
                CHECK(p.stages.front().start == 0);
                CHECK(p.stages.back().end == steps);
                for (std::size_t i = 1; i < p.stages.size(); ++i) CHECK(p.stages[i].start == p.stages[i - 1].end);
                CHECK(plan_from_json(plan_to_json(p)) == p);
            }
        CHECK(error_kind([] { emit_two_stage_plan(1000, 1.5); }) == 1);
        CHECK(error_kind([] { emit_two_stage_plan(1, 0.5); }) == 1);
    }

    TEST_CASE("distillation config") {
        const auto d = emit_distill_config("teacher-model", "student-model");
        CHECK(d.task_sample_fraction == 0.15);
        CHECK(d.kd_weight == 1.0);
        CHECK(d.temperature == 1.0);
        CHECK(distill_to_json(d) == io::read_text_file(golden_dir() / "distill_default.json"));
        CHECK(distill_from_json(distill_to_json(d)) == d);
        DistillOverrides o;
        o.task_sample_fraction = 0.0;
        CHECK(emit_distill_config("a", "b", o).task_sample_fraction == 0.0);
        o.task_sample_fraction = -0.1;
        CHECK(error_kind([&] { emit_distill_config("a", "b", o); }) == 1);
        DistillOverrides neg;
        neg.kd_weight = -1;
        CHECK(error_kind([&] { emit_distill_config("a", "b", neg); }) == 1);
        CHECK(error_kind([] { distill_from_json("{\"kind\": \"other\"}"); }) == 2);
    }
}
