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

#include <doctest.h>

#include "support.hpp"
#include "tokalign/glove.hpp"

using namespace tokalign;
using namespace tokalign::testing;

namespace {

void check_against_naive(const TokenStream& s, std::uint32_t window, bool weighting) {
    CooccurOptions o;
    o.window = window;
    o.distance_weighting = weighting;
    const auto m = accumulate(s, o);
    const auto naive = naive_cooccur(s, window, weighting);
    std::size_t cells = 0;
    for (const auto& e : m.entries()) cells += e.i == e.j ? 1 : 2;
    CHECK(cells == naive.size());
    for (const auto& [ij, w] : naive) {
        const double got = m.weight(ij.first, ij.second);
        if (weighting)
            CHECK(got == doctest::Approx(w).epsilon(1e-12));
        else
            CHECK(got == w);
    }
}

}  // namespace

TEST_SUITE("cooccur") {
    TEST_CASE("hand examples") {
        TokenStream a(2);
        a.add_document(std::vector<TokenId>{0, 1});
        CooccurOptions o;
        o.window = 1;
        const auto m = accumulate(a, o);
        CHECK(m.weight(0, 1) == 1.0);
        CHECK(m.weight(1, 0) == 1.0);
        CHECK(m.weight(0, 0) == 0.0);

        TokenStream b(3);
        b.add_document(std::vector<TokenId>{0, 1, 2});
        o.window = 2;
        const auto m2 = accumulate(b, o);
        CHECK(m2.weight(0, 2) == 0.5);
        CHECK(m2.weight(0, 1) == 1.0);
        CHECK(m2.weight(1, 2) == 1.0);
        CHECK(m2.total_weight() == 5.0);
    }

    TEST_CASE("windows stop at document boundaries") {
        TokenStream s(2);
        s.add_document(std::vector<TokenId>{0});
        s.add_document(std::vector<TokenId>{1});
        CHECK(accumulate(s, {}).empty());
    }

    TEST_CASE("matches the double-loop oracle") {
        const auto s = random_stream(60, 10'000, 21);
        check_against_naive(s, 10, true);
        check_against_naive(s, 10, false);
        check_against_naive(s, 3, true);
        check_against_naive(zipf_bigram_stream(40, 4000, 22, 200), 7, true);
    }

    TEST_CASE("merge identity, commutativity and associativity") {
        TokenStream s1 = random_stream(30, 2000, 23), s2 = random_stream(30, 2000, 24), s3 = random_stream(30, 2000, 25);
        const auto a = accumulate(s1, {}), b = accumulate(s2, {}), c = accumulate(s3, {});
        const CooccurMatrix empty(30, CooccurMatrix::kDefaultWindow);
        CHECK(encode_cooccur(merge(a, empty)) == encode_cooccur(a));
        CHECK(encode_cooccur(merge(a, b)) == encode_cooccur(merge(b, a)));
        CHECK(encode_cooccur(merge(merge(a, b), c)) == encode_cooccur(merge(a, merge(b, c))));
        CHECK(merge(a, b).total_units() == a.total_units() + b.total_units());
        CHECK(error_kind([&] { merge(a, CooccurMatrix(31, CooccurMatrix::kDefaultWindow)); }) == 1);
        CHECK(error_kind([&] { merge(a, CooccurMatrix(30, 4)); }) == 1);
    }

    TEST_CASE("shard and thread counts do not change the bytes") {
        const auto s = random_stream(120, 20'000, 26);
        const auto ref = encode_cooccur(accumulate(s, {}));
        for (unsigned shards : {2u, 3u, 5u, 16u})
            for (unsigned threads : {1u, 4u}) {
                CooccurOptions o;
                o.shards = shards;
                o.threads = threads;
                CHECK(encode_cooccur(accumulate(s, o)) == ref);
            }
    }

    TEST_CASE("TCOC validation") {
        const auto m = accumulate(random_stream(20, 500, 27), {});
        const auto bytes = encode_cooccur(m);
        CHECK(encode_cooccur(decode_cooccur(bytes)) == bytes);
        auto bad = bytes;
        bad[0] = 'Q';
        CHECK(error_kind([&] { decode_cooccur(bad); }) == 2);
        auto cut = bytes;
        cut.resize(cut.size() - 1);
        CHECK(error_kind([&] { decode_cooccur(cut); }) == 2);
        CHECK(error_kind([] { CooccurMatrix::from_entries(3, 2, {{1, 0, 4}}); }) == 2);
        CHECK(error_kind([] { CooccurMatrix::from_entries(3, 2, {{0, 3, 4}}); }) == 2);
        CHECK(error_kind([] { CooccurMatrix(3, 0); }) == 1);
    }
}

TEST_SUITE("glove") {
    TEST_CASE("zero matrix has zero loss and gradient") {
        const CooccurMatrix m(5, 3);
        GloveConfig cfg;
        cfg.dim = 4;
        const auto p = init_glove_params(5, 4, 1);
        const auto lg = glove_loss_and_grad(m, p, cfg);
        CHECK(lg.loss == 0.0);
        CHECK(lg.grad.w.isZero(0.0));
        CHECK(lg.grad.b.isZero(0.0));
        CHECK(error_kind([&] { train_glove(m, cfg); }) == 2);
    }

    TEST_CASE("weighting function") {
        GloveConfig cfg;
        CHECK(glove_weight(100, cfg) == 1.0);
        CHECK(glove_weight(1e6, cfg) == 1.0);
        CHECK(glove_weight(50, cfg) == doctest::Approx(std::pow(0.5, 0.75)));
    }

    TEST_CASE("objective is symmetric in the two factor sets") {
        const auto m = accumulate(random_stream(8, 300, 31), {});
        GloveConfig cfg;
        cfg.dim = 3;
        auto p = init_glove_params(8, 3, 32);
        p.w = gaussian_matrix(8, 3, 33);
        p.w_ctx = gaussian_matrix(8, 3, 34);
        p.b = gaussian_matrix(8, 1, 35).col(0);
        p.b_ctx = gaussian_matrix(8, 1, 36).col(0);
        GloveParams q = p;
        std::swap(q.w, q.w_ctx);
        std::swap(q.b, q.b_ctx);
        CHECK(glove_loss_and_grad(m, p, cfg).loss == doctest::Approx(glove_loss_and_grad(m, q, cfg).loss).epsilon(1e-12));
    }

    TEST_CASE("fitted two-token system is stationary") {
        // X_01 = e: one unit at window 1
        std::vector<CooccurEntry> e = {{0, 1, 1}};
        auto m = CooccurMatrix::from_entries(2, 1, e);
        GloveConfig cfg;
        cfg.dim = 2;
        cfg.epochs = 4000;
        const auto res = train_glove(m, cfg);
        const auto lg = glove_loss_and_grad(m, res.params, cfg);
        CHECK(lg.loss < 1e-6);
        const double gnorm = std::sqrt(lg.grad.w.squaredNorm() + lg.grad.w_ctx.squaredNorm() +
                                       lg.grad.b.squaredNorm() + lg.grad.b_ctx.squaredNorm());
        CHECK(gnorm < 1e-6);
    }

    TEST_CASE("single-worker training is bit-reproducible") {
        const auto m = accumulate(zipf_bigram_stream(100, 20'000, 37, 500), {});
        GloveConfig cfg;
        cfg.dim = 16;
        cfg.epochs = 3;
        const auto a = train_glove(m, cfg), b = train_glove(m, cfg);
        CHECK(a.embeddings.matrix == b.embeddings.matrix);
        CHECK(a.epoch_loss == b.epoch_loss);
        cfg.seed = 8;
        CHECK_FALSE(train_glove(m, cfg).embeddings.matrix == a.embeddings.matrix);
    }

    TEST_CASE("Zipf corpus loss halves within 15 epochs") {
        const auto m = accumulate(zipf_bigram_stream(500, 300'000, 38), {});
        GloveConfig cfg;
        cfg.dim = 32;
        cfg.epochs = 15;
        const auto r = train_glove(m, cfg);
        REQUIRE(r.epoch_loss.size() == 15);
        CHECK(r.epoch_loss.back() <= 0.5 * r.epoch_loss.front());
        for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1]);
        CHECK(r.embeddings.matrix.allFinite());
    }

    TEST_CASE("parallel mode stays loss-equivalent") {
        const auto m = accumulate(zipf_bigram_stream(200, 100'000, 39), {});
        GloveConfig cfg;
        cfg.dim = 16;
        cfg.epochs = 8;
        const auto serial = train_glove(m, cfg);
        cfg.threads = 4;
        const auto par = train_glove(m, cfg);
        CHECK(par.epoch_loss.back() == doctest::Approx(serial.epoch_loss.back()).epsilon(0.1));
    }

    TEST_CASE("uncovered tokens are flagged") {
        TokenStream s(5);
        s.add_document(std::vector<TokenId>{0, 1, 2, 0, 1});
        GloveConfig cfg;
        cfg.dim = 4;
        cfg.epochs = 2;
        const auto r = train_glove(accumulate(s, {}), cfg);
        CHECK(r.embeddings.covered == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
        CHECK(r.embeddings.coverage() == doctest::Approx(0.6));
    }

    TEST_CASE("invalid configs are usage errors") {
        const auto m = CooccurMatrix::from_entries(2, 1, {{0, 1, 1}});
        GloveConfig cfg;
        cfg.alpha = 0;
        CHECK(error_kind([&] { train_glove(m, cfg); }) == 1);
        cfg = {};
        cfg.epochs = 0;
        CHECK(error_kind([&] { train_glove(m, cfg); }) == 1);
        cfg = {};
        cfg.x_max = -1;
        CHECK(error_kind([&] { train_glove(m, cfg); }) == 1);
    }
}
