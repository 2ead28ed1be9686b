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

using namespace tokalign;
using namespace tokalign::testing;

namespace {

double orthogonality_error(const RowMatrix& w) {
    return (w.transpose() * w - RowMatrix::Identity(w.cols(), w.cols())).norm();
}

}  // namespace

TEST_SUITE("align") {
    TEST_CASE("normalize: unit rows and centered columns") {
        const auto e = Embeddings::from_matrix(gaussian_matrix(50, 8, 51) + RowMatrix::Constant(50, 8, 3.0));
        const auto n = normalize(e);
        for (Eigen::Index r = 0; r < 50; ++r) CHECK(n.matrix.row(r).norm() == doctest::Approx(1.0).epsilon(1e-9));
        // step 2 recomputed directly
        RowMatrix u = e.matrix;
        for (Eigen::Index r = 0; r < 50; ++r) u.row(r).normalize();
        const Eigen::RowVectorXd mean = u.colwise().mean();
        u.rowwise() -= mean;
        CHECK(u.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);
        for (Eigen::Index r = 0; r < 50; ++r) CHECK((u.row(r).normalized() - n.matrix.row(r)).norm() < 1e-12);

        RowMatrix anti(2, 2);
        anti << 1, 0, -1, 0;
        const auto na = normalize(Embeddings::from_matrix(anti));
        CHECK(na.matrix == anti);
    }

    TEST_CASE("normalize rejects covered zero rows, keeps uncovered ones") {
        RowMatrix m = gaussian_matrix(5, 3, 52);
        m.row(3).setZero();
        auto e = Embeddings::from_matrix(m);
        try {
            normalize(e);
            FAIL("expected an error");
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::Data);
            CHECK(std::string(err.what()).find(": 3") != std::string::npos);
        }
        e.covered[3] = 0;
        CHECK(normalize(e).matrix.row(3).isZero(0.0));
    }

    TEST_CASE("CSLS matches the brute-force oracle") {
        const RowMatrix q = gaussian_matrix(50, 8, 53), c = gaussian_matrix(40, 8, 54);
        for (int k : {1, 5, 10, 40}) {
            const RowMatrix m = csls_matrix(q, c, k, 3);
            for (Eigen::Index i = 0; i < 50; i += 7) {
                const auto row = csls_score(q.row(i).transpose(), c, q, k);
                for (Eigen::Index j = 0; j < 40; ++j) {
                    const double want = brute_csls(q, c, i, j, k);
                    CHECK(std::abs(m(i, j) - want) < 1e-10);
                    CHECK(std::abs(row[j] - want) < 1e-10);
                }
            }
        }
    }

    TEST_CASE("CSLS degenerate case and k range") {
        RowMatrix one(1, 2);
        one << 1, 0;
        CHECK(csls_score(one.row(0).transpose(), one, one, 1)[0] == 0.0);
        const RowMatrix c = gaussian_matrix(5, 3, 55);
        CHECK(error_kind([&] { csls_matrix(c, c, 0); }) == 1);
        CHECK(error_kind([&] { csls_matrix(c, c, 6); }) == 1);
    }

    TEST_CASE("CSLS and cosine agree on a symmetric two-point system") {
        RowMatrix q(2, 2), c(2, 2);
        q << 1, 0, 0, 1;
        c << 0.9, 0.1, 0.2, 0.8;
        const RowMatrix csls = csls_matrix(q, c, 2);
        RowMatrix cos(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) cos(i, j) = cosine(q.row(i), c.row(j));
        for (int i = 0; i < 2; ++i) {
            Eigen::Index a, b;
            csls.row(i).maxCoeff(&a);
            cos.row(i).maxCoeff(&b);
            CHECK(a == b);
        }
    }

    TEST_CASE("procrustes: identity, recovery and dominance") {
        const RowMatrix x = gaussian_matrix(20, 3, 56);
        CHECK((procrustes(x, x) - RowMatrix::Identity(3, 3)).norm() < 1e-12);

        const RowMatrix big = gaussian_matrix(100, 10, 57);
        const RowMatrix r = random_orthogonal(10, 58);
        const RowMatrix y = big * r.transpose();
        const RowMatrix w = procrustes(big, y);
        CHECK((w - r).norm() < 1e-6);
        CHECK(orthogonality_error(w) < 1e-10);

        const RowMatrix noisy = y + 0.3 * gaussian_matrix(100, 10, 59);
        const RowMatrix wn = procrustes(big, noisy);
        const double best = (noisy * wn - big).norm();
        for (int t = 0; t < 100; ++t) CHECK(best <= (noisy * random_orthogonal(10, 1000 + t) - big).norm());
        CHECK(error_kind([] { procrustes(RowMatrix::Zero(4, 2), RowMatrix::Zero(4, 2)); }) == 2);
    }

    TEST_CASE("self-learning on identical spaces") {
        const auto e = normalize(Embeddings::from_matrix(gaussian_matrix(80, 12, 60)));
        std::vector<TokenPair> seed;
        for (TokenId i = 0; i < 80; ++i) seed.push_back({i, i});
        AlignConfig cfg;
        cfg.patience = 3;
        const auto m = self_learn_align(e, e, seed, cfg);
        CHECK((m.w_src.cwiseAbs() - RowMatrix::Identity(12, 12)).norm() < 1e-9);
        CHECK(m.w_tgt == RowMatrix::Identity(12, 12));
        CHECK(m.objective == doctest::Approx(1.0));
        CHECK(m.best_iteration == 1);
    }

    TEST_CASE("self-learning recovers rotation plus permutation") {
        const Eigen::Index n = 400, d = 24;
        const RowMatrix x = gaussian_matrix(n, d, 61);
        const RowMatrix r = random_orthogonal(d, 62);
        const auto perm = random_permutation(n, 63);
        RowMatrix z(n, d);
        const RowMatrix xr = x * r;
        for (Eigen::Index i = 0; i < n; ++i) z.row(perm[i]) = xr.row(i);
        const auto es = normalize(Embeddings::from_matrix(x)), et = normalize(Embeddings::from_matrix(z));
        std::vector<TokenPair> seed;
        for (TokenId i = 0; i < 25; ++i) seed.push_back({i, perm[i]});
        const auto m = self_learn_align(es, et, seed, {});
        CHECK(orthogonality_error(m.w_src) < 1e-6);
        LexiconOptions lo;
        lo.direction = Direction::SrcToTgt;
        lo.top_n = 1;
        const auto lex = extract_lexicon(es, et, m, {}, lo);
        std::size_t hit = 0;
        for (TokenId i = 0; i < n; ++i) hit += lex.top1(i) == perm[i];
        CHECK(static_cast<double>(hit) >= 0.99 * n);
    }

    TEST_CASE("self-learning is deterministic and beats the one-shot mapping") {
        const Eigen::Index n = 300, d = 16;
        const RowMatrix x = gaussian_matrix(n, d, 64);
        const RowMatrix z = x * random_orthogonal(d, 65) + 0.05 * gaussian_matrix(n, d, 66);
        const auto es = normalize(Embeddings::from_matrix(x)), et = normalize(Embeddings::from_matrix(z));
        std::vector<TokenPair> seed;
        for (TokenId i = 0; i < 12; ++i) seed.push_back({i, i});
        AlignConfig one_shot;
        one_shot.self_learning = false;
        const auto base = self_learn_align(es, et, seed, one_shot);
        const auto a = self_learn_align(es, et, seed, {});
        const auto b = self_learn_align(es, et, seed, {});
        CHECK(a.w_src == b.w_src);
        CHECK(a.objective > base.objective);
        CHECK(mapping_objective(es, et, a, {}) == doctest::Approx(a.objective));
    }

    TEST_CASE("self-learning preconditions") {
        const auto e = normalize(Embeddings::from_matrix(gaussian_matrix(10, 4, 67)));
        CHECK(error_kind([&] { self_learn_align(e, e, {}, {}); }) == 1);
        AlignConfig bad;
        bad.keep_prob_initial = 0;
        const std::vector<TokenPair> seed = {{0, 0}};
        CHECK(error_kind([&] { self_learn_align(e, e, seed, bad); }) == 1);
        const auto other = normalize(Embeddings::from_matrix(gaussian_matrix(10, 5, 68)));
        CHECK(error_kind([&] { self_learn_align(e, other, seed, {}); }) == 1);
    }

    TEST_CASE("max_iter returns best-so-far with a warning flag") {
        const auto es = normalize(Embeddings::from_matrix(gaussian_matrix(200, 8, 69)));
        const auto et = normalize(Embeddings::from_matrix(gaussian_matrix(200, 8, 70)));
        AlignConfig cfg;
        cfg.max_iter = 5;
        const std::vector<TokenPair> seed = {{0, 0}, {1, 1}, {2, 2}};
        const auto m = self_learn_align(es, et, seed, cfg);
        CHECK(m.reached_max_iter);
        CHECK(orthogonality_error(m.w_src) < 1e-6);
    }

    TEST_CASE("CSLS reduces hubness") {
        // Every query shares direction u; candidate 0 is u itself.
        const Eigen::Index n = 200, d = 10;
        const RowMatrix u = RowMatrix::Constant(1, d, 1.0);
        RowMatrix q = gaussian_matrix(n, d, 71);
        q.rowwise() += u.row(0);
        RowMatrix c = q + 1.6 * gaussian_matrix(n, d, 72);
        c.row(0) = u;
        const auto eq = Embeddings::from_matrix(q), ec = Embeddings::from_matrix(c);
        MappingPair id;
        id.w_src = RowMatrix::Identity(d, d);
        id.w_tgt = RowMatrix::Identity(d, d);
        LexiconOptions lo;
        lo.direction = Direction::TgtToSrc;  // queries are target rows
        lo.top_n = 1;
        lo.similarity = Similarity::Cosine;
        const auto cos = extract_lexicon(ec, eq, id, {}, lo);
        lo.similarity = Similarity::Csls;
        const auto csls = extract_lexicon(ec, eq, id, {}, lo);
        std::size_t hub_cos = 0, hub_csls = 0;
        for (TokenId t = 0; t < n; ++t) {
            hub_cos += cos.top1(t) == 0;
            hub_csls += csls.top1(t) == 0;
        }
        CHECK(hub_cos >= 10);
        CHECK(hub_csls < hub_cos / 2);
    }

    TEST_CASE("lexicon invariants") {
        std::vector<std::string> st, tt;
        for (int i = 0; i < 40; ++i) st.push_back("s" + std::to_string(i));
        for (int i = 0; i < 30; ++i) tt.push_back(i % 3 ? "t" + std::to_string(i) : "s" + std::to_string(i));
        const auto vs = Vocab::from_tokens(st), vt = Vocab::from_tokens(tt);
        const auto shared = shared_tokens(vs, vt);
        auto es = Embeddings::from_matrix(gaussian_matrix(40, 6, 74));
        auto et = Embeddings::from_matrix(gaussian_matrix(30, 6, 75));
        et.covered[4] = 0;
        es = normalize(es);
        et = normalize(et);
        MappingPair m;
        m.w_src = random_orthogonal(6, 76);
        m.w_tgt = RowMatrix::Identity(6, 6);
        LexiconOptions lo;
        lo.top_n = 4;
        const auto lex = extract_lexicon(es, et, m, shared, lo);
        CHECK(lex.query_vocab() == 30);
        CHECK(lex.candidate_vocab == 40);
        CHECK(lex.direct_count() == shared.pairs.size());
        for (TokenId q = 0; q < 30; ++q) {
            const auto& e = lex.entries[q];
            REQUIRE_FALSE(e.candidates.empty());
            for (std::size_t r = 1; r < e.candidates.size(); ++r) CHECK(e.candidates[r - 1].score >= e.candidates[r].score);
            if (e.direct) CHECK(vs.token(e.candidates[0].id) == vt.token(q));
            else CHECK(e.candidates.size() == 4);
        }
        CHECK(lex.entries[4].low_confidence);
        CHECK(extract_lexicon(es, et, m, shared, lo) == lex);
        lo.top_n = 0;
        CHECK(error_kind([&] { extract_lexicon(es, et, m, shared, lo); }) == 1);

        const auto ident = identity_lexicon(7, Direction::TgtToSrc);
        for (TokenId q = 0; q < 7; ++q) {
            CHECK(ident.entries[q].direct);
            CHECK(ident.top1(q) == q);
        }
    }

    TEST_CASE("lexicon TSV and JSON round trips") {
        const auto es = normalize(Embeddings::from_matrix(gaussian_matrix(25, 4, 77)));
        const auto et = normalize(Embeddings::from_matrix(gaussian_matrix(20, 4, 78)));
        MappingPair m;
        m.w_src = RowMatrix::Identity(4, 4);
        m.w_tgt = RowMatrix::Identity(4, 4);
        SharedTokenSet shared;
        shared.pairs = {{3, 5}};
        const auto lex = extract_lexicon(es, et, m, shared, {});
        const auto tsv = lexicon_to_tsv(lex);
        CHECK(lexicon_to_tsv(lexicon_from_tsv(tsv)) == tsv);
        const auto back = lexicon_from_json(lexicon_to_json(lex));
        CHECK(back == lex);

        auto broken = tsv;
        broken.replace(broken.find("\t1\t"), 3, "\t2\t");  // rank out of sequence
        CHECK(error_kind([&] { lexicon_from_tsv(broken); }) == 2);
        CHECK(error_kind([] { lexicon_from_tsv("nonsense\n"); }) == 2);
        CHECK(error_kind([&] { lexicon_from_tsv(tsv.substr(0, tsv.find('\n') + 1)); }) == 2);
    }
}
