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

#include <fstream>

#include "support.hpp"
#include "tokalign/metrics.hpp"

using namespace tokalign;
using namespace tokalign::testing;

namespace {

TokenStream docs(std::vector<std::vector<TokenId>> d, std::uint32_t v) {
    TokenStream s(v);
    for (const auto& x : d) s.add_document(x);
    return s;
}

AlignmentLexicon perm_lexicon(const std::vector<TokenId>& map, Direction dir) {
    AlignmentLexicon lex;
    lex.direction = dir;
    lex.candidate_vocab = map.size();
    for (TokenId q = 0; q < map.size(); ++q) lex.entries.push_back({{{map[q], 1.0}}, false, false});
    return lex;
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("BLEU-1 hand cases") {
        const auto a = docs({{0, 1, 2}, {3}}, 5);
        const auto same = bleu1(a, a);
        CHECK(same.bleu1 == 1.0);
        CHECK(same.brevity_penalty == 1.0);

        const auto clip = bleu1(docs({{0, 0, 0}}, 2), docs({{0, 1}}, 2));
        CHECK(clip.clipped_matches == 1);
        CHECK(clip.unigram_precision == doctest::Approx(1.0 / 3.0));
        CHECK(clip.brevity_penalty == 1.0);
        CHECK(clip.bleu1 == doctest::Approx(1.0 / 3.0));

        CHECK(bleu1(docs({{0, 1}}, 4), docs({{2, 3}}, 4)).bleu1 == 0.0);

        // Short candidate: BP = exp(1 - r/c).
        const auto short_c = bleu1(docs({{0, 1}}, 4), docs({{0, 1, 2, 3}}, 4));
        CHECK(short_c.brevity_penalty == doctest::Approx(std::exp(1.0 - 2.0)));
        CHECK(short_c.bleu1 == doctest::Approx(short_c.brevity_penalty * short_c.unigram_precision));
    }

    TEST_CASE("BLEU-1 clips per document") {
        // Matches do not carry across documents.
        const auto r = bleu1(docs({{0, 0}, {1, 1}}, 2), docs({{0, 1}, {0, 1}}, 2));
        CHECK(r.clipped_matches == 2);
        CHECK(r.unigram_precision == 0.5);
    }

    TEST_CASE("BLEU-1 errors") {
        CHECK(error_kind([] { bleu1(docs({{0}}, 2), docs({{0}, {1}}, 2)); }) == 1);
        CHECK(error_kind([] { bleu1(docs({{}}, 2), docs({{0}}, 2)); }) == 2);
    }

    TEST_CASE("BLEU-1 is invariant under a consistent relabeling and thread count") {
        const auto cand = random_stream(30, 3000, 81);
        TokenStream ref(30);
        SplitMix g(82);
        for (std::size_t d = 0; d < cand.doc_count(); ++d) {
            std::vector<TokenId> doc;
            for (TokenId t : cand.doc(d))
                if (g.uniform() < 0.9) doc.push_back(g.uniform() < 0.5 ? t : static_cast<TokenId>(g.below(30)));
            ref.add_document(doc);
        }
        const auto p = random_permutation(30, 83);
        const auto a = bleu1(cand, ref);
        const auto b = bleu1(relabel(cand, p), relabel(ref, p));
        CHECK(a.bleu1 == b.bleu1);
        CHECK(a.clipped_matches == b.clipped_matches);
        CHECK(bleu1(cand, ref, 4).bleu1 == a.bleu1);
        CHECK(bleu1(cand, cand).bleu1 == 1.0);
    }

    TEST_CASE("conversion substitutes top-1 and keeps layout") {
        const auto s = random_stream(12, 500, 84);
        const auto ident = identity_lexicon(12, Direction::TgtToSrc);
        CHECK(encode_token_stream(convert_corpus(s, ident)) == encode_token_stream(s));

        const auto p = random_permutation(12, 85);
        std::vector<TokenId> inv(12);
        for (TokenId i = 0; i < 12; ++i) inv[p[i]] = i;
        const auto moved = relabel(s, p);
        const auto back = convert_corpus(moved, perm_lexicon(inv, Direction::TgtToSrc));
        CHECK(encode_token_stream(back) == encode_token_stream(s));
        REQUIRE(back.doc_count() == s.doc_count());
        for (std::size_t d = 0; d < s.doc_count(); ++d) CHECK(back.doc(d).size() == s.doc(d).size());
        CHECK(error_kind([&] { convert_corpus(random_stream(13, 10, 86), ident); }) == 2);
    }

    TEST_CASE("bidirectional evaluation") {
        const auto s = random_stream(20, 2000, 87);
        const auto p = random_permutation(20, 88);
        std::vector<TokenId> inv(20);
        for (TokenId i = 0; i < 20; ++i) inv[p[i]] = i;
        const auto t = relabel(s, p);
        const auto t2s = perm_lexicon(inv, Direction::TgtToSrc), s2t = perm_lexicon(p, Direction::SrcToTgt);
        const auto reports = evaluate_bidirectional({&s, &t, &t2s, &s2t});
        REQUIRE(reports.size() == 2);
        CHECK(reports[0].direction == Direction::TgtToSrc);
        CHECK(reports[0].bleu.bleu1 == 1.0);
        CHECK(reports[1].bleu.bleu1 == 1.0);
        CHECK(error_kind([&] { evaluate_bidirectional({&s, &t, &s2t, nullptr}); }) == 1);
    }

    TEST_CASE("more seed pairs never hurt conversion") {
        // Lexicons that get the first k tokens right and send the rest to token 0.
        const auto s = zipf_bigram_stream(40, 20'000, 89, 400);
        double last = -1;
        for (TokenId k : {0u, 10u, 20u, 30u, 40u}) {
            std::vector<TokenId> map(40, 0);
            for (TokenId i = 0; i < k; ++i) map[i] = i;
            const auto b = bleu1(convert_corpus(s, perm_lexicon(map, Direction::TgtToSrc)), s).bleu1;
            CHECK(b >= last);
            last = b;
        }
        CHECK(last == 1.0);
    }

    TEST_CASE("semantic similarity") {
        std::vector<std::vector<double>> a = {{1, 0}, {0, 2}}, b = {{3, 0}, {0, 1}}, o = {{0, 1}, {5, 0}};
        CHECK(semantic_similarity(a, b) == doctest::Approx(1.0));
        CHECK(semantic_similarity(a, o) == doctest::Approx(0.0));
        std::vector<std::vector<double>> inter = {{1, 0}, {3, 0}, {0, 2}, {0, 1}};
        CHECK(semantic_similarity_interleaved(inter) == doctest::Approx(1.0));

        SplitMix g(90);
        std::vector<std::vector<double>> x(20, std::vector<double>(7)), y = x;
        for (auto* m : {&x, &y})
            for (auto& r : *m)
                for (auto& v : r) v = g.normal();
        double oracle = 0;
        for (int d = 0; d < 20; ++d) {
            double dot = 0, nx = 0, ny = 0;
            for (int k = 0; k < 7; ++k) {
                dot += x[d][k] * y[d][k];
                nx += x[d][k] * x[d][k];
                ny += y[d][k] * y[d][k];
            }
            oracle += dot / std::sqrt(nx * ny);
        }
        CHECK(std::abs(semantic_similarity(x, y) - oracle / 20) < 1e-12);

        std::vector<std::vector<double>> zero = {{0, 0}};
        CHECK(error_kind([&] { semantic_similarity(zero, std::vector<std::vector<double>>{{1, 0}}); }) != 0);
        CHECK(error_kind([&] { semantic_similarity(a, zero); }) != 0);
    }

    TEST_CASE("document embedding file") {
        const auto dir = scratch_dir("docemb");
        std::ofstream(dir / "e.txt") << "1 2 3\n4 5 6\n";
        const auto rows = read_document_embeddings(dir / "e.txt");
        REQUIRE(rows.size() == 2);
        CHECK(rows[1] == std::vector<double>{4, 5, 6});
        std::ofstream(dir / "bad.txt") << "1 2 3\n4 5\n";
        CHECK(error_kind([&] { read_document_embeddings(dir / "bad.txt"); }) == 2);
    }

    TEST_CASE("top-1 accuracy") {
        const auto lex = perm_lexicon({2, 1, 0}, Direction::TgtToSrc);
        const std::vector<TokenId> truth = {2, 0, 0};
        CHECK(top1_accuracy(lex, truth) == doctest::Approx(2.0 / 3.0));
        const std::vector<TokenId> q = {0, 2};
        CHECK(top1_accuracy(lex, truth, q) == 1.0);
    }
}
