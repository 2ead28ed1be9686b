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

#pragma once

// Shared fixtures and reference implementations for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "tokalign/align.hpp"
#include "tokalign/cooccur.hpp"
#include "tokalign/corpus.hpp"
#include "tokalign/embeddings.hpp"
#include "tokalign/error.hpp"
#include "tokalign/rng.hpp"

namespace tokalign::testing {

inline std::filesystem::path data_dir() { return std::filesystem::path(TOKALIGN_TEST_DATA_DIR); }
inline std::filesystem::path golden_dir() { return std::filesystem::path(TOKALIGN_TEST_GOLDEN_DIR); }

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("tokalign_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline RowMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    SplitMix rng(seed);
    RowMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

/// Haar-ish random orthogonal matrix: Q of a Gaussian matrix with sign fix.
inline RowMatrix random_orthogonal(Eigen::Index d, std::uint64_t seed) {
    const Eigen::MatrixXd g = gaussian_matrix(d, d, seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < d; ++i)
        if (r(i, i) < 0) q.col(i) *= -1;
    return q;
}

/// Zipf-weighted bigram source: every token has a few successors drawn
/// uniformly from the vocabulary and followed with probability `follow`;
/// otherwise the next token is a fresh Zipf draw.
inline TokenStream zipf_bigram_stream(std::uint32_t vocab, std::uint64_t tokens, std::uint64_t seed,
                                      std::uint32_t doc_len = 1000, double follow = 0.8, std::uint32_t successors = 4) {
    SplitMix rng(seed);
    std::vector<double> cum(vocab);
    double acc = 0;
    for (std::uint32_t r = 0; r < vocab; ++r) cum[r] = acc += 1.0 / (r + 1.0);
    auto zipf = [&] {
        const double u = rng.uniform() * acc;
        return static_cast<TokenId>(std::min<std::size_t>(vocab - 1, std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()));
    };
    std::vector<std::vector<TokenId>> next(vocab);
    for (auto& n : next)
        for (std::uint32_t k = 0; k < successors; ++k) n.push_back(static_cast<TokenId>(rng.below(vocab)));
    TokenStream s(vocab);
    std::vector<TokenId> doc;
    std::uint64_t produced = 0;
    while (produced < tokens) {
        const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(doc_len, tokens - produced));
        doc.clear();
        TokenId cur = zipf();
        for (std::uint32_t i = 0; i < len; ++i) {
            doc.push_back(cur);
            cur = rng.uniform() < follow ? next[cur][rng.below(successors)] : zipf();
        }
        s.add_document(doc);
        produced += len;
    }
    return s;
}

/// Random uniform-token stream.
inline TokenStream random_stream(std::uint32_t vocab, std::uint64_t tokens, std::uint64_t seed, std::uint32_t max_doc = 300) {
    SplitMix rng(seed);
    TokenStream s(vocab);
    std::vector<TokenId> doc;
    std::uint64_t produced = 0;
    while (produced < tokens) {
        const auto len = std::min<std::uint64_t>(rng.below(max_doc) + 1, tokens - produced);
        doc.resize(len);
        for (auto& t : doc) t = static_cast<TokenId>(rng.below(vocab));
        s.add_document(doc);
        produced += len;
    }
    return s;
}

inline TokenStream relabel(const TokenStream& s, const std::vector<TokenId>& map) {
    TokenStream out(static_cast<std::uint32_t>(map.size()));
    std::vector<TokenId> doc;
    for (std::size_t d = 0; d < s.doc_count(); ++d) {
        doc.clear();
        for (TokenId t : s.doc(d)) doc.push_back(map[t]);
        out.add_document(doc);
    }
    return out;
}

inline std::vector<TokenId> random_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<TokenId> p(n);
    std::iota(p.begin(), p.end(), TokenId{0});
    SplitMix rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    return p;
}

/// Double loop over every position pair; symmetric full-matrix weights.
inline std::map<std::pair<TokenId, TokenId>, double> naive_cooccur(const TokenStream& s, std::uint32_t window,
                                                                   bool weighting) {
    std::map<std::pair<TokenId, TokenId>, double> m;
    for (std::size_t d = 0; d < s.doc_count(); ++d) {
        const auto doc = s.doc(d);
        for (std::size_t a = 0; a < doc.size(); ++a)
            for (std::size_t b = a + 1; b < doc.size() && b - a <= window; ++b) {
                const double w = weighting ? 1.0 / static_cast<double>(b - a) : 1.0;
                m[{doc[a], doc[b]}] += w;
                m[{doc[b], doc[a]}] += w;
            }
    }
    return m;
}

inline double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    double dot = 0, na = 0, nb = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// CSLS straight from its definition with explicit neighbour sorting.
inline double brute_csls(const RowMatrix& queries, const RowMatrix& candidates, Eigen::Index qi, Eigen::Index cj, int k) {
    std::vector<double> to_cands, to_queries;
    for (Eigen::Index c = 0; c < candidates.rows(); ++c) to_cands.push_back(cosine(queries.row(qi), candidates.row(c)));
    for (Eigen::Index q = 0; q < queries.rows(); ++q) to_queries.push_back(cosine(candidates.row(cj), queries.row(q)));
    std::sort(to_cands.rbegin(), to_cands.rend());
    std::sort(to_queries.rbegin(), to_queries.rend());
    double r_t = 0, r_s = 0;
    for (int i = 0; i < k; ++i) {
        r_t += to_cands[i];
        r_s += to_queries[i];
    }
    return 2 * cosine(queries.row(qi), candidates.row(cj)) - r_t / k - r_s / k;
}

/// Kind of the tokalign::Error thrown by fn, or 0 if it returns normally.
template <class Fn>
int error_kind(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return static_cast<int>(e.kind());
    }
    return 0;
}

/// Vocabulary of opaque tokens "<prefix><i>".
inline Vocab numbered_vocab(std::size_t n, const std::string& prefix) {
    std::vector<std::string> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(prefix + std::to_string(i));
    return Vocab::from_tokens(std::move(t));
}

}  // namespace tokalign::testing
