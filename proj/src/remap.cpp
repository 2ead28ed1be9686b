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

#include "tokalign/remap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "tokalign/error.hpp"
#include "tokalign/parallel.hpp"
#include "tokalign/rng.hpp"

namespace tokalign {
namespace {

struct Gaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd factor;  // lower triangular; empty when diagonal
    Eigen::VectorXd stddev;  // used when diagonal
    bool full = false;
};

Gaussian fit_gaussian(const Tensor& t, std::uint64_t full_max_dim) {
    const auto n = static_cast<Eigen::Index>(t.rows());
    const auto d = static_cast<Eigen::Index>(t.row_size());
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(t.data.data(), n, d);
    const Eigen::MatrixXd x = m.cast<double>();
    Gaussian g;
    g.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    if (static_cast<std::uint64_t>(d) <= full_max_dim) {
        const Eigen::MatrixXd cov = centered.transpose() * centered / denom;
        double jitter = 1e-10 * std::max(1.0, cov.trace() / static_cast<double>(d));
        for (int attempt = 0; attempt < 12; ++attempt, jitter *= 10) {
            Eigen::LLT<Eigen::MatrixXd> llt(cov + jitter * Eigen::MatrixXd::Identity(d, d));
            if (llt.info() == Eigen::Success) {
                g.factor = llt.matrixL();
                g.full = true;
                return g;
            }
        }
        fail_numerical("multivariate init: covariance is not positive definite");
    }
    g.stddev = (centered.array().square().colwise().sum() / denom).sqrt().transpose();
    return g;
}

std::uint64_t name_key(std::string_view name) { return derive_seed(0, name); }

}  // namespace

InitKind parse_init_kind(std::string_view name) {
    if (name == "tokalign") return InitKind::TokAlign;
    if (name == "random_init" || name == "random") return InitKind::RandomInit;
    if (name == "random_permutation" || name == "permutation") return InitKind::RandomPermutation;
    if (name == "multivariate") return InitKind::Multivariate;
    if (name == "mean") return InitKind::Mean;
    fail_usage("unknown init strategy \"", name,
               "\" (expected tokalign, random_init, random_permutation, multivariate or mean)");
}

std::string_view to_string(InitKind kind) {
    switch (kind) {
        case InitKind::TokAlign: return "tokalign";
        case InitKind::RandomInit: return "random_init";
        case InitKind::RandomPermutation: return "random_permutation";
        case InitKind::Multivariate: return "multivariate";
        case InitKind::Mean: return "mean";
    }
    return "?";
}

TensorBundle remap_parameters(const TensorBundle& src, const AlignmentLexicon& lexicon, const InitStrategy& strategy,
                              std::size_t tgt_vocab_size, unsigned threads) {
    if (lexicon.direction != Direction::TgtToSrc) fail_usage("remap: lexicon must map target tokens to source tokens");
    if (lexicon.query_vocab() != tgt_vocab_size)
        fail_data("remap: lexicon covers ", lexicon.query_vocab(), " target tokens, target vocabulary has ",
                  tgt_vocab_size);
    if (!(strategy.init_std >= 0.0)) fail_usage("remap: init_std must be >= 0");
    if (!src.has(std::string(kEmbeddingTensor))) fail_data("remap: source bundle has no \"embedding\" tensor");
    for (std::size_t q = 0; q < lexicon.entries.size(); ++q) {
        const auto& e = lexicon.entries[q];
        if (e.candidates.empty() && (e.direct || strategy.kind == InitKind::TokAlign))
            fail_data("remap: lexicon has no entry for target token ", q);
    }
    threads = resolve_threads(threads);

    TensorBundle out = src;
    bool filled_any = false;
    std::string covariance;
    for (std::string_view name : {kEmbeddingTensor, kLmHeadTensor}) {
        const std::string key(name);
        if (!src.has(key)) continue;
        const Tensor& in = src.at(key);
        if (in.shape.size() != 2) fail_data("remap: tensor \"", key, "\" must be 2-D");
        const std::uint64_t rows = in.shape[0], d = in.shape[1];
        if (rows != lexicon.candidate_vocab)
            fail_data("remap: tensor \"", key, "\" has ", rows, " rows, lexicon source vocabulary has ",
                      lexicon.candidate_vocab);
        if (rows == 0 && strategy.kind != InitKind::RandomInit)
            fail_data("remap: tensor \"", key, "\" is empty");

        Eigen::VectorXd mean;
        Gaussian gauss;
        const bool needs_fill = std::any_of(lexicon.entries.begin(), lexicon.entries.end(),
                                            [](const LexiconEntry& e) { return !e.direct; });
        if (needs_fill && strategy.kind == InitKind::Mean) {
            mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
            for (std::uint64_t r = 0; r < rows; ++r)
                for (std::uint64_t c = 0; c < d; ++c) mean[static_cast<Eigen::Index>(c)] += in.data[r * d + c];
            mean /= static_cast<double>(rows);
        }
        if (needs_fill && strategy.kind == InitKind::Multivariate) {
            gauss = fit_gaussian(in, strategy.full_covariance_max_dim);
            covariance = gauss.full ? "full" : "diagonal";
        }
        filled_any = filled_any || needs_fill;

        Tensor t({tgt_vocab_size, d}, std::vector<float>(tgt_vocab_size * d));
        const std::uint64_t tensor_key = name_key(name);
        parallel_for(tgt_vocab_size, threads, [&](std::size_t q) {
            const auto& entry = lexicon.entries[q];
            float* dst = t.data.data() + q * d;
            auto copy_row = [&](std::uint64_t r) { std::memcpy(dst, in.data.data() + r * d, d * sizeof(float)); };
            if (entry.direct) return copy_row(entry.candidates.front().id);
            switch (strategy.kind) {
                case InitKind::TokAlign:
                    copy_row(entry.candidates.front().id);
                    break;
                case InitKind::RandomPermutation: {
                    SplitMix rng(hash_key(strategy.seed, q));
                    copy_row(rng.below(rows));
                    break;
                }
                case InitKind::RandomInit: {
                    SplitMix rng(hash_key(strategy.seed, q, tensor_key));
                    for (std::uint64_t c = 0; c < d; ++c) dst[c] = static_cast<float>(strategy.init_std * rng.normal());
                    break;
                }
                case InitKind::Mean:
                    for (std::uint64_t c = 0; c < d; ++c) dst[c] = static_cast<float>(mean[static_cast<Eigen::Index>(c)]);
                    break;
                case InitKind::Multivariate: {
                    SplitMix rng(hash_key(strategy.seed, q, tensor_key));
                    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
                    for (auto& v : z) v = rng.normal();
                    const Eigen::VectorXd x =
                        gauss.full ? Eigen::VectorXd(gauss.mean + gauss.factor * z)
                                   : Eigen::VectorXd(gauss.mean + gauss.stddev.cwiseProduct(z));
                    for (std::uint64_t c = 0; c < d; ++c) dst[c] = static_cast<float>(x[static_cast<Eigen::Index>(c)]);
                    break;
                }
            }
        });
        out.tensors[key] = std::move(t);
    }
    // Metadata changes only when rows were synthesized, so an all-direct remap
    // reproduces the input bundle byte for byte.
    if (filled_any) {
        out.metadata["remap.strategy"] = std::string(to_string(strategy.kind));
        out.metadata["remap.seed"] = std::to_string(strategy.seed);
        if (!covariance.empty()) out.metadata["remap.covariance"] = covariance;
    }
    return out;
}

}  // namespace tokalign
