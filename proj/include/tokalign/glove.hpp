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

#include <cstdint>
#include <vector>

#include "tokalign/cooccur.hpp"
#include "tokalign/embeddings.hpp"

namespace tokalign {

struct GloveConfig {
    std::uint32_t dim = 300;
    double x_max = 100.0;
    double alpha = 0.75;
    double learning_rate = 0.05;
    std::uint32_t epochs = 15;
    std::uint64_t seed = 7;
    /// > 1 selects the lock-free parallel mode, which is not bit-reproducible.
    unsigned threads = 1;
    /// Per-entry |f(X) * residual| clamp applied to SGD steps (not to the objective).
    double grad_clip = 100.0;

    /// Usage error on dim < 1, x_max <= 0, alpha outside (0, 1], epochs < 1, lr <= 0.
    void validate() const;
};

/// The factorization being fitted: word vectors, context vectors and their biases.
struct GloveParams {
    RowMatrix w;
    RowMatrix w_ctx;
    Eigen::VectorXd b;
    Eigen::VectorXd b_ctx;

    std::size_t vocab_size() const { return static_cast<std::size_t>(w.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(w.cols()); }
    static GloveParams zeros(std::size_t vocab_size, std::size_t dim);
};

/// Small uniform init in [-0.5/d, 0.5/d), keyed per (seed, token) so it does
/// not depend on vocabulary order.
GloveParams init_glove_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// f(x) = (x / x_max)^alpha below x_max, 1 above.
double glove_weight(double x, const GloveConfig& cfg);

struct GloveLoss {
    double loss = 0.0;
    GloveParams grad;
};

/// J = sum over all non-zero (i, j) of the full symmetric matrix of
/// f(X_ij) (w_i . w~_j + b_i + b~_j - log X_ij)^2, with its exact gradient.
GloveLoss glove_loss_and_grad(const CooccurMatrix& cooccur, const GloveParams& params, const GloveConfig& cfg);

struct GloveResult {
    Embeddings embeddings;          // w + w~ per token
    GloveParams params;             // final factors
    std::vector<double> epoch_loss; // mean f * residual^2 per entry, measured during each epoch
};

/// AdaGrad over shuffled non-zero entries. Data error on an empty matrix,
/// Numerical error (naming the epoch) if the loss becomes non-finite.
GloveResult train_glove(const CooccurMatrix& cooccur, const GloveConfig& cfg);

}  // namespace tokalign
