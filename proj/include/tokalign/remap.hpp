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

// Embedding / LM-head transplant onto a new vocabulary.

#include <cstdint>
#include <string_view>

#include "tokalign/align.hpp"
#include "tokalign/tensor_file.hpp"

namespace tokalign {

enum class InitKind { TokAlign, RandomInit, RandomPermutation, Multivariate, Mean };

InitKind parse_init_kind(std::string_view name);
std::string_view to_string(InitKind kind);

struct InitStrategy {
    InitKind kind = InitKind::TokAlign;
    std::uint64_t seed = 7;
    double init_std = 0.02;                    // random_init
    std::uint64_t full_covariance_max_dim = 1024;  // multivariate: diagonal above this width
};

/// Tensors whose rows are indexed by token ID.
inline constexpr std::string_view kEmbeddingTensor = "embedding";
inline constexpr std::string_view kLmHeadTensor = "lm_head";

/// Builds target-vocabulary "embedding" (and "lm_head" if present) tensors of
/// tgt_vocab_size rows. Queries with a direct pair copy the source row bit for
/// bit under every strategy; other rows follow the strategy. Other tensors and
/// metadata pass through unchanged. Stochastic draws are keyed by
/// (seed, tensor, row), so the thread count never changes the output.
TensorBundle remap_parameters(const TensorBundle& src, const AlignmentLexicon& lexicon, const InitStrategy& strategy,
                              std::size_t tgt_vocab_size, unsigned threads = 1);

}  // namespace tokalign
