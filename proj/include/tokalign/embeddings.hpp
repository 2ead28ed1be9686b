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
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "tokalign/tensor_file.hpp"

namespace tokalign {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense |V| x d token vectors, one row per token ID.
struct Embeddings {
    RowMatrix matrix;
    std::vector<std::uint8_t> covered;  // 1 if the token had any training signal
    std::vector<double> frequency;      // optional frequency proxy (co-occurrence row mass); may be empty
    std::uint64_t trained_token_count = 0;

    std::size_t vocab_size() const { return static_cast<std::size_t>(matrix.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
    std::size_t covered_count() const;
    double coverage() const;

    /// All rows covered, no frequency information.
    static Embeddings from_matrix(RowMatrix m);

    /// Data error on NaN/Inf entries or inconsistent side vectors.
    void validate() const;
};

/// Bundle layout: "embedding" [V, d], "coverage" [V] (0/1), optional
/// "frequency" [V]; trained_token_count goes to metadata.
TensorBundle embeddings_to_bundle(const Embeddings& e);
Embeddings embeddings_from_bundle(const TensorBundle& b);
void write_embeddings(const Embeddings& e, const std::filesystem::path& path);
Embeddings read_embeddings(const std::filesystem::path& path);

/// Text format: "vocab_size dim", then per token "id v1 ... vd".
void write_embeddings_text(const Embeddings& e, const std::filesystem::path& path);
Embeddings read_embeddings_text(const std::filesystem::path& path);

}  // namespace tokalign
