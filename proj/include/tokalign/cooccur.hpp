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
#include <span>
#include <vector>

#include "tokalign/corpus.hpp"

namespace tokalign {

/// Upper-triangle entry (i <= j) of a symmetric co-occurrence matrix.
///
/// Weights are kept as integer multiples of 1 / lcm(1..window), which makes
/// every 1/d increment exact; summation is then associative and sharded
/// counting reproduces single-pass counting bit for bit.
struct CooccurEntry {
    TokenId i = 0;
    TokenId j = 0;
    std::uint64_t units = 0;

    friend bool operator==(const CooccurEntry&, const CooccurEntry&) = default;
};

class CooccurMatrix {
public:
    static constexpr std::uint32_t kMaxWindow = 24;
    static constexpr std::uint32_t kDefaultWindow = 10;

    CooccurMatrix() = default;
    CooccurMatrix(std::uint32_t vocab_size, std::uint32_t window);

    /// Takes entries sorted by (i, j) with i <= j, indices < vocab_size and
    /// non-zero units; Data error otherwise.
    static CooccurMatrix from_entries(std::uint32_t vocab_size, std::uint32_t window,
                                      std::vector<CooccurEntry> entries);

    /// lcm(1..window): weights are units / denominator.
    static std::uint64_t unit_denominator(std::uint32_t window);

    std::uint32_t vocab_size() const noexcept { return vocab_size_; }
    std::uint32_t window() const noexcept { return window_; }
    std::uint64_t denominator() const noexcept { return denom_; }
    std::span<const CooccurEntry> entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    double to_weight(std::uint64_t units) const noexcept {
        return static_cast<double>(units) / static_cast<double>(denom_);
    }
    /// weight(i, j) == weight(j, i); zero when absent.
    double weight(TokenId i, TokenId j) const;

    /// Sum over the full symmetric matrix (off-diagonal entries counted twice).
    double total_weight() const;
    std::uint64_t total_units() const;

    /// Row sums of the full symmetric matrix; a token-frequency proxy.
    std::vector<double> row_mass() const;

    friend bool operator==(const CooccurMatrix&, const CooccurMatrix&) = default;

private:
    std::uint32_t vocab_size_ = 0;
    std::uint32_t window_ = 1;
    std::uint64_t denom_ = 1;
    std::vector<CooccurEntry> entries_;
};

struct CooccurOptions {
    std::uint32_t window = CooccurMatrix::kDefaultWindow;
    bool distance_weighting = true;  // 1/d per pair at distance d, else 1
    unsigned shards = 1;             // position-range shards, merged in order
    unsigned threads = 1;
};

/// Counts every ordered position pair at distance d <= window inside one
/// document, adding the pair weight to both (a, b) and (b, a).
CooccurMatrix accumulate(const TokenStream& stream, const CooccurOptions& options = {});

/// Entrywise sum; Usage error on mismatched vocab_size or window.
CooccurMatrix merge(const CooccurMatrix& a, const CooccurMatrix& b);

/// TCOC: "TCOC", u32 vocab_size, u32 window, u64 count, then (u32 i, u32 j,
/// f64 weight) records with i <= j sorted lexicographically.
std::vector<std::uint8_t> encode_cooccur(const CooccurMatrix& m);
CooccurMatrix decode_cooccur(std::span<const std::uint8_t> bytes);
void write_cooccur(const CooccurMatrix& m, const std::filesystem::path& path);
CooccurMatrix read_cooccur(const std::filesystem::path& path);

}  // namespace tokalign
