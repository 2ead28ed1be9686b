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

// Token representations from exported language-model hidden states.
//
// THSR file: "THSR", u32 h, u64 record_count, then per record u32 token_id,
// u32 T, T*h f32 values (row-major, one row per position). Little-endian.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "tokalign/embeddings.hpp"
#include "tokalign/vocab.hpp"

namespace tokalign {

enum class PoolMode { Max, Avg, Last };

PoolMode parse_pool_mode(std::string_view name);
std::string_view to_string(PoolMode mode);

struct HiddenStateRecord {
    TokenId token_id = 0;
    std::uint32_t positions = 0;  // T
    std::vector<float> states;     // T x h

    friend bool operator==(const HiddenStateRecord&, const HiddenStateRecord&) = default;
};

struct HiddenStateFile {
    std::uint32_t hidden_size = 0;  // h
    std::vector<HiddenStateRecord> records;

    friend bool operator==(const HiddenStateFile&, const HiddenStateFile&) = default;
};

std::vector<std::uint8_t> encode_hidden_states(const HiddenStateFile& file);
HiddenStateFile decode_hidden_states(std::span<const std::uint8_t> bytes);
void write_hidden_states(const HiddenStateFile& file, const std::filesystem::path& path);
HiddenStateFile read_hidden_states(const std::filesystem::path& path);

/// Elementwise max / mean over positions, or the last position's row.
std::vector<double> pool(const HiddenStateRecord& record, std::uint32_t hidden_size, PoolMode mode);

/// Row t = pool(record for token t). Data error naming the first missing or
/// duplicated token ID.
Embeddings build_embeddings(const HiddenStateFile& file, const Vocab& vocab, PoolMode mode = PoolMode::Last);
Embeddings build_embeddings(const HiddenStateFile& file, std::size_t vocab_size, PoolMode mode = PoolMode::Last);

}  // namespace tokalign
