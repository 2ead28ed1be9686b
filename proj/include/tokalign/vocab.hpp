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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tokalign {

using TokenId = std::uint32_t;

/// Bidirectional token byte-string <-> ID table. IDs are always 0..size()-1.
class Vocab {
public:
    Vocab() = default;

    /// Build from tokens in ID order. Throws a Data error on duplicates.
    static Vocab from_tokens(std::vector<std::string> tokens);

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }

    /// Raw bytes of a token; Data error if the ID is out of range.
    const std::string& token(TokenId id) const;
    std::optional<TokenId> find(std::string_view bytes) const;
    bool contains(TokenId id) const noexcept { return id < tokens_.size(); }

    std::span<const std::string> tokens() const noexcept { return tokens_; }

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> id_of_;
};

/// Vocabulary JSON: object mapping token string -> ID. Keys use the byte-level
/// BPE byte-to-unicode remapping; code points outside that table are taken as
/// their UTF-8 bytes.
Vocab parse_vocab_json(std::string_view json_text);
Vocab load_vocab(const std::filesystem::path& path);
std::string vocab_to_json(const Vocab& vocab);
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);

/// Byte-level remapping (bytes -> printable code points, UTF-8 encoded) and its inverse.
std::string byte_encode(std::string_view bytes);
std::string byte_decode(std::string_view remapped);

/// The 256 single-byte tokens, ID == byte value.
Vocab byte_level_vocab();

struct SharedTokenSet {
    std::vector<std::pair<TokenId, TokenId>> pairs;  // (src_id, tgt_id), sorted by src_id
    std::size_t src_size = 0;
    std::size_t tgt_size = 0;
    double overlap_ratio_src = 0.0;  // |pairs| / |V_src|
    double overlap_ratio_tgt = 0.0;  // |pairs| / |V_tgt|

    bool empty() const noexcept { return pairs.empty(); }
};

/// Exact byte-string intersection of two vocabularies.
SharedTokenSet shared_tokens(const Vocab& src, const Vocab& tgt);

}  // namespace tokalign
