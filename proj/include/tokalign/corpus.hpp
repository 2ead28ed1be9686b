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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokalign/vocab.hpp"

namespace tokalign {

/// Document-segmented token IDs over one vocabulary, stored CSR-style.
class TokenStream {
public:
    TokenStream() = default;
    explicit TokenStream(std::uint32_t vocab_size) : vocab_size_(vocab_size) {}

    /// Appends a document; Data error if any ID >= vocab_size.
    void add_document(std::span<const TokenId> ids);

    std::uint32_t vocab_size() const noexcept { return vocab_size_; }
    std::size_t doc_count() const noexcept { return offsets_.size() - 1; }
    std::uint64_t total_tokens() const noexcept { return ids_.size(); }

    std::span<const TokenId> doc(std::size_t i) const {
        return {ids_.data() + offsets_[i], ids_.data() + offsets_[i + 1]};
    }
    std::span<const TokenId> all_ids() const noexcept { return ids_; }

    void reserve(std::size_t docs, std::size_t tokens) {
        offsets_.reserve(docs + 1);
        ids_.reserve(tokens);
    }

    /// Occurrence count of every token ID.
    std::vector<std::uint64_t> unigram_counts() const;

    friend bool operator==(const TokenStream&, const TokenStream&) = default;

private:
    std::uint32_t vocab_size_ = 0;
    std::vector<std::uint64_t> offsets_{0};
    std::vector<TokenId> ids_;
};

/// TITS v1: "TITS", u8 version, u32 vocab_size, u64 doc_count, then per doc
/// u64 length + u32 IDs. All little-endian.
std::vector<std::uint8_t> encode_token_stream(const TokenStream& stream);
TokenStream decode_token_stream(std::span<const std::uint8_t> bytes);
void write_token_stream(const TokenStream& stream, const std::filesystem::path& path);
TokenStream read_token_stream(const std::filesystem::path& path);

/// Greedy longest-prefix-match tokenizer over a vocabulary trie.
class GreedyTokenizer {
public:
    explicit GreedyTokenizer(const Vocab& vocab);

    /// Data error if some position has no matching token (vocab lacks byte coverage).
    std::vector<TokenId> tokenize(std::string_view text) const;

    /// Tokenizes each document independently; output is identical for any thread count.
    TokenStream tokenize_documents(std::span<const std::string> docs, unsigned threads = 1) const;

    std::uint32_t vocab_size() const noexcept { return vocab_size_; }

private:
    static constexpr std::uint32_t kNoToken = 0xFFFFFFFFu;
    std::uint32_t child(std::uint32_t node, unsigned char byte) const;

    std::uint32_t vocab_size_ = 0;
    std::vector<std::uint32_t> node_token_;             // token ending at node, or kNoToken
    std::vector<std::uint32_t> root_children_;          // 256 dense entries, 0 = none
    std::unordered_map<std::uint64_t, std::uint32_t> edges_;  // (node << 8 | byte) -> child
};

std::vector<TokenId> longest_match_tokenize(std::string_view text, const Vocab& vocab);

/// Concatenated token bytes; Data error on an out-of-range ID.
std::string detokenize(std::span<const TokenId> doc, const Vocab& vocab);

/// Plain-text corpus: one document per line ('\n' separated, terminator not
/// part of the document). A final newline does not open an empty document.
std::vector<std::string> split_documents(std::string_view text);
std::vector<std::string> read_documents(const std::filesystem::path& path);
std::string join_documents(std::span<const std::string> docs);

/// One entry of a weighted corpus list.
struct WeightedCorpus {
    std::filesystem::path path;
    double weight = 1.0;
};

/// Reads corpora in order. With token_budget > 0 each corpus contributes whole
/// documents, in file order, until its share weight/sum(weights) * budget of
/// tokens is reached; with budget 0 every document is kept.
TokenStream tokenize_corpora(std::span<const WeightedCorpus> corpora, const GreedyTokenizer& tokenizer,
                             std::uint64_t token_budget, unsigned threads,
                             std::vector<std::string>* kept_documents = nullptr);

}  // namespace tokalign
