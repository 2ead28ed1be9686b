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

#include "tokalign/corpus.hpp"

#include <cmath>
#include <numeric>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"
#include "tokalign/parallel.hpp"

namespace tokalign {

void TokenStream::add_document(std::span<const TokenId> ids) {
    for (TokenId id : ids)
        if (id >= vocab_size_)
            fail_data("token ID ", id, " >= vocab_size ", vocab_size_, " in document ", doc_count());
    ids_.insert(ids_.end(), ids.begin(), ids.end());
    offsets_.push_back(ids_.size());
}

std::vector<std::uint64_t> TokenStream::unigram_counts() const {
    std::vector<std::uint64_t> counts(vocab_size_, 0);
    for (TokenId id : ids_) ++counts[id];
    return counts;
}

std::vector<std::uint8_t> encode_token_stream(const TokenStream& stream) {
    io::Writer w;
    w.reserve(17 + stream.doc_count() * 8 + stream.total_tokens() * 4);
    w.magic("TITS");
    w.u8(1);
    w.u32(stream.vocab_size());
    w.u64(stream.doc_count());
    for (std::size_t d = 0; d < stream.doc_count(); ++d) {
        const auto doc = stream.doc(d);
        w.u64(doc.size());
        w.bytes(doc.data(), doc.size_bytes());
    }
    return std::move(w.buffer());
}

TokenStream decode_token_stream(std::span<const std::uint8_t> bytes) {
    io::Reader r(bytes.data(), bytes.size(), "TITS");
    r.expect_magic("TITS");
    if (const auto version = r.u8(); version != 1) fail_data("TITS: unsupported version ", int(version));
    const std::uint32_t vocab_size = r.u32();
    const std::uint64_t doc_count = r.u64();
    // Each document needs at least its 8-byte length field.
    if (doc_count > r.remaining() / 8) fail_data("TITS: truncated payload (doc_count ", doc_count, ")");
    TokenStream stream(vocab_size);
    stream.reserve(doc_count, (r.remaining() - doc_count * 8) / 4);
    std::vector<TokenId> doc;
    for (std::uint64_t d = 0; d < doc_count; ++d) {
        const std::uint64_t len = r.u64();
        if (len > r.remaining() / 4) fail_data("TITS: truncated payload in document ", d);
        const auto* p = r.take(len * 4, "token IDs");
        doc.resize(len);
        std::memcpy(doc.data(), p, len * 4);
        stream.add_document(doc);
    }
    r.expect_end();
    return stream;
}

void write_token_stream(const TokenStream& stream, const std::filesystem::path& path) {
    io::write_file(path, encode_token_stream(stream));
}

TokenStream read_token_stream(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    try {
        return decode_token_stream(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

GreedyTokenizer::GreedyTokenizer(const Vocab& vocab)
    : vocab_size_(static_cast<std::uint32_t>(vocab.size())), node_token_{kNoToken}, root_children_(256, 0) {
    for (std::size_t id = 0; id < vocab.size(); ++id) {
        const std::string& tok = vocab.tokens()[id];
        if (tok.empty()) continue;  // an empty token never matches anything
        std::uint32_t node = 0;
        for (unsigned char b : tok) {
            std::uint32_t next = child(node, b);
            if (next == 0) {
                next = static_cast<std::uint32_t>(node_token_.size());
                node_token_.push_back(kNoToken);
                if (node == 0)
                    root_children_[b] = next;
                else
                    edges_.emplace((std::uint64_t{node} << 8) | b, next);
            }
            node = next;
        }
        node_token_[node] = static_cast<std::uint32_t>(id);
    }
}

std::uint32_t GreedyTokenizer::child(std::uint32_t node, unsigned char byte) const {
    if (node == 0) return root_children_[byte];
    auto it = edges_.find((std::uint64_t{node} << 8) | byte);
    return it == edges_.end() ? 0 : it->second;
}

std::vector<TokenId> GreedyTokenizer::tokenize(std::string_view text) const {
    std::vector<TokenId> out;
    out.reserve(text.size() / 2 + 1);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::uint32_t node = 0;
        std::uint32_t best_token = kNoToken;
        std::size_t best_len = 0;
        for (std::size_t i = pos; i < text.size(); ++i) {
            node = child(node, static_cast<unsigned char>(text[i]));
            if (node == 0) break;
            if (node_token_[node] != kNoToken) {
                best_token = node_token_[node];
                best_len = i - pos + 1;
            }
        }
        if (best_token == kNoToken)
            fail_data("tokenize: no vocabulary token matches at byte offset ", pos, " (byte 0x", std::hex,
                      int(static_cast<unsigned char>(text[pos])), std::dec, "); vocabulary lacks byte coverage");
        out.push_back(best_token);
        pos += best_len;
    }
    return out;
}

TokenStream GreedyTokenizer::tokenize_documents(std::span<const std::string> docs, unsigned threads) const {
    std::vector<std::vector<TokenId>> per_doc(docs.size());
    parallel_for(docs.size(), resolve_threads(threads), [&](std::size_t d) { per_doc[d] = tokenize(docs[d]); });
    std::size_t total = 0;
    for (const auto& d : per_doc) total += d.size();
    TokenStream stream(vocab_size_);
    stream.reserve(docs.size(), total);
    for (const auto& d : per_doc) stream.add_document(d);
    return stream;
}

std::vector<TokenId> longest_match_tokenize(std::string_view text, const Vocab& vocab) {
    return GreedyTokenizer(vocab).tokenize(text);
}

std::string detokenize(std::span<const TokenId> doc, const Vocab& vocab) {
    std::string out;
    for (TokenId id : doc) out += vocab.token(id);
    return out;
}

std::vector<std::string> split_documents(std::string_view text) {
    std::vector<std::string> docs;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            docs.emplace_back(text.substr(start));
            break;
        }
        docs.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return docs;
}

std::vector<std::string> read_documents(const std::filesystem::path& path) {
    return split_documents(io::read_text_file(path));
}

std::string join_documents(std::span<const std::string> docs) {
    std::string out;
    for (const auto& d : docs) {
        out += d;
        out += '\n';
    }
    return out;
}

TokenStream tokenize_corpora(std::span<const WeightedCorpus> corpora, const GreedyTokenizer& tokenizer,
                             std::uint64_t token_budget, unsigned threads,
                             std::vector<std::string>* kept_documents) {
    double weight_sum = 0.0;
    for (const auto& c : corpora) {
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            fail_usage("corpus weight for ", c.path.string(), " must be finite and >= 0");
        weight_sum += c.weight;
    }
    if (token_budget > 0 && weight_sum <= 0.0) fail_usage("corpus weights sum to zero");

    TokenStream out(tokenizer.vocab_size());
    for (const auto& c : corpora) {
        auto docs = read_documents(c.path);
        const auto stream = tokenizer.tokenize_documents(docs, threads);
        const std::uint64_t quota =
            token_budget == 0 ? UINT64_MAX
                              : static_cast<std::uint64_t>(std::floor(c.weight / weight_sum * double(token_budget)));
        std::uint64_t taken = 0;
        for (std::size_t d = 0; d < stream.doc_count() && taken < quota; ++d) {
            out.add_document(stream.doc(d));
            taken += stream.doc(d).size();
            if (kept_documents) kept_documents->push_back(std::move(docs[d]));
        }
    }
    return out;
}

}  // namespace tokalign
