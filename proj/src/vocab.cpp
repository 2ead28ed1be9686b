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

#include "tokalign/vocab.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include <json.hpp>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"

namespace tokalign {
namespace {

struct ByteTables {
    std::array<char32_t, 256> to_cp{};
    std::unordered_map<char32_t, std::uint8_t> to_byte;
};

// Byte-level BPE remapping: printable Latin-1 bytes map to themselves, the
// remaining 68 bytes are shifted to U+0100.. in byte order.
const ByteTables& byte_tables() {
    static const ByteTables tables = [] {
        ByteTables t;
        auto printable = [](int b) {
            return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
        };
        int shifted = 0;
        for (int b = 0; b < 256; ++b) {
            const char32_t cp = printable(b) ? static_cast<char32_t>(b) : static_cast<char32_t>(256 + shifted++);
            t.to_cp[b] = cp;
            t.to_byte.emplace(cp, static_cast<std::uint8_t>(b));
        }
        return t;
    }();
    return tables;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes one UTF-8 sequence at s[i]; returns its length, or 0 if malformed.
std::size_t utf8_next(std::string_view s, std::size_t i, char32_t& cp) {
    const auto c0 = static_cast<unsigned char>(s[i]);
    std::size_t len;
    if (c0 < 0x80) {
        cp = c0;
        return 1;
    } else if ((c0 & 0xE0) == 0xC0) {
        len = 2;
        cp = c0 & 0x1F;
    } else if ((c0 & 0xF0) == 0xE0) {
        len = 3;
        cp = c0 & 0x0F;
    } else if ((c0 & 0xF8) == 0xF0) {
        len = 4;
        cp = c0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto c = static_cast<unsigned char>(s[i + k]);
        if ((c & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (c & 0x3F);
    }
    return len;
}

}  // namespace

std::string byte_encode(std::string_view bytes) {
    const auto& t = byte_tables();
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) append_utf8(out, t.to_cp[b]);
    return out;
}

std::string byte_decode(std::string_view remapped) {
    const auto& t = byte_tables();
    std::string out;
    out.reserve(remapped.size());
    std::size_t i = 0;
    while (i < remapped.size()) {
        char32_t cp = 0;
        const std::size_t len = utf8_next(remapped, i, cp);
        if (len == 0) {
            out.push_back(remapped[i++]);
            continue;
        }
        if (auto it = t.to_byte.find(cp); it != t.to_byte.end())
            out.push_back(static_cast<char>(it->second));
        else
            out.append(remapped.substr(i, len));
        i += len;
    }
    return out;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.id_of_.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto [it, inserted] = v.id_of_.emplace(tokens[i], static_cast<TokenId>(i));
        if (!inserted)
            fail_data("duplicate token \"", byte_encode(tokens[i]), "\" at IDs ", it->second, " and ", i);
    }
    v.tokens_ = std::move(tokens);
    return v;
}

const std::string& Vocab::token(TokenId id) const {
    if (id >= tokens_.size()) fail_data("token ID ", id, " out of range for vocabulary of size ", tokens_.size());
    return tokens_[id];
}

std::optional<TokenId> Vocab::find(std::string_view bytes) const {
    if (auto it = id_of_.find(std::string(bytes)); it != id_of_.end()) return it->second;
    return std::nullopt;
}

Vocab parse_vocab_json(std::string_view json_text) {
    using nlohmann::json;
    // nlohmann keeps only the last of duplicated keys, so duplicates are caught
    // while parsing.
    std::unordered_set<std::string> seen_keys;
    std::string duplicate;
    json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::key && depth == 1) {
            auto key = parsed.get<std::string>();
            if (!seen_keys.insert(key).second && duplicate.empty()) duplicate = key;
        }
        return true;
    };
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end(), cb);
    } catch (const json::exception& e) {
        fail_data("vocabulary JSON parse error: ", e.what());
    }
    if (!duplicate.empty()) fail_data("vocabulary: duplicate token \"", duplicate, "\"");
    if (!doc.is_object()) fail_data("vocabulary: top-level JSON value must be an object");

    const std::size_t n = doc.size();
    std::vector<std::string> tokens(n);
    std::vector<bool> filled(n, false);
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_number_integer()) fail_data("vocabulary: ID of \"", key, "\" is not an integer");
        const auto id = value.get<std::int64_t>();
        if (id < 0 || static_cast<std::uint64_t>(id) >= n)
            fail_data("vocabulary: non-contiguous ID ", id, " for \"", key, "\" (expected 0..", n - 1, ")");
        if (filled[id]) fail_data("vocabulary: ID ", id, " assigned twice");
        filled[id] = true;
        tokens[id] = byte_decode(key);
    }
    return Vocab::from_tokens(std::move(tokens));
}

Vocab load_vocab(const std::filesystem::path& path) {
    try {
        return parse_vocab_json(io::read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string vocab_to_json(const Vocab& vocab) {
    std::string out = "{";
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out += i == 0 ? "\n  " : ",\n  ";
        out += nlohmann::json(byte_encode(vocab.tokens()[i])).dump();
        out += ": ";
        out += std::to_string(i);
    }
    out += vocab.empty() ? "}\n" : "\n}\n";
    return out;
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
    const auto text = vocab_to_json(vocab);
    io::write_file(path, text.data(), text.size());
}

Vocab byte_level_vocab() {
    std::vector<std::string> tokens;
    tokens.reserve(256);
    for (int b = 0; b < 256; ++b) tokens.emplace_back(1, static_cast<char>(b));
    return Vocab::from_tokens(std::move(tokens));
}

SharedTokenSet shared_tokens(const Vocab& src, const Vocab& tgt) {
    SharedTokenSet out;
    out.src_size = src.size();
    out.tgt_size = tgt.size();
    for (std::size_t s = 0; s < src.size(); ++s) {
        if (auto t = tgt.find(src.tokens()[s])) out.pairs.emplace_back(static_cast<TokenId>(s), *t);
    }
    const auto n = static_cast<double>(out.pairs.size());
    out.overlap_ratio_src = src.empty() ? 0.0 : n / static_cast<double>(src.size());
    out.overlap_ratio_tgt = tgt.empty() ? 0.0 : n / static_cast<double>(tgt.size());
    return out;
}

}  // namespace tokalign
