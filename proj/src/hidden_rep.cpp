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

#include "tokalign/hidden_rep.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"

namespace tokalign {

PoolMode parse_pool_mode(std::string_view name) {
    if (name == "max") return PoolMode::Max;
    if (name == "avg" || name == "mean") return PoolMode::Avg;
    if (name == "last") return PoolMode::Last;
    fail_usage("unknown pooling mode \"", name, "\" (expected max, avg or last)");
}

std::string_view to_string(PoolMode mode) {
    switch (mode) {
        case PoolMode::Max: return "max";
        case PoolMode::Avg: return "avg";
        case PoolMode::Last: return "last";
    }
    return "?";
}

std::vector<std::uint8_t> encode_hidden_states(const HiddenStateFile& file) {
    io::Writer w;
    w.magic("THSR");
    w.u32(file.hidden_size);
    w.u64(file.records.size());
    for (const auto& r : file.records) {
        if (r.states.size() != std::uint64_t{r.positions} * file.hidden_size)
            fail_usage("THSR: record for token ", r.token_id, " has ", r.states.size(), " values, expected T*h");
        w.u32(r.token_id);
        w.u32(r.positions);
        w.bytes(r.states.data(), r.states.size() * sizeof(float));
    }
    return std::move(w.buffer());
}

HiddenStateFile decode_hidden_states(std::span<const std::uint8_t> bytes) {
    io::Reader r(bytes.data(), bytes.size(), "THSR");
    r.expect_magic("THSR");
    HiddenStateFile file;
    file.hidden_size = r.u32();
    if (file.hidden_size == 0) fail_data("THSR: hidden size must be >= 1");
    const std::uint64_t count = r.u64();
    if (count > r.remaining() / 8) fail_data("THSR: truncated payload (", count, " records declared)");
    file.records.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        HiddenStateRecord rec;
        rec.token_id = r.u32();
        rec.positions = r.u32();
        if (rec.positions == 0) fail_data("THSR: record ", k, " (token ", rec.token_id, ") has T = 0");
        const std::uint64_t n = std::uint64_t{rec.positions} * file.hidden_size;
        if (n > r.remaining() / 4) fail_data("THSR: truncated payload in record ", k);
        const auto* p = r.take(n * 4, "hidden states");
        rec.states.resize(n);
        std::memcpy(rec.states.data(), p, n * 4);
        for (float f : rec.states)
            if (!std::isfinite(f)) fail_data("THSR: non-finite value in record ", k, " (token ", rec.token_id, ")");
        file.records.push_back(std::move(rec));
    }
    r.expect_end();
    return file;
}

void write_hidden_states(const HiddenStateFile& file, const std::filesystem::path& path) {
    io::write_file(path, encode_hidden_states(file));
}

HiddenStateFile read_hidden_states(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    try {
        return decode_hidden_states(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::vector<double> pool(const HiddenStateRecord& record, std::uint32_t hidden_size, PoolMode mode) {
    const std::uint32_t t_len = record.positions;
    if (t_len == 0 || record.states.size() != std::uint64_t{t_len} * hidden_size)
        fail_data("hidden-state record for token ", record.token_id, " is malformed");
    const float* s = record.states.data();
    std::vector<double> out(hidden_size);
    switch (mode) {
        case PoolMode::Max:
            for (std::uint32_t c = 0; c < hidden_size; ++c) {
                double m = -std::numeric_limits<double>::infinity();
                for (std::uint32_t t = 0; t < t_len; ++t) m = std::max(m, double(s[t * hidden_size + c]));
                out[c] = m;
            }
            break;
        case PoolMode::Avg:
            for (std::uint32_t t = 0; t < t_len; ++t)
                for (std::uint32_t c = 0; c < hidden_size; ++c) out[c] += s[t * hidden_size + c];
            for (auto& x : out) x /= t_len;
            break;
        case PoolMode::Last:
            for (std::uint32_t c = 0; c < hidden_size; ++c) out[c] = s[(t_len - 1) * hidden_size + c];
            break;
    }
    return out;
}

Embeddings build_embeddings(const HiddenStateFile& file, std::size_t vocab_size, PoolMode mode) {
    const auto h = file.hidden_size;
    RowMatrix m(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(h));
    std::vector<bool> seen(vocab_size, false);
    for (const auto& rec : file.records) {
        if (rec.token_id >= vocab_size)
            fail_data("hidden states: token ID ", rec.token_id, " outside vocabulary of size ", vocab_size);
        if (seen[rec.token_id]) fail_data("hidden states: duplicate record for token ID ", rec.token_id);
        seen[rec.token_id] = true;
        const auto row = pool(rec, h, mode);
        for (std::uint32_t c = 0; c < h; ++c) m(rec.token_id, c) = row[c];
    }
    for (std::size_t t = 0; t < vocab_size; ++t)
        if (!seen[t]) fail_data("hidden states: coverage error, no record for token ID ", t);
    auto e = Embeddings::from_matrix(std::move(m));
    e.validate();
    return e;
}

Embeddings build_embeddings(const HiddenStateFile& file, const Vocab& vocab, PoolMode mode) {
    return build_embeddings(file, vocab.size(), mode);
}

}  // namespace tokalign
