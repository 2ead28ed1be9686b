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

#include "tokalign/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"
#include "tokalign/parallel.hpp"

namespace tokalign {
namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_add_overflow(a, b, &r)) fail_numerical("co-occurrence weight overflow");
    return r;
}

void check_window(std::uint32_t window) {
    if (window < 1 || window > CooccurMatrix::kMaxWindow)
        fail_usage("co-occurrence window must be in [1, ", CooccurMatrix::kMaxWindow, "], got ", window);
}

// Dense upper triangle for small vocabularies, hash map otherwise.
class Accumulator {
public:
    explicit Accumulator(std::uint32_t vocab_size) : n_(vocab_size) {
        const std::uint64_t tri = std::uint64_t{n_} * (n_ + 1) / 2;
        if (tri <= kDenseLimit) dense_.assign(tri, 0);
    }

    void add(TokenId i, TokenId j, std::uint64_t units) {
        if (!dense_.empty()) {
            auto& slot = dense_[index(i, j)];
            slot = checked_add(slot, units);
        } else {
            auto& slot = sparse_[(std::uint64_t{i} << 32) | j];
            slot = checked_add(slot, units);
        }
    }

    std::vector<CooccurEntry> sorted_entries() const {
        std::vector<CooccurEntry> out;
        if (!dense_.empty()) {
            for (TokenId i = 0; i < n_; ++i)
                for (TokenId j = i; j < n_; ++j)
                    if (auto u = dense_[index(i, j)]; u != 0) out.push_back({i, j, u});
        } else {
            out.reserve(sparse_.size());
            for (const auto& [key, u] : sparse_)
                out.push_back({static_cast<TokenId>(key >> 32), static_cast<TokenId>(key & 0xFFFFFFFFu), u});
            std::sort(out.begin(), out.end(),
                      [](const CooccurEntry& a, const CooccurEntry& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
        }
        return out;
    }

private:
    static constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 22;

    std::uint64_t index(TokenId i, TokenId j) const {
        // Row i of the upper triangle starts after i rows of decreasing length.
        return std::uint64_t{i} * n_ - std::uint64_t{i} * (i - 1) / 2 + (j - i);
    }

    std::uint32_t n_;
    std::vector<std::uint64_t> dense_;
    std::unordered_map<std::uint64_t, std::uint64_t> sparse_;
};

// Pairs whose left position lies in [begin, end) of the flattened stream.
CooccurMatrix accumulate_range(const TokenStream& stream, std::span<const std::uint64_t> doc_ends,
                               std::uint64_t begin, std::uint64_t end, const CooccurOptions& opt,
                               std::uint64_t denom) {
    Accumulator acc(stream.vocab_size());
    const auto ids = stream.all_ids();
    std::vector<std::uint64_t> increment(opt.window + 1);
    for (std::uint32_t d = 1; d <= opt.window; ++d) increment[d] = opt.distance_weighting ? denom / d : denom;

    auto doc_it = std::upper_bound(doc_ends.begin(), doc_ends.end(), begin);
    for (std::uint64_t p = begin; p < end; ++p) {
        while (*doc_it <= p) ++doc_it;
        const std::uint64_t limit = std::min<std::uint64_t>(*doc_it, p + opt.window + 1);
        const TokenId a = ids[p];
        for (std::uint64_t q = p + 1; q < limit; ++q) {
            const TokenId b = ids[q];
            const std::uint64_t inc = increment[q - p];
            if (a == b)
                acc.add(a, a, 2 * inc);
            else if (a < b)
                acc.add(a, b, inc);
            else
                acc.add(b, a, inc);
        }
    }
    return CooccurMatrix::from_entries(stream.vocab_size(), opt.window, acc.sorted_entries());
}

}  // namespace

CooccurMatrix::CooccurMatrix(std::uint32_t vocab_size, std::uint32_t window)
    : vocab_size_(vocab_size), window_(window), denom_(unit_denominator(window)) {}

std::uint64_t CooccurMatrix::unit_denominator(std::uint32_t window) {
    check_window(window);
    std::uint64_t l = 1;
    for (std::uint64_t d = 2; d <= window; ++d) l = std::lcm(l, d);
    return l;
}

CooccurMatrix CooccurMatrix::from_entries(std::uint32_t vocab_size, std::uint32_t window,
                                          std::vector<CooccurEntry> entries) {
    CooccurMatrix m(vocab_size, window);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        if (e.i > e.j) fail_data("co-occurrence entry ", k, " has i > j (", e.i, ", ", e.j, ")");
        if (e.j >= vocab_size) fail_data("co-occurrence entry ", k, " index ", e.j, " >= vocab_size ", vocab_size);
        if (k > 0) {
            const auto& p = entries[k - 1];
            if (!(p.i < e.i || (p.i == e.i && p.j < e.j)))
                fail_data("co-occurrence entries not strictly sorted at record ", k);
        }
    }
    m.entries_ = std::move(entries);
    return m;
}

double CooccurMatrix::weight(TokenId i, TokenId j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), CooccurEntry{i, j, 0},
                               [](const CooccurEntry& a, const CooccurEntry& b) {
                                   return a.i != b.i ? a.i < b.i : a.j < b.j;
                               });
    if (it == entries_.end() || it->i != i || it->j != j) return 0.0;
    return to_weight(it->units);
}

std::uint64_t CooccurMatrix::total_units() const {
    std::uint64_t total = 0;
    for (const auto& e : entries_) total = checked_add(total, e.i == e.j ? e.units : checked_add(e.units, e.units));
    return total;
}

double CooccurMatrix::total_weight() const { return to_weight(total_units()); }

std::vector<double> CooccurMatrix::row_mass() const {
    std::vector<double> mass(vocab_size_, 0.0);
    for (const auto& e : entries_) {
        const double w = to_weight(e.units);
        mass[e.i] += w;
        if (e.i != e.j) mass[e.j] += w;
    }
    return mass;
}

CooccurMatrix accumulate(const TokenStream& stream, const CooccurOptions& options) {
    check_window(options.window);
    const std::uint64_t denom = CooccurMatrix::unit_denominator(options.window);
    std::vector<std::uint64_t> doc_ends;
    doc_ends.reserve(stream.doc_count());
    std::uint64_t pos = 0;
    for (std::size_t d = 0; d < stream.doc_count(); ++d) {
        pos += stream.doc(d).size();
        if (!stream.doc(d).empty()) doc_ends.push_back(pos);
    }
    const std::uint64_t n = stream.total_tokens();
    const unsigned shards = std::max(1u, options.shards);
    std::vector<CooccurMatrix> parts(shards);
    parallel_for(shards, resolve_threads(options.threads), [&](std::size_t s) {
        parts[s] = accumulate_range(stream, doc_ends, n * s / shards, n * (s + 1) / shards, options, denom);
    });
    CooccurMatrix result(stream.vocab_size(), options.window);
    for (const auto& part : parts) result = merge(result, part);
    return result;
}

CooccurMatrix merge(const CooccurMatrix& a, const CooccurMatrix& b) {
    if (a.vocab_size() != b.vocab_size() || a.window() != b.window())
        fail_usage("cannot merge co-occurrence matrices: vocab_size ", a.vocab_size(), " vs ", b.vocab_size(),
                   ", window ", a.window(), " vs ", b.window());
    const auto ea = a.entries();
    const auto eb = b.entries();
    std::vector<CooccurEntry> out;
    out.reserve(ea.size() + eb.size());
    std::size_t x = 0, y = 0;
    while (x < ea.size() || y < eb.size()) {
        if (y == eb.size() || (x < ea.size() && (ea[x].i < eb[y].i || (ea[x].i == eb[y].i && ea[x].j < eb[y].j)))) {
            out.push_back(ea[x++]);
        } else if (x == ea.size() || eb[y].i < ea[x].i || (eb[y].i == ea[x].i && eb[y].j < ea[x].j)) {
            out.push_back(eb[y++]);
        } else {
            out.push_back({ea[x].i, ea[x].j, checked_add(ea[x].units, eb[y].units)});
            ++x;
            ++y;
        }
    }
    return CooccurMatrix::from_entries(a.vocab_size(), a.window(), std::move(out));
}

std::vector<std::uint8_t> encode_cooccur(const CooccurMatrix& m) {
    io::Writer w;
    w.reserve(20 + m.entries().size() * 16);
    w.magic("TCOC");
    w.u32(m.vocab_size());
    w.u32(m.window());
    w.u64(m.entries().size());
    for (const auto& e : m.entries()) {
        w.u32(e.i);
        w.u32(e.j);
        w.f64(m.to_weight(e.units));
    }
    return std::move(w.buffer());
}

CooccurMatrix decode_cooccur(std::span<const std::uint8_t> bytes) {
    io::Reader r(bytes.data(), bytes.size(), "TCOC");
    r.expect_magic("TCOC");
    const std::uint32_t vocab_size = r.u32();
    const std::uint32_t window = r.u32();
    if (window < 1 || window > CooccurMatrix::kMaxWindow) fail_data("TCOC: unsupported window ", window);
    const std::uint64_t count = r.u64();
    if (count > r.remaining() / 16) fail_data("TCOC: truncated payload (", count, " records declared)");
    const auto denom = static_cast<double>(CooccurMatrix::unit_denominator(window));
    std::vector<CooccurEntry> entries;
    entries.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint32_t i = r.u32();
        const std::uint32_t j = r.u32();
        const double w = r.f64();
        if (!std::isfinite(w) || w < 0.0) fail_data("TCOC: record ", k, " has invalid weight ", w);
        const double units = std::round(w * denom);
        if (units >= 0x1.0p63) fail_data("TCOC: record ", k, " weight too large");
        entries.push_back({i, j, static_cast<std::uint64_t>(units)});
    }
    r.expect_end();
    return CooccurMatrix::from_entries(vocab_size, window, std::move(entries));
}

void write_cooccur(const CooccurMatrix& m, const std::filesystem::path& path) {
    io::write_file(path, encode_cooccur(m));
}

CooccurMatrix read_cooccur(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    try {
        return decode_cooccur(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace tokalign
