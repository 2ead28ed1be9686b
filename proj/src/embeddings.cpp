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

#include "tokalign/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"

namespace tokalign {

std::size_t Embeddings::covered_count() const {
    std::size_t n = 0;
    for (auto c : covered) n += c != 0;
    return n;
}

double Embeddings::coverage() const {
    return vocab_size() == 0 ? 0.0 : static_cast<double>(covered_count()) / static_cast<double>(vocab_size());
}

Embeddings Embeddings::from_matrix(RowMatrix m) {
    Embeddings e;
    e.covered.assign(static_cast<std::size_t>(m.rows()), 1);
    e.matrix = std::move(m);
    return e;
}

void Embeddings::validate() const {
    if (covered.size() != vocab_size())
        fail_data("embeddings: coverage has ", covered.size(), " flags for ", vocab_size(), " rows");
    if (!frequency.empty() && frequency.size() != vocab_size())
        fail_data("embeddings: frequency has ", frequency.size(), " entries for ", vocab_size(), " rows");
    if (!matrix.allFinite()) fail_data("embeddings contain NaN or Inf");
}

TensorBundle embeddings_to_bundle(const Embeddings& e) {
    e.validate();
    const std::uint64_t v = e.vocab_size(), d = e.dim();
    TensorBundle b;
    std::vector<float> data(v * d);
    for (std::uint64_t r = 0; r < v; ++r)
        for (std::uint64_t c = 0; c < d; ++c) data[r * d + c] = static_cast<float>(e.matrix(r, c));
    b.tensors.emplace("embedding", Tensor({v, d}, std::move(data)));
    b.tensors.emplace("coverage", Tensor({v}, std::vector<float>(e.covered.begin(), e.covered.end())));
    if (!e.frequency.empty())
        b.tensors.emplace("frequency", Tensor({v}, std::vector<float>(e.frequency.begin(), e.frequency.end())));
    b.metadata["trained_token_count"] = std::to_string(e.trained_token_count);
    return b;
}

Embeddings embeddings_from_bundle(const TensorBundle& b) {
    const Tensor& t = b.at("embedding");
    if (t.shape.size() != 2) fail_data("embedding tensor must be 2-D");
    const auto v = t.shape[0], d = t.shape[1];
    Embeddings e;
    e.matrix.resize(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
    for (std::uint64_t r = 0; r < v; ++r)
        for (std::uint64_t c = 0; c < d; ++c) e.matrix(r, c) = t.data[r * d + c];
    if (b.has("coverage")) {
        const auto& cov = b.at("coverage");
        if (cov.data.size() != v) fail_data("coverage tensor length ", cov.data.size(), " != ", v);
        for (float f : cov.data) e.covered.push_back(f != 0.0f);
    } else {
        e.covered.assign(v, 1);
    }
    if (b.has("frequency")) {
        const auto& f = b.at("frequency");
        e.frequency.assign(f.data.begin(), f.data.end());
    }
    if (auto it = b.metadata.find("trained_token_count"); it != b.metadata.end())
        e.trained_token_count = std::stoull(it->second);
    e.validate();
    return e;
}

void write_embeddings(const Embeddings& e, const std::filesystem::path& path) {
    write_bundle(embeddings_to_bundle(e), path);
}

Embeddings read_embeddings(const std::filesystem::path& path) {
    auto bundle = read_bundle(path);
    try {
        return embeddings_from_bundle(bundle);
    } catch (const Error& err) {
        throw Error(err.kind(), path.string() + ": " + err.what());
    }
}

void write_embeddings_text(const Embeddings& e, const std::filesystem::path& path) {
    e.validate();
    std::string out = std::to_string(e.vocab_size()) + " " + std::to_string(e.dim()) + "\n";
    char buf[32];
    for (std::size_t r = 0; r < e.vocab_size(); ++r) {
        out += std::to_string(r);
        for (std::size_t c = 0; c < e.dim(); ++c) {
            std::snprintf(buf, sizeof buf, " %.9g", e.matrix(r, c));
            out += buf;
        }
        out += '\n';
    }
    io::write_file(path, out.data(), out.size());
}

Embeddings read_embeddings_text(const std::filesystem::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::size_t v = 0, d = 0;
    if (!(in >> v >> d) || d == 0) fail_data(path.string(), ": bad embedding text header");
    RowMatrix m(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
    std::vector<bool> seen(v, false);
    for (std::size_t k = 0; k < v; ++k) {
        std::size_t id = 0;
        if (!(in >> id) || id >= v || seen[id]) fail_data(path.string(), ": bad or duplicate token id on row ", k);
        seen[id] = true;
        for (std::size_t c = 0; c < d; ++c)
            if (!(in >> m(id, c))) fail_data(path.string(), ": truncated vector for token ", id);
    }
    auto e = Embeddings::from_matrix(std::move(m));
    e.validate();
    return e;
}

}  // namespace tokalign
