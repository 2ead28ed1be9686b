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

#include "tokalign/tensor_file.hpp"

#include <algorithm>
#include <cstring>

#include <json.hpp>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"

namespace tokalign {
namespace {

constexpr std::string_view kMagic = "TAL1";

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
    std::uint64_t n = 1;
    for (auto s : shape)
        if (__builtin_mul_overflow(n, s, &n)) fail_data("TAL: tensor shape overflows");
    return n;
}

}  // namespace

std::uint64_t Tensor::row_size() const {
    if (shape.empty()) return 1;
    std::uint64_t n = 1;
    for (std::size_t k = 1; k < shape.size(); ++k) n *= shape[k];
    return n;
}

const Tensor& TensorBundle::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) fail_data("tensor bundle has no tensor \"", name, "\"");
    return it->second;
}

std::vector<std::uint8_t> encode_bundle(const TensorBundle& bundle) {
    nlohmann::json header = nlohmann::json::object();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : bundle.tensors) {
        if (name == "__metadata__") fail_usage("TAL: tensor name \"__metadata__\" is reserved");
        if (element_count(t.shape) != t.data.size())
            fail_usage("TAL: tensor \"", name, "\" has ", t.data.size(), " values for shape of ",
                       element_count(t.shape));
        const std::uint64_t length = t.data.size() * sizeof(float);
        header[name] = {{"dtype", "f32"}, {"shape", t.shape}, {"offset", offset}, {"length", length}};
        offset += length;
    }
    if (!bundle.metadata.empty()) header["__metadata__"] = bundle.metadata;
    std::string text = header.dump();
    text.append((8 - (kMagic.size() + 8 + text.size()) % 8) % 8, ' ');

    io::Writer w;
    w.reserve(kMagic.size() + 8 + text.size() + offset);
    w.magic(kMagic);
    w.u64(text.size());
    w.bytes(text.data(), text.size());
    for (const auto& [name, t] : bundle.tensors) w.bytes(t.data.data(), t.data.size() * sizeof(float));
    return std::move(w.buffer());
}

TensorBundle decode_bundle(std::span<const std::uint8_t> bytes) {
    io::Reader r(bytes.data(), bytes.size(), "TAL");
    r.expect_magic(kMagic);
    const std::uint64_t header_len = r.u64();
    if (header_len > r.remaining()) fail_data("TAL: header length ", header_len, " exceeds file size");
    const auto* hp = r.take(header_len, "header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hp, hp + header_len);
    } catch (const nlohmann::json::exception& e) {
        fail_data("TAL: bad JSON header: ", e.what());
    }
    if (!header.is_object()) fail_data("TAL: header is not a JSON object");

    const std::uint8_t* payload = bytes.data() + r.position();
    const std::uint64_t payload_size = r.remaining();

    TensorBundle bundle;
    struct Span {
        std::uint64_t offset, length;
        std::string name;
    };
    std::vector<Span> spans;
    for (const auto& [name, desc] : header.items()) {
        if (name == "__metadata__") {
            if (!desc.is_object()) fail_data("TAL: __metadata__ must be an object");
            for (const auto& [k, v] : desc.items()) {
                if (!v.is_string()) fail_data("TAL: metadata value for \"", k, "\" is not a string");
                bundle.metadata[k] = v.get<std::string>();
            }
            continue;
        }
        try {
            if (desc.at("dtype").get<std::string>() != "f32")
                fail_data("TAL: tensor \"", name, "\" has unsupported dtype ", desc.at("dtype").dump());
            Tensor t;
            t.shape = desc.at("shape").get<std::vector<std::uint64_t>>();
            const auto offset = desc.at("offset").get<std::uint64_t>();
            const auto length = desc.at("length").get<std::uint64_t>();
            const std::uint64_t n = element_count(t.shape);
            if (n > UINT64_MAX / 4 || length != n * sizeof(float))
                fail_data("TAL: tensor \"", name, "\" declares length ", length, " but shape needs ", n * 4,
                          " bytes");
            if (offset > payload_size || length > payload_size - offset)
                fail_data("TAL: tensor \"", name, "\" payload [", offset, ", ", offset + length,
                          ") exceeds payload length ", payload_size);
            t.data.resize(n);
            if (length) std::memcpy(t.data.data(), payload + offset, length);
            spans.push_back({offset, length, name});
            bundle.tensors.emplace(name, std::move(t));
        } catch (const nlohmann::json::exception& e) {
            fail_data("TAL: malformed descriptor for \"", name, "\": ", e.what());
        }
    }
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        return a.offset != b.offset ? a.offset < b.offset : a.length < b.length;
    });
    std::uint64_t cursor = 0;
    for (const auto& s : spans) {
        if (s.offset != cursor)
            fail_data("TAL: tensor \"", s.name, "\" at offset ", s.offset, " leaves a gap or overlap (expected ",
                      cursor, ")");
        cursor += s.length;
    }
    if (cursor != payload_size)
        fail_data("TAL: payload length mismatch: tensors cover ", cursor, " bytes, file has ", payload_size);
    return bundle;
}

void write_bundle(const TensorBundle& bundle, const std::filesystem::path& path) {
    io::write_file(path, encode_bundle(bundle));
}

TensorBundle read_bundle(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    try {
        return decode_bundle(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace tokalign
