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

// TAL tensor container.
//
//   "TAL1" | u64 header_len | JSON header (space padded to 8 bytes) | payload
//
// The header maps tensor name -> {"dtype":"f32","shape":[...],"offset":o,"length":n}
// with offsets relative to the payload start, plus an optional "__metadata__"
// object of string -> string. Payloads are little-endian, row-major, and tile
// the payload region exactly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tokalign {

struct Tensor {
    std::vector<std::uint64_t> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<std::uint64_t> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

    std::uint64_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::uint64_t row_size() const;
    std::span<float> row(std::uint64_t r) { return {data.data() + r * row_size(), row_size()}; }
    std::span<const float> row(std::uint64_t r) const { return {data.data() + r * row_size(), row_size()}; }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct TensorBundle {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> metadata;

    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const { return tensors.count(name) != 0; }

    friend bool operator==(const TensorBundle&, const TensorBundle&) = default;
};

std::vector<std::uint8_t> encode_bundle(const TensorBundle& bundle);
TensorBundle decode_bundle(std::span<const std::uint8_t> bytes);
void write_bundle(const TensorBundle& bundle, const std::filesystem::path& path);
TensorBundle read_bundle(const std::filesystem::path& path);

}  // namespace tokalign
