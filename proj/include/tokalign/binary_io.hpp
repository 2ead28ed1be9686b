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

// Little-endian primitives shared by the binary formats (TITS, TCOC, THSR, TAL).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tokalign/error.hpp"

namespace tokalign::io {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const void* data, std::size_t size);
inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    write_file(path, bytes.data(), bytes.size());
}

/// Append-only byte sink.
class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    void magic(std::string_view m) { bytes(m.data(), m.size()); }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f32(float v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }

    void reserve(std::size_t n) { buf_.reserve(n); }
    std::size_t size() const { return buf_.size(); }
    std::vector<std::uint8_t>& buffer() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked cursor over a byte buffer. Every read past the end raises a
/// Data error tagged with `what` (normally the format name).
class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size, std::string what)
        : data_(data), size_(size), what_(std::move(what)) {}

    void expect_magic(std::string_view m) {
        need(m.size(), "magic");
        if (std::memcmp(data_ + pos_, m.data(), m.size()) != 0)
            fail_data(what_, ": bad magic (expected \"", m, "\")");
        pos_ += m.size();
    }
    std::uint8_t u8() { return scalar<std::uint8_t>("u8"); }
    std::uint32_t u32() { return scalar<std::uint32_t>("u32"); }
    std::uint64_t u64() { return scalar<std::uint64_t>("u64"); }
    float f32() { return scalar<float>("f32"); }
    double f64() { return scalar<double>("f64"); }

    const std::uint8_t* take(std::size_t n, const char* field) {
        need(n, field);
        const auto* p = data_ + pos_;
        pos_ += n;
        return p;
    }

    std::size_t remaining() const { return size_ - pos_; }
    std::size_t position() const { return pos_; }
    void expect_end() const {
        if (pos_ != size_) fail_data(what_, ": ", size_ - pos_, " trailing bytes after payload");
    }
    const std::string& what() const { return what_; }

private:
    template <class T>
    T scalar(const char* field) {
        need(sizeof(T), field);
        T v;
        std::memcpy(&v, data_ + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }
    void need(std::size_t n, const char* field) const {
        if (n > size_ - pos_)
            fail_data(what_, ": truncated payload reading ", field, " at offset ", pos_, " (need ", n,
                      " bytes, have ", size_ - pos_, ")");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string what_;
};

}  // namespace tokalign::io
