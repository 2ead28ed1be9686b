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
#include <span>
#include <string>
#include <vector>

#include "tokalign/corpus.hpp"

namespace tokalign {

/// Tokenizer compression in bytes of raw UTF-8 text per produced token.
struct CompressionReport {
    double bytes_per_token = 0.0;
    std::uint64_t total_bytes = 0;
    std::uint64_t total_tokens = 0;
    std::vector<double> per_document;  // NaN for documents with no tokens
};

/// total_bytes / total_tokens over all documents. `tokens` must be the
/// tokenization of exactly `documents` (same document count). Data error when
/// there are no tokens.
CompressionReport compression_rate(std::span<const std::string> documents, const TokenStream& tokens,
                                   bool per_document = false);

}  // namespace tokalign
