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

#include "tokalign/compression.hpp"

#include <limits>

#include "tokalign/error.hpp"

namespace tokalign {

CompressionReport compression_rate(std::span<const std::string> documents, const TokenStream& tokens,
                                   bool per_document) {
    if (documents.size() != tokens.doc_count())
        fail_data("compression rate: ", documents.size(), " text documents but ", tokens.doc_count(),
                  " tokenized documents");
    CompressionReport r;
    for (const auto& d : documents) r.total_bytes += d.size();
    r.total_tokens = tokens.total_tokens();
    if (r.total_tokens == 0) fail_data("compression rate: corpus produced zero tokens");
    r.bytes_per_token = static_cast<double>(r.total_bytes) / static_cast<double>(r.total_tokens);
    if (per_document) {
        r.per_document.reserve(documents.size());
        for (std::size_t d = 0; d < documents.size(); ++d) {
            const auto n = tokens.doc(d).size();
            r.per_document.push_back(n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : static_cast<double>(documents[d].size()) / static_cast<double>(n));
        }
    }
    return r;
}

}  // namespace tokalign
