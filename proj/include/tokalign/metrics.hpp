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

// Lexicon evaluation by corpus conversion.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokalign/align.hpp"
#include "tokalign/corpus.hpp"

namespace tokalign {

/// Replaces every token with its rank-1 candidate. Documents keep their
/// lengths. Data error if a token is outside the lexicon's query vocabulary.
TokenStream convert_corpus(const TokenStream& stream, const AlignmentLexicon& lexicon);

struct BleuScore {
    double bleu1 = 0.0;
    double brevity_penalty = 0.0;
    double unigram_precision = 0.0;
    std::uint64_t candidate_length = 0;  // c
    std::uint64_t reference_length = 0;  // r
    std::uint64_t clipped_matches = 0;
};

/// Corpus-level clipped unigram precision times exp(min(0, 1 - r/c)). Clipping
/// is per document. Usage error on differing document counts, Data error on
/// an empty candidate.
BleuScore bleu1(const TokenStream& candidate, const TokenStream& reference, unsigned threads = 1);

/// Precomputed document embeddings in text form: one document per line,
/// whitespace separated floats, all lines of equal width.
std::vector<std::vector<double>> read_document_embeddings(const std::filesystem::path& path);

/// Mean over documents of cos(a[i], b[i]). Usage error on count or width
/// mismatch, Data error on a zero vector.
double semantic_similarity(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b);

/// Single-file layout: rows alternate A, B per document.
double semantic_similarity_interleaved(std::span<const std::vector<double>> rows);

struct ConversionReport {
    Direction direction = Direction::TgtToSrc;
    BleuScore bleu;
    std::optional<double> semantic_score;
    std::size_t documents = 0;
    std::uint64_t query_tokens = 0;      // tokens in the converted corpus
    std::uint64_t reference_tokens = 0;  // tokens in the reference corpus
};

std::string report_to_json(std::span<const ConversionReport> reports);

/// The same text tokenized by both tokenizers. The t2s lexicon converts the
/// target stream and is scored against the source stream; s2t the reverse.
struct BidirectionalInput {
    const TokenStream* src_stream = nullptr;
    const TokenStream* tgt_stream = nullptr;
    const AlignmentLexicon* t2s = nullptr;
    const AlignmentLexicon* s2t = nullptr;
};

std::vector<ConversionReport> evaluate_bidirectional(const BidirectionalInput& in, unsigned threads = 1);

/// Converted text per document, used to feed an external sentence encoder.
std::vector<std::string> detokenize_stream(const TokenStream& stream, const Vocab& vocab);

/// Fraction of queries whose rank-1 candidate equals truth[q], over the
/// queries listed in `queries` (all queries when empty).
double top1_accuracy(const AlignmentLexicon& lexicon, std::span<const TokenId> truth,
                     std::span<const TokenId> queries = {});

}  // namespace tokalign
