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


#include "tokalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"
#include "tokalign/parallel.hpp"

namespace tokalign {

TokenStream convert_corpus(const TokenStream& stream, const AlignmentLexicon& lexicon) {
    if (stream.vocab_size() > lexicon.query_vocab())
        fail_data("convert: stream vocabulary (", stream.vocab_size(), ") is larger than the lexicon query vocabulary (",
                  lexicon.query_vocab(), ")");
    if (lexicon.candidate_vocab > 0xFFFFFFFFull) fail_data("convert: candidate vocabulary too large");
    std::vector<TokenId> map(lexicon.query_vocab());
    for (std::size_t q = 0; q < map.size(); ++q) {
        if (lexicon.entries[q].candidates.empty()) fail_data("convert: token ", q, " is not covered by the lexicon");
        map[q] = lexicon.entries[q].candidates.front().id;
    }
    TokenStream out(static_cast<std::uint32_t>(lexicon.candidate_vocab));
    out.reserve(stream.doc_count(), stream.total_tokens());
    std::vector<TokenId> buf;
    for (std::size_t d = 0; d < stream.doc_count(); ++d) {
        const auto doc = stream.doc(d);
        buf.resize(doc.size());
        for (std::size_t k = 0; k < doc.size(); ++k) buf[k] = map[doc[k]];
        out.add_document(buf);
    }
    return out;
}

BleuScore bleu1(const TokenStream& candidate, const TokenStream& reference, unsigned threads) {
    if (candidate.doc_count() != reference.doc_count())
        fail_usage("BLEU-1: candidate has ", candidate.doc_count(), " documents, reference has ", reference.doc_count());
    if (candidate.total_tokens() == 0) fail_data("BLEU-1: empty candidate");
    const std::size_t docs = candidate.doc_count();
    std::vector<std::uint64_t> matches(docs, 0);
    parallel_for(docs, resolve_threads(threads), [&](std::size_t d) {
        std::unordered_map<TokenId, std::int64_t> ref_counts;
        for (TokenId t : reference.doc(d)) ++ref_counts[t];
        std::uint64_t m = 0;
        for (TokenId t : candidate.doc(d)) {
            auto it = ref_counts.find(t);
            if (it != ref_counts.end() && it->second > 0) {
                --it->second;
                ++m;
            }
        }
        matches[d] = m;
    });
    BleuScore s;
    for (auto m : matches) s.clipped_matches += m;
    s.candidate_length = candidate.total_tokens();
    s.reference_length = reference.total_tokens();
    s.unigram_precision = static_cast<double>(s.clipped_matches) / static_cast<double>(s.candidate_length);
    const double c = static_cast<double>(s.candidate_length), r = static_cast<double>(s.reference_length);
    s.brevity_penalty = std::exp(std::min(0.0, 1.0 - r / c));
    s.bleu1 = s.brevity_penalty * s.unigram_precision;
    return s;
}

std::vector<std::vector<double>> read_document_embeddings(const std::filesystem::path& path) {
    const auto docs = split_documents(io::read_text_file(path));
    std::vector<std::vector<double>> rows;
    rows.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::vector<double> row;
        const char* p = docs[i].c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) break;
            row.push_back(v);
            p = end;
        }
        while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
        if (*p != '\0') fail_data(path.string(), ": line ", i + 1, ": unparsable value");
        if (row.empty()) fail_data(path.string(), ": line ", i + 1, " is empty");
        if (!rows.empty() && row.size() != rows.front().size())
            fail_data(path.string(), ": line ", i + 1, " has ", row.size(), " values, expected ", rows.front().size());
        for (double v : row)
            if (!std::isfinite(v)) fail_data(path.string(), ": line ", i + 1, ": non-finite value");
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b, std::size_t doc) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) fail_data("semantic similarity: zero embedding vector for document ", doc);
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double semantic_similarity(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
    if (a.size() != b.size()) fail_usage("semantic similarity: ", a.size(), " vs ", b.size(), " documents");
    if (a.empty()) fail_usage("semantic similarity: no documents");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) fail_usage("semantic similarity: embedding width differs for document ", i);
        sum += cosine(a[i], b[i], i);
    }
    return sum / static_cast<double>(a.size());
}

double semantic_similarity_interleaved(std::span<const std::vector<double>> rows) {
    if (rows.size() % 2 != 0) fail_usage("semantic similarity: interleaved file has an odd number of rows");
    std::vector<std::vector<double>> a, b;
    for (std::size_t i = 0; i < rows.size(); i += 2) {
        a.push_back(rows[i]);
        b.push_back(rows[i + 1]);
    }
    return semantic_similarity(a, b);
}

std::string report_to_json(std::span<const ConversionReport> reports) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json o;
        o["direction"] = to_string(r.direction);
        o["bleu1"] = r.bleu.bleu1;
        o["brevity_penalty"] = r.bleu.brevity_penalty;
        o["unigram_precision"] = r.bleu.unigram_precision;
        o["clipped_matches"] = r.bleu.clipped_matches;
        o["candidate_length"] = r.bleu.candidate_length;
        o["reference_length"] = r.bleu.reference_length;
        o["semantic_score"] = r.semantic_score ? nlohmann::ordered_json(*r.semantic_score) : nlohmann::ordered_json();
        o["documents"] = r.documents;
        j.push_back(std::move(o));
    }
    return j.dump(2) + "\n";
}

std::vector<ConversionReport> evaluate_bidirectional(const BidirectionalInput& in, unsigned threads) {
    if (!in.src_stream || !in.tgt_stream) fail_usage("evaluate: both token streams are required");
    if (!in.t2s && !in.s2t) fail_usage("evaluate: no lexicon given");
    std::vector<ConversionReport> out;
    auto run = [&](const AlignmentLexicon& lex, Direction want, const TokenStream& query, const TokenStream& ref) {
        if (lex.direction != want)
            fail_usage("evaluate: lexicon direction is ", to_string(lex.direction), ", expected ", to_string(want));
        ConversionReport r;
        r.direction = want;
        const auto converted = convert_corpus(query, lex);
        r.bleu = bleu1(converted, ref, threads);
        r.documents = converted.doc_count();
        r.query_tokens = converted.total_tokens();
        r.reference_tokens = ref.total_tokens();
        out.push_back(r);
    };
    if (in.t2s) run(*in.t2s, Direction::TgtToSrc, *in.tgt_stream, *in.src_stream);
    if (in.s2t) run(*in.s2t, Direction::SrcToTgt, *in.src_stream, *in.tgt_stream);
    return out;
}

std::vector<std::string> detokenize_stream(const TokenStream& stream, const Vocab& vocab) {
    std::vector<std::string> docs;
    docs.reserve(stream.doc_count());
    for (std::size_t d = 0; d < stream.doc_count(); ++d) docs.push_back(detokenize(stream.doc(d), vocab));
    return docs;
}

double top1_accuracy(const AlignmentLexicon& lexicon, std::span<const TokenId> truth, std::span<const TokenId> queries) {
    if (truth.size() != lexicon.query_vocab())
        fail_usage("top-1 accuracy: truth has ", truth.size(), " entries for ", lexicon.query_vocab(), " queries");
    std::size_t hit = 0, n = 0;
    auto check = [&](TokenId q) {
        ++n;
        hit += lexicon.top1(q) == truth[q];
    };
    if (queries.empty()) {
        for (TokenId q = 0; q < truth.size(); ++q) check(q);
    } else {
        for (TokenId q : queries) check(q);
    }
    return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace tokalign
