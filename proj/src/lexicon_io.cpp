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

#include <charconv>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

#include "tokalign/align.hpp"
#include "tokalign/binary_io.hpp"
#include "tokalign/error.hpp"

namespace tokalign {
namespace {

constexpr std::string_view kColumns = "query_id\tcandidate_id\trank\tscore\tdirect";

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_uint(std::string_view s, std::size_t line_no, const char* field) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        fail_data("lexicon TSV line ", line_no, ": bad ", field, " \"", s, "\"");
    return v;
}

double parse_double(std::string_view s, std::size_t line_no) {
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) fail_data("lexicon TSV line ", line_no, ": bad score \"", s, "\"");
    return v;
}

}  // namespace

std::string lexicon_to_tsv(const AlignmentLexicon& lex) {
    lex.validate();
    std::string out(kColumns);
    out += "\tdirection=";
    out += to_string(lex.direction);
    out += "\tquery_vocab=" + std::to_string(lex.query_vocab());
    out += "\tcandidate_vocab=" + std::to_string(lex.candidate_vocab);
    out += '\n';
    char buf[64];
    for (std::size_t q = 0; q < lex.entries.size(); ++q) {
        const auto& e = lex.entries[q];
        for (std::size_t r = 0; r < e.candidates.size(); ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", e.candidates[r].score);
            out += std::to_string(q) + '\t' + std::to_string(e.candidates[r].id) + '\t' + std::to_string(r + 1) + '\t' +
                   buf + '\t' + (e.direct ? '1' : '0') + '\n';
        }
    }
    return out;
}

AlignmentLexicon lexicon_from_tsv(std::string_view text) {
    const auto lines = split(text, '\n');
    if (lines.empty() || lines[0].substr(0, kColumns.size()) != kColumns)
        fail_data("lexicon TSV: missing header line");
    AlignmentLexicon lex;
    std::size_t query_vocab = 0;
    bool have_dir = false, have_q = false, have_c = false;
    const auto header = split(lines[0], '\t');
    for (std::size_t k = 5; k < header.size(); ++k) {
        const auto f = header[k];
        const auto eq = f.find('=');
        if (eq == std::string_view::npos) fail_data("lexicon TSV: malformed header field \"", f, "\"");
        const auto key = f.substr(0, eq), value = f.substr(eq + 1);
        if (key == "direction") {
            lex.direction = parse_direction(value);
            have_dir = true;
        } else if (key == "query_vocab") {
            query_vocab = parse_uint(value, 1, "query_vocab");
            have_q = true;
        } else if (key == "candidate_vocab") {
            lex.candidate_vocab = parse_uint(value, 1, "candidate_vocab");
            have_c = true;
        }
    }
    if (!have_dir || !have_q || !have_c)
        fail_data("lexicon TSV: header must carry direction, query_vocab and candidate_vocab");
    lex.entries.resize(query_vocab);

    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto line = lines[ln];
        if (line.empty()) {
            if (ln + 1 == lines.size()) break;
            fail_data("lexicon TSV line ", ln + 1, ": empty line");
        }
        const auto f = split(line, '\t');
        if (f.size() != 5) fail_data("lexicon TSV line ", ln + 1, ": expected 5 fields, got ", f.size());
        const auto q = parse_uint(f[0], ln + 1, "query_id");
        const auto c = parse_uint(f[1], ln + 1, "candidate_id");
        const auto rank = parse_uint(f[2], ln + 1, "rank");
        const double score = parse_double(f[3], ln + 1);
        const auto direct = parse_uint(f[4], ln + 1, "direct");
        if (q >= query_vocab) fail_data("lexicon TSV line ", ln + 1, ": query_id ", q, " >= query_vocab");
        if (direct > 1) fail_data("lexicon TSV line ", ln + 1, ": direct must be 0 or 1");
        auto& e = lex.entries[q];
        if (rank != e.candidates.size() + 1)
            fail_data("lexicon TSV line ", ln + 1, ": rank ", rank, " out of sequence for query ", q);
        if (rank > 1 && e.direct != (direct == 1))
            fail_data("lexicon TSV line ", ln + 1, ": inconsistent direct flag for query ", q);
        e.direct = direct == 1;
        e.candidates.push_back({static_cast<TokenId>(c), score});
    }
    for (std::size_t q = 0; q < lex.entries.size(); ++q)
        if (lex.entries[q].candidates.empty()) fail_data("lexicon TSV: query ", q, " is not covered");
    lex.validate();
    return lex;
}

void write_lexicon_tsv(const AlignmentLexicon& lex, const std::filesystem::path& path) {
    const auto text = lexicon_to_tsv(lex);
    io::write_file(path, text.data(), text.size());
}

AlignmentLexicon read_lexicon_tsv(const std::filesystem::path& path) {
    try {
        return lexicon_from_tsv(io::read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string lexicon_to_json(const AlignmentLexicon& lex) {
    lex.validate();
    nlohmann::ordered_json j;
    j["direction"] = to_string(lex.direction);
    j["query_vocab"] = lex.query_vocab();
    j["candidate_vocab"] = lex.candidate_vocab;
    auto& entries = j["entries"] = nlohmann::ordered_json::array();
    for (std::size_t q = 0; q < lex.entries.size(); ++q) {
        const auto& e = lex.entries[q];
        nlohmann::ordered_json row;
        row["query"] = q;
        row["direct"] = e.direct;
        row["low_confidence"] = e.low_confidence;
        auto& cands = row["candidates"] = nlohmann::ordered_json::array();
        for (const auto& c : e.candidates) cands.push_back({c.id, c.score});
        entries.push_back(std::move(row));
    }
    return j.dump(1) + "\n";
}

AlignmentLexicon lexicon_from_json(std::string_view text) {
    AlignmentLexicon lex;
    try {
        const auto j = nlohmann::json::parse(text.begin(), text.end());
        lex.direction = parse_direction(j.at("direction").get<std::string>());
        lex.candidate_vocab = j.at("candidate_vocab").get<std::size_t>();
        lex.entries.resize(j.at("query_vocab").get<std::size_t>());
        for (const auto& row : j.at("entries")) {
            const auto q = row.at("query").get<std::size_t>();
            if (q >= lex.entries.size()) fail_data("lexicon JSON: query ", q, " out of range");
            auto& e = lex.entries[q];
            e.direct = row.at("direct").get<bool>();
            e.low_confidence = row.value("low_confidence", false);
            for (const auto& c : row.at("candidates"))
                e.candidates.push_back({c.at(0).get<TokenId>(), c.at(1).get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        fail_data("lexicon JSON: ", e.what());
    }
    lex.validate();
    return lex;
}

}  // namespace tokalign
