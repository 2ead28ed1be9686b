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

// Token lexicon induction between two embedding spaces: normalization,
// orthogonal Procrustes, CSLS retrieval and stochastic self-learning.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokalign/embeddings.hpp"
#include "tokalign/vocab.hpp"

namespace tokalign {

using TokenPair = std::pair<TokenId, TokenId>;  // (src_id, tgt_id)

enum class Similarity { Cosine, Csls };
enum class Direction { TgtToSrc, SrcToTgt };
enum class Induction { Mutual, Union, Forward };

Similarity parse_similarity(std::string_view name);
std::string_view to_string(Similarity s);
Direction parse_direction(std::string_view name);
std::string_view to_string(Direction d);
Induction parse_induction(std::string_view name);
std::string_view to_string(Induction i);

/// Unit-length rows, mean-centered columns (mean over covered rows), unit-length
/// rows again. Data error listing the IDs of covered all-zero rows; uncovered
/// zero rows stay zero.
Embeddings normalize(const Embeddings& emb);

/// Mean of the k largest entries of each row.
Eigen::VectorXd topk_mean_rows(const RowMatrix& sims, int k);

/// CSLS(x, y) = 2 cos(x, y) - r_T(x) - r_S(y) for every row y of `candidates`.
/// r_T(x): mean cosine of x to its k nearest candidates; r_S(y): mean cosine of
/// y to its k nearest rows of `queries`. Rows are normalized internally.
/// Usage error unless 1 <= k <= min(#candidates, #queries).
Eigen::VectorXd csls_score(const Eigen::VectorXd& query, const RowMatrix& candidates, const RowMatrix& queries,
                           int k);

/// Full CSLS matrix, queries x candidates, computed in row blocks.
RowMatrix csls_matrix(const RowMatrix& queries, const RowMatrix& candidates, int k, unsigned threads = 1);

/// Orthogonal W minimizing ||Y W - X||_F: W = U V^T from the SVD of Y^T X.
/// Data error if Y^T X is all zero or inputs are non-finite.
RowMatrix procrustes(const RowMatrix& x, const RowMatrix& y);

struct AlignConfig {
    int csls_k = 10;
    Induction induction = Induction::Union;  // both directions' nearest neighbours
    bool self_learning = true;
    /// Build the initial dictionary from similarity distributions when the
    /// seed dictionary is empty.
    bool unsupervised_init = false;
    std::size_t unsupervised_vocab = 4000;  // most frequent covered tokens used for that init
    std::size_t induction_vocab = 20000;    // most frequent covered tokens used in induction
    double keep_prob_initial = 0.1;
    double keep_prob_multiplier = 2.0;
    std::uint32_t patience = 50;
    double tol = 1e-6;
    std::uint32_t max_iter = 1000;
    std::uint64_t seed = 7;
    unsigned threads = 1;

    void validate() const;
};

/// Source rows map into the shared space through w_src, target rows through
/// w_tgt (identity in this implementation: the shared space is the target space).
struct MappingPair {
    RowMatrix w_src;
    RowMatrix w_tgt;
    double objective = 0.0;           // mean best cosine, both directions, of the returned mapping
    std::uint32_t iterations = 0;     // loop iterations executed
    std::uint32_t best_iteration = 0; // iteration of the last objective improvement
    std::size_t dictionary_size = 0;  // pairs behind the returned mapping
    bool reached_max_iter = false;    // warning: stopped by max_iter, best-so-far returned

    /// w_src * w_tgt^T: maps source vectors onto target vectors.
    RowMatrix composed() const { return w_src * w_tgt.transpose(); }
};

/// Alternates Procrustes with dictionary re-induction by CSLS nearest neighbours
/// under stochastic dropout (keep probability grows by keep_prob_multiplier each
/// time `patience` rounds pass without a `tol` improvement; stops once it has
/// reached 1 and stagnated again). Embeddings should already be normalized.
MappingPair self_learn_align(const Embeddings& src, const Embeddings& tgt, std::span<const TokenPair> seed,
                             const AlignConfig& cfg);

/// Mean best cosine (source->target and target->source, averaged) over the
/// induction vocabularies under `mapping`.
double mapping_objective(const Embeddings& src, const Embeddings& tgt, const MappingPair& mapping,
                         const AlignConfig& cfg);

struct LexiconCandidate {
    TokenId id = 0;
    double score = 0.0;

    friend bool operator==(const LexiconCandidate&, const LexiconCandidate&) = default;
};

struct LexiconEntry {
    std::vector<LexiconCandidate> candidates;  // ranked, scores non-increasing
    bool direct = false;                        // shared token copied without alignment
    bool low_confidence = false;                // query had no training signal

    friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

/// Per query-token ranked candidate lists. entries[q] belongs to query ID q.
struct AlignmentLexicon {
    Direction direction = Direction::TgtToSrc;
    std::size_t candidate_vocab = 0;
    std::vector<LexiconEntry> entries;

    std::size_t query_vocab() const { return entries.size(); }
    std::size_t direct_count() const;
    /// Rank-1 candidate; Data error if the query has none.
    TokenId top1(TokenId query) const;

    /// Usage/Data error if an invariant is broken (empty entries, unsorted
    /// scores, candidate IDs out of range).
    void validate() const;

    friend bool operator==(const AlignmentLexicon&, const AlignmentLexicon&) = default;
};

struct LexiconOptions {
    Direction direction = Direction::TgtToSrc;
    std::size_t top_n = 3;
    Similarity similarity = Similarity::Csls;
    int csls_k = 10;
    unsigned threads = 1;
};

/// Shared tokens get a direct pair to their byte-identical counterpart and are
/// not retrieved; every other query gets top_n candidates over the mapped
/// spaces. Queries without coverage are ranked by cosine and flagged
/// low-confidence. Ties go to the lower candidate ID.
AlignmentLexicon extract_lexicon(const Embeddings& src, const Embeddings& tgt, const MappingPair& mapping,
                                 const SharedTokenSet& shared, const LexiconOptions& options);

/// The lexicon mapping every query to itself via direct pairs (identical vocabularies).
AlignmentLexicon identity_lexicon(std::size_t vocab_size, Direction direction);

/// TSV: header "query_id candidate_id rank score direct" (tab separated) followed
/// by "direction=..", "query_vocab=..", "candidate_vocab=.." fields, then one row
/// per (query, candidate). Scores use 17 significant digits.
std::string lexicon_to_tsv(const AlignmentLexicon& lex);
AlignmentLexicon lexicon_from_tsv(std::string_view text);
void write_lexicon_tsv(const AlignmentLexicon& lex, const std::filesystem::path& path);
AlignmentLexicon read_lexicon_tsv(const std::filesystem::path& path);

/// JSON variant with top-n lists and the low-confidence flag.
std::string lexicon_to_json(const AlignmentLexicon& lex);
AlignmentLexicon lexicon_from_json(std::string_view text);

}  // namespace tokalign
