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

#include "tokalign/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

#include "tokalign/error.hpp"
#include "tokalign/parallel.hpp"
#include "tokalign/rng.hpp"

namespace tokalign {
namespace {

constexpr Eigen::Index kBlockRows = 256;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Unit-length rows; zero rows stay zero.
RowMatrix unit_rows(RowMatrix m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double n = m.row(r).norm();
        if (n > 0.0) m.row(r) /= n;
    }
    return m;
}

RowMatrix gather_rows(const RowMatrix& m, std::span<const TokenId> ids) {
    RowMatrix out(static_cast<Eigen::Index>(ids.size()), m.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(ids[k]);
    return out;
}

// Calls fn(row_index, similarity_row) for every row of a * b^T. Rows are
// produced in fixed blocks, so values do not depend on the thread count.
template <class Fn>
void for_each_sim_row(const RowMatrix& a, const RowMatrix& b, unsigned threads, Fn&& fn) {
    const Eigen::Index n = a.rows();
    const auto blocks = static_cast<std::size_t>((n + kBlockRows - 1) / kBlockRows);
    parallel_for(blocks, threads, [&](std::size_t blk) {
        const Eigen::Index start = static_cast<Eigen::Index>(blk) * kBlockRows;
        const Eigen::Index len = std::min(kBlockRows, n - start);
        const RowMatrix sims = a.middleRows(start, len) * b.transpose();
        for (Eigen::Index r = 0; r < len; ++r) fn(start + r, sims.row(r));
    });
}

template <class Row>
double topk_mean(const Row& row, int k) {
    std::vector<double> v(row.data(), row.data() + row.size());
    std::partial_sort(v.begin(), v.begin() + k, v.end(), std::greater<>());
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += v[i];
    return s / k;
}

// Covered token IDs ordered by decreasing frequency (ties: lower ID), cut to `limit`.
std::vector<TokenId> frequent_covered(const Embeddings& e, std::size_t limit) {
    std::vector<TokenId> ids;
    for (std::size_t t = 0; t < e.vocab_size(); ++t)
        if (e.covered[t]) ids.push_back(static_cast<TokenId>(t));
    if (!e.frequency.empty()) {
        std::stable_sort(ids.begin(), ids.end(),
                         [&](TokenId a, TokenId b) { return e.frequency[a] > e.frequency[b]; });
    }
    if (limit > 0 && ids.size() > limit) ids.resize(limit);
    return ids;
}

// Row normalization used for both embeddings and similarity distributions.
RowMatrix unit_center_unit(RowMatrix m) {
    m = unit_rows(std::move(m));
    if (m.rows() > 0) {
        const Eigen::RowVectorXd mean = m.colwise().mean();
        m.rowwise() -= mean;
    }
    return unit_rows(std::move(m));
}

struct InductionResult {
    std::vector<TokenPair> dictionary;
    double objective = 0.0;
};

// One dictionary induction round over the induction vocabularies.
class Inducer {
public:
    Inducer(const Embeddings& src, const Embeddings& tgt, const AlignConfig& cfg)
        : cfg_(cfg),
          src_ids_(frequent_covered(src, cfg.induction_vocab)),
          tgt_ids_(frequent_covered(tgt, cfg.induction_vocab)),
          xs_(gather_rows(src.matrix, src_ids_)),
          zt_(gather_rows(tgt.matrix, tgt_ids_)) {
        if (src_ids_.empty() || tgt_ids_.empty()) fail_data("alignment: no covered tokens to align");
    }

    InductionResult run(const RowMatrix& w_src, double keep_prob, std::uint32_t iteration) const {
        const RowMatrix xw = unit_rows(xs_ * w_src);
        const RowMatrix& zw = zt_;
        const auto ns = static_cast<std::size_t>(xw.rows());
        const auto nt = static_cast<std::size_t>(zw.rows());
        const int k_bwd = std::min<int>(cfg_.csls_k, static_cast<int>(ns));
        const int k_fwd = std::min<int>(cfg_.csls_k, static_cast<int>(nt));
        const unsigned threads = resolve_threads(cfg_.threads);

        std::vector<double> knn_bwd(nt), knn_fwd(ns), best_fwd(ns), best_bwd(nt);
        for_each_sim_row(zw, xw, threads, [&](Eigen::Index j, const auto& row) { knn_bwd[j] = topk_mean(row, k_bwd); });

        std::vector<std::int64_t> fwd(ns, -1), bwd(nt, -1);
        const std::uint64_t drop_seed = derive_seed(cfg_.seed, "induction");
        auto kept = [&](std::uint64_t dir, std::size_t a, std::size_t b) {
            return keep_prob >= 1.0 || to_unit(hash_key(drop_seed, iteration, (dir << 32) | a, b)) < keep_prob;
        };
        for_each_sim_row(xw, zw, threads, [&](Eigen::Index i, const auto& row) {
            knn_fwd[i] = topk_mean(row, k_fwd);
            double best = kNegInf, best_raw = kNegInf;
            std::int64_t arg = -1;
            for (std::size_t j = 0; j < nt; ++j) {
                best_raw = std::max(best_raw, row[j]);
                if (!kept(0, i, j)) continue;
                const double s = row[j] - knn_bwd[j] / 2;
                if (s > best || (s == best && arg >= 0 && tgt_ids_[j] < tgt_ids_[arg])) {
                    best = s;
                    arg = static_cast<std::int64_t>(j);
                }
            }
            best_fwd[i] = best_raw;
            fwd[i] = arg;
        });
        for_each_sim_row(zw, xw, threads, [&](Eigen::Index j, const auto& row) {
            double best = kNegInf, best_raw = kNegInf;
            std::int64_t arg = -1;
            for (std::size_t i = 0; i < ns; ++i) {
                best_raw = std::max(best_raw, row[i]);
                if (!kept(1, j, i)) continue;
                const double s = row[i] - knn_fwd[i] / 2;
                if (s > best || (s == best && arg >= 0 && src_ids_[i] < src_ids_[arg])) {
                    best = s;
                    arg = static_cast<std::int64_t>(i);
                }
            }
            best_bwd[j] = best_raw;
            bwd[j] = arg;
        });

        InductionResult out;
        out.objective = (mean(best_fwd) + mean(best_bwd)) / 2;
        out.dictionary = combine(fwd, bwd);
        return out;
    }

    double objective(const RowMatrix& w_src) const {
        const RowMatrix xw = unit_rows(xs_ * w_src);
        std::vector<double> best_fwd(static_cast<std::size_t>(xw.rows())), best_bwd(static_cast<std::size_t>(zt_.rows()));
        const unsigned threads = resolve_threads(cfg_.threads);
        for_each_sim_row(xw, zt_, threads, [&](Eigen::Index i, const auto& row) { best_fwd[i] = row.maxCoeff(); });
        for_each_sim_row(zt_, xw, threads, [&](Eigen::Index j, const auto& row) { best_bwd[j] = row.maxCoeff(); });
        return (mean(best_fwd) + mean(best_bwd)) / 2;
    }

    // Dictionary from similarity-distribution matching (no seed pairs needed).
    std::vector<TokenPair> unsupervised(const Embeddings& src, const Embeddings& tgt) const {
        const auto s_ids = frequent_covered(src, cfg_.unsupervised_vocab);
        const auto t_ids = frequent_covered(tgt, cfg_.unsupervised_vocab);
        const std::size_t n = std::min(s_ids.size(), t_ids.size());
        const std::span<const TokenId> s_sel(s_ids.data(), n), t_sel(t_ids.data(), n);
        const RowMatrix xsim = sorted_similarity_profile(gather_rows(src.matrix, s_sel));
        const RowMatrix zsim = sorted_similarity_profile(gather_rows(tgt.matrix, t_sel));
        const RowMatrix sim = xsim * zsim.transpose();
        const int k = std::min<int>(cfg_.csls_k, static_cast<int>(n));
        std::vector<double> knn_fwd(n), knn_bwd(n);
        for (std::size_t i = 0; i < n; ++i) knn_fwd[i] = topk_mean(sim.row(static_cast<Eigen::Index>(i)), k);
        const RowMatrix sim_t = sim.transpose();
        for (std::size_t j = 0; j < n; ++j) knn_bwd[j] = topk_mean(sim_t.row(static_cast<Eigen::Index>(j)), k);

        std::vector<std::int64_t> fwd(n), bwd(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t arg = 0;
            double best = kNegInf;
            for (std::size_t j = 0; j < n; ++j) {
                const double s = sim(i, j) - knn_fwd[i] / 2 - knn_bwd[j] / 2;
                if (s > best) best = s, arg = static_cast<std::int64_t>(j);
            }
            fwd[i] = arg;
        }
        for (std::size_t j = 0; j < n; ++j) {
            std::int64_t arg = 0;
            double best = kNegInf;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = sim(i, j) - knn_fwd[i] / 2 - knn_bwd[j] / 2;
                if (s > best) best = s, arg = static_cast<std::int64_t>(i);
            }
            bwd[j] = arg;
        }
        std::vector<TokenPair> dict;
        auto add = [&](std::size_t i, std::size_t j) { dict.emplace_back(s_sel[i], t_sel[j]); };
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(fwd[i]);
            if (cfg_.induction == Induction::Mutual) {
                if (static_cast<std::size_t>(bwd[j]) == i) add(i, j);
            } else {
                add(i, j);
            }
        }
        if (cfg_.induction == Induction::Union)
            for (std::size_t j = 0; j < n; ++j) add(static_cast<std::size_t>(bwd[j]), j);
        return dict;
    }

private:
    static double mean(const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }

    // Rows of (A A^T)^(1/2), each sorted ascending, then normalized: a
    // permutation-invariant profile of how a token relates to all others.
    static RowMatrix sorted_similarity_profile(const RowMatrix& a) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
        const Eigen::MatrixXd& u = svd.matrixU();
        RowMatrix sim = u * svd.singularValues().asDiagonal() * u.transpose();
        for (Eigen::Index r = 0; r < sim.rows(); ++r) std::sort(sim.row(r).data(), sim.row(r).data() + sim.cols());
        return unit_center_unit(std::move(sim));
    }

    std::vector<TokenPair> combine(const std::vector<std::int64_t>& fwd, const std::vector<std::int64_t>& bwd) const {
        std::vector<TokenPair> dict;
        for (std::size_t i = 0; i < fwd.size(); ++i) {
            if (fwd[i] < 0) continue;
            const auto j = static_cast<std::size_t>(fwd[i]);
            if (cfg_.induction == Induction::Mutual && bwd[j] != static_cast<std::int64_t>(i)) continue;
            dict.emplace_back(src_ids_[i], tgt_ids_[j]);
        }
        if (cfg_.induction == Induction::Union)
            for (std::size_t j = 0; j < bwd.size(); ++j)
                if (bwd[j] >= 0) dict.emplace_back(src_ids_[static_cast<std::size_t>(bwd[j])], tgt_ids_[j]);
        return dict;
    }

    const AlignConfig& cfg_;
    std::vector<TokenId> src_ids_;
    std::vector<TokenId> tgt_ids_;
    RowMatrix xs_;
    RowMatrix zt_;
};

RowMatrix solve_mapping(const Embeddings& src, const Embeddings& tgt, std::span<const TokenPair> dict) {
    std::vector<TokenId> s_ids, t_ids;
    s_ids.reserve(dict.size());
    t_ids.reserve(dict.size());
    for (const auto& [s, t] : dict) {
        s_ids.push_back(s);
        t_ids.push_back(t);
    }
    return procrustes(gather_rows(tgt.matrix, t_ids), gather_rows(src.matrix, s_ids));
}

}  // namespace

Similarity parse_similarity(std::string_view name) {
    if (name == "cosine" || name == "cos") return Similarity::Cosine;
    if (name == "csls") return Similarity::Csls;
    fail_usage("unknown similarity \"", name, "\" (expected cosine or csls)");
}

std::string_view to_string(Similarity s) { return s == Similarity::Cosine ? "cosine" : "csls"; }

Direction parse_direction(std::string_view name) {
    if (name == "t2s" || name == "t->s" || name == "tgt2src") return Direction::TgtToSrc;
    if (name == "s2t" || name == "s->t" || name == "src2tgt") return Direction::SrcToTgt;
    fail_usage("unknown lexicon direction \"", name, "\" (expected t2s or s2t)");
}

std::string_view to_string(Direction d) { return d == Direction::TgtToSrc ? "t2s" : "s2t"; }

Induction parse_induction(std::string_view name) {
    if (name == "mutual") return Induction::Mutual;
    if (name == "union") return Induction::Union;
    if (name == "forward") return Induction::Forward;
    fail_usage("unknown induction rule \"", name, "\" (expected mutual, union or forward)");
}

std::string_view to_string(Induction i) {
    switch (i) {
        case Induction::Mutual: return "mutual";
        case Induction::Union: return "union";
        case Induction::Forward: return "forward";
    }
    return "?";
}

Embeddings normalize(const Embeddings& emb) {
    emb.validate();
    std::vector<TokenId> zero;
    std::vector<TokenId> covered_ids;
    for (std::size_t t = 0; t < emb.vocab_size(); ++t) {
        if (!emb.covered[t]) continue;
        covered_ids.push_back(static_cast<TokenId>(t));
        if (emb.matrix.row(static_cast<Eigen::Index>(t)).squaredNorm() == 0.0) zero.push_back(static_cast<TokenId>(t));
    }
    if (!zero.empty()) {
        std::string list;
        for (std::size_t k = 0; k < zero.size() && k < 20; ++k) list += (k ? ", " : "") + std::to_string(zero[k]);
        if (zero.size() > 20) list += ", ...";
        fail_data("normalize: ", zero.size(), " covered token(s) have all-zero vectors: ", list);
    }
    Embeddings out = emb;
    out.matrix = unit_rows(std::move(out.matrix));
    if (!covered_ids.empty()) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(out.matrix.cols());
        for (TokenId t : covered_ids) mean += out.matrix.row(t);
        mean /= static_cast<double>(covered_ids.size());
        for (Eigen::Index r = 0; r < out.matrix.rows(); ++r)
            if (out.matrix.row(r).squaredNorm() > 0.0) out.matrix.row(r) -= mean;
    }
    out.matrix = unit_rows(std::move(out.matrix));
    return out;
}

Eigen::VectorXd topk_mean_rows(const RowMatrix& sims, int k) {
    if (k < 1 || k > sims.cols()) fail_usage("top-k mean: k = ", k, " outside [1, ", sims.cols(), "]");
    Eigen::VectorXd out(sims.rows());
    for (Eigen::Index r = 0; r < sims.rows(); ++r) out[r] = topk_mean(sims.row(r), k);
    return out;
}

Eigen::VectorXd csls_score(const Eigen::VectorXd& query, const RowMatrix& candidates, const RowMatrix& queries,
                           int k) {
    if (k < 1 || k > candidates.rows() || k > queries.rows())
        fail_usage("CSLS: k = ", k, " outside [1, min(", candidates.rows(), ", ", queries.rows(), ")]");
    if (query.size() != candidates.cols() || queries.cols() != candidates.cols())
        fail_usage("CSLS: dimension mismatch");
    const double qn = query.norm();
    if (qn == 0.0) fail_data("CSLS: query vector is zero");
    const Eigen::VectorXd x = query / qn;
    const RowMatrix y = unit_rows(candidates);
    const RowMatrix xs = unit_rows(queries);
    const Eigen::VectorXd cos = y * x;
    const double r_t = topk_mean(cos.transpose(), k);
    const RowMatrix y_to_x = y * xs.transpose();
    Eigen::VectorXd out(y.rows());
    for (Eigen::Index c = 0; c < y.rows(); ++c) out[c] = 2 * cos[c] - r_t - topk_mean(y_to_x.row(c), k);
    return out;
}

RowMatrix csls_matrix(const RowMatrix& queries, const RowMatrix& candidates, int k, unsigned threads) {
    if (k < 1 || k > candidates.rows() || k > queries.rows())
        fail_usage("CSLS: k = ", k, " outside [1, min(", candidates.rows(), ", ", queries.rows(), ")]");
    const RowMatrix q = unit_rows(queries);
    const RowMatrix c = unit_rows(candidates);
    threads = resolve_threads(threads);
    std::vector<double> r_s(static_cast<std::size_t>(c.rows()));
    for_each_sim_row(c, q, threads, [&](Eigen::Index j, const auto& row) { r_s[j] = topk_mean(row, k); });
    RowMatrix out(q.rows(), c.rows());
    for_each_sim_row(q, c, threads, [&](Eigen::Index i, const auto& row) {
        const double r_t = topk_mean(row, k);
        for (Eigen::Index j = 0; j < c.rows(); ++j) out(i, j) = 2 * row[j] - r_t - r_s[j];
    });
    return out;
}

RowMatrix procrustes(const RowMatrix& x, const RowMatrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) fail_usage("procrustes: X and Y shapes differ");
    if (!x.allFinite() || !y.allFinite()) fail_data("procrustes: non-finite input");
    const Eigen::MatrixXd m = y.transpose() * x;
    if (m.isZero(0.0)) fail_data("procrustes: degenerate input (Y^T X is all zero)");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

void AlignConfig::validate() const {
    if (csls_k < 1) fail_usage("align: csls_k must be >= 1");
    if (!(keep_prob_initial > 0.0 && keep_prob_initial <= 1.0)) fail_usage("align: keep_prob_initial must be in (0, 1]");
    if (!(keep_prob_multiplier > 1.0)) fail_usage("align: keep_prob_multiplier must be > 1");
    if (patience < 1) fail_usage("align: patience must be >= 1");
    if (!(tol >= 0.0)) fail_usage("align: tol must be >= 0");
    if (max_iter < 1) fail_usage("align: max_iter must be >= 1");
}

double mapping_objective(const Embeddings& src, const Embeddings& tgt, const MappingPair& mapping,
                         const AlignConfig& cfg) {
    Inducer inducer(src, tgt, cfg);
    return inducer.objective(mapping.w_src * mapping.w_tgt.transpose());
}

MappingPair self_learn_align(const Embeddings& src, const Embeddings& tgt, std::span<const TokenPair> seed,
                             const AlignConfig& cfg) {
    cfg.validate();
    src.validate();
    tgt.validate();
    if (src.dim() != tgt.dim()) fail_usage("align: source dim ", src.dim(), " != target dim ", tgt.dim());
    const Inducer inducer(src, tgt, cfg);

    std::vector<TokenPair> dict;
    for (const auto& [s, t] : seed) {
        if (s >= src.vocab_size() || t >= tgt.vocab_size()) fail_data("align: seed pair (", s, ", ", t, ") out of range");
        if (src.covered[s] && tgt.covered[t]) dict.emplace_back(s, t);
    }
    if (dict.empty()) {
        if (!cfg.unsupervised_init)
            fail_usage("align: seed dictionary is empty and unsupervised initialization is disabled");
        dict = inducer.unsupervised(src, tgt);
        if (dict.empty()) fail_numerical("align: unsupervised initialization produced no pairs");
    }

    MappingPair out;
    const auto d = static_cast<Eigen::Index>(src.dim());
    out.w_tgt = RowMatrix::Identity(d, d);

    double keep_prob = cfg.keep_prob_initial;
    double best_objective = kNegInf;
    RowMatrix best_w;
    std::vector<TokenPair> best_dict;
    std::size_t best_dict_size = 0;
    std::uint32_t last_improvement = 0;
    std::uint32_t it = 1;
    bool end = !cfg.self_learning;
    while (true) {
        if (it - last_improvement > cfg.patience) {
            if (keep_prob >= 1.0) end = true;
            keep_prob = std::min(1.0, cfg.keep_prob_multiplier * keep_prob);
            last_improvement = it;
            // Stagnated: resume from the best state instead of the last noisy dictionary.
            if (!best_dict.empty()) dict = best_dict;
        }
        out.w_src = solve_mapping(src, tgt, dict);
        out.dictionary_size = dict.size();
        if (end) break;
        if (it > cfg.max_iter) {
            out.reached_max_iter = true;
            out.w_src = best_w;
            out.dictionary_size = best_dict_size;
            break;
        }
        auto induced = inducer.run(out.w_src, keep_prob, it);
        if (induced.objective - best_objective >= cfg.tol) {
            last_improvement = it;
            best_objective = induced.objective;
            best_w = out.w_src;
            best_dict = dict;
            best_dict_size = dict.size();
            out.best_iteration = it;
        }
        if (!induced.dictionary.empty()) dict = std::move(induced.dictionary);
        ++it;
    }
    out.iterations = cfg.self_learning ? it : 1;
    if (!cfg.self_learning) out.best_iteration = 1;
    out.objective = inducer.objective(out.w_src);
    return out;
}

std::size_t AlignmentLexicon::direct_count() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.direct; }));
}

TokenId AlignmentLexicon::top1(TokenId query) const {
    if (query >= entries.size()) fail_data("lexicon: query ID ", query, " outside query vocabulary of size ", entries.size());
    if (entries[query].candidates.empty()) fail_data("lexicon: query ID ", query, " has no candidates");
    return entries[query].candidates.front().id;
}

void AlignmentLexicon::validate() const {
    for (std::size_t q = 0; q < entries.size(); ++q) {
        const auto& e = entries[q];
        if (e.candidates.empty()) fail_data("lexicon: query ", q, " has no entry");
        if (e.direct && e.candidates.size() != 1) fail_data("lexicon: direct query ", q, " must have one candidate");
        for (std::size_t r = 0; r < e.candidates.size(); ++r) {
            if (e.candidates[r].id >= candidate_vocab)
                fail_data("lexicon: candidate ", e.candidates[r].id, " of query ", q, " outside candidate vocabulary");
            if (!std::isfinite(e.candidates[r].score)) fail_data("lexicon: non-finite score for query ", q);
            if (r > 0 && e.candidates[r].score > e.candidates[r - 1].score)
                fail_data("lexicon: scores of query ", q, " are not non-increasing");
        }
    }
}

AlignmentLexicon extract_lexicon(const Embeddings& src, const Embeddings& tgt, const MappingPair& mapping,
                                 const SharedTokenSet& shared, const LexiconOptions& options) {
    if (options.top_n < 1) fail_usage("lexicon: top_n must be >= 1");
    if (options.csls_k < 1) fail_usage("lexicon: csls_k must be >= 1");
    if (src.dim() != tgt.dim() || static_cast<std::size_t>(mapping.w_src.rows()) != src.dim() ||
        static_cast<std::size_t>(mapping.w_tgt.rows()) != tgt.dim())
        fail_usage("lexicon: inconsistent embedding/mapping dimensions");
    src.validate();
    tgt.validate();

    const bool t2s = options.direction == Direction::TgtToSrc;
    const Embeddings& query_emb = t2s ? tgt : src;
    const Embeddings& cand_emb = t2s ? src : tgt;
    const RowMatrix q_mapped = unit_rows(query_emb.matrix * (t2s ? mapping.w_tgt : mapping.w_src));
    const RowMatrix c_mapped = unit_rows(cand_emb.matrix * (t2s ? mapping.w_src : mapping.w_tgt));

    AlignmentLexicon lex;
    lex.direction = options.direction;
    lex.candidate_vocab = cand_emb.vocab_size();
    lex.entries.resize(query_emb.vocab_size());

    for (const auto& [s, t] : shared.pairs) {
        const TokenId q = t2s ? t : s;
        const TokenId c = t2s ? s : t;
        if (q >= lex.entries.size() || c >= lex.candidate_vocab)
            fail_usage("lexicon: shared-token pair (", s, ", ", t, ") outside the embedding vocabularies");
        lex.entries[q].direct = true;
        lex.entries[q].candidates = {{c, 1.0}};
    }

    auto covered_or_all = [](const Embeddings& e) {
        std::vector<TokenId> ids;
        for (std::size_t t = 0; t < e.vocab_size(); ++t)
            if (e.covered[t]) ids.push_back(static_cast<TokenId>(t));
        if (ids.empty()) {
            ids.resize(e.vocab_size());
            std::iota(ids.begin(), ids.end(), TokenId{0});
        }
        return ids;
    };
    const auto cand_ids = covered_or_all(cand_emb);
    const auto hub_ids = covered_or_all(query_emb);
    const RowMatrix cands = gather_rows(c_mapped, cand_ids);
    const RowMatrix hubs = gather_rows(q_mapped, hub_ids);
    const unsigned threads = resolve_threads(options.threads);
    const bool csls = options.similarity == Similarity::Csls;
    const int k_t = std::min<int>(options.csls_k, static_cast<int>(cands.rows()));
    const int k_s = std::min<int>(options.csls_k, static_cast<int>(hubs.rows()));

    std::vector<double> r_s(cand_ids.size(), 0.0);
    if (csls) for_each_sim_row(cands, hubs, threads, [&](Eigen::Index j, const auto& row) { r_s[j] = topk_mean(row, k_s); });

    std::vector<TokenId> todo;
    for (std::size_t q = 0; q < lex.entries.size(); ++q)
        if (!lex.entries[q].direct) todo.push_back(static_cast<TokenId>(q));
    if (todo.empty()) return lex;
    if (cand_ids.empty()) fail_data("lexicon: candidate vocabulary is empty");

    const RowMatrix queries = gather_rows(q_mapped, todo);
    const std::size_t top_n = std::min(options.top_n, cand_ids.size());
    for_each_sim_row(queries, cands, threads, [&](Eigen::Index r, const auto& row) {
        const TokenId q = todo[static_cast<std::size_t>(r)];
        auto& entry = lex.entries[q];
        entry.low_confidence = !query_emb.covered[q];
        const bool use_csls = csls && !entry.low_confidence;
        const double r_t = use_csls ? topk_mean(row, k_t) : 0.0;
        std::vector<LexiconCandidate> scored(cand_ids.size());
        for (std::size_t j = 0; j < cand_ids.size(); ++j)
            scored[j] = {cand_ids[j], use_csls ? 2 * row[j] - r_t - r_s[j] : row[j]};
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top_n), scored.end(),
                          [](const LexiconCandidate& a, const LexiconCandidate& b) {
                              return a.score != b.score ? a.score > b.score : a.id < b.id;
                          });
        scored.resize(top_n);
        entry.candidates = std::move(scored);
    });
    return lex;
}

AlignmentLexicon identity_lexicon(std::size_t vocab_size, Direction direction) {
    AlignmentLexicon lex;
    lex.direction = direction;
    lex.candidate_vocab = vocab_size;
    lex.entries.resize(vocab_size);
    for (std::size_t q = 0; q < vocab_size; ++q) {
        lex.entries[q].direct = true;
        lex.entries[q].candidates = {{static_cast<TokenId>(q), 1.0}};
    }
    return lex;
}

}  // namespace tokalign
