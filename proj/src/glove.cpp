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

#include "tokalign/glove.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "tokalign/error.hpp"
#include "tokalign/parallel.hpp"
#include "tokalign/rng.hpp"

namespace tokalign {
namespace {

// One non-zero cell of the full (not triangular) matrix.
struct Cell {
    TokenId i;
    TokenId j;
    double log_x;
    double f;
};

std::vector<Cell> expand_cells(const CooccurMatrix& m, const GloveConfig& cfg) {
    std::vector<Cell> cells;
    cells.reserve(m.entries().size() * 2);
    for (const auto& e : m.entries()) {
        if (e.units == 0) continue;
        const double x = m.to_weight(e.units);
        const double lx = std::log(x);
        const double f = glove_weight(x, cfg);
        cells.push_back({e.i, e.j, lx, f});
        if (e.i != e.j) cells.push_back({e.j, e.i, lx, f});
    }
    return cells;
}

template <bool Shared>
struct Access {
    static double load(double& x) {
        if constexpr (Shared)
            return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
        else
            return x;
    }
    static void store(double& x, double v) {
        if constexpr (Shared)
            std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
        else
            x = v;
    }
};

struct AdaGradState {
    RowMatrix w_sq, w_ctx_sq;
    Eigen::VectorXd b_sq, b_ctx_sq;
};

// Trains over cells[order[begin..end)] and returns the summed weighted loss.
template <bool Shared>
double sgd_pass(GloveParams& p, AdaGradState& s, std::span<const Cell> cells, std::span<const std::uint32_t> order,
                const GloveConfig& cfg) {
    using A = Access<Shared>;
    const Eigen::Index d = p.w.cols();
    const double lr = cfg.learning_rate;
    double cost = 0.0;
    for (std::uint32_t idx : order) {
        const Cell& c = cells[idx];
        double* wi = p.w.row(c.i).data();
        double* wj = p.w_ctx.row(c.j).data();
        double* gi = s.w_sq.row(c.i).data();
        double* gj = s.w_ctx_sq.row(c.j).data();
        double diff = A::load(p.b[c.i]) + A::load(p.b_ctx[c.j]) - c.log_x;
        for (Eigen::Index k = 0; k < d; ++k) diff += A::load(wi[k]) * A::load(wj[k]);
        const double fdiff = c.f * diff;
        cost += fdiff * diff;
        const double g = std::clamp(fdiff, -cfg.grad_clip, cfg.grad_clip);
        for (Eigen::Index k = 0; k < d; ++k) {
            const double a = A::load(wi[k]);
            const double b = A::load(wj[k]);
            const double ga = g * b;
            const double gb = g * a;
            const double sa = A::load(gi[k]);
            const double sb = A::load(gj[k]);
            A::store(wi[k], a - lr * ga / std::sqrt(sa));
            A::store(wj[k], b - lr * gb / std::sqrt(sb));
            A::store(gi[k], sa + ga * ga);
            A::store(gj[k], sb + gb * gb);
        }
        const double sbi = A::load(s.b_sq[c.i]);
        const double sbj = A::load(s.b_ctx_sq[c.j]);
        A::store(p.b[c.i], A::load(p.b[c.i]) - lr * g / std::sqrt(sbi));
        A::store(p.b_ctx[c.j], A::load(p.b_ctx[c.j]) - lr * g / std::sqrt(sbj));
        A::store(s.b_sq[c.i], sbi + g * g);
        A::store(s.b_ctx_sq[c.j], sbj + g * g);
    }
    return cost;
}

}  // namespace

void GloveConfig::validate() const {
    if (dim < 1) fail_usage("glove: dim must be >= 1");
    if (!(x_max > 0.0)) fail_usage("glove: x_max must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail_usage("glove: alpha must be in (0, 1]");
    if (epochs < 1) fail_usage("glove: epochs must be >= 1");
    if (!(learning_rate > 0.0)) fail_usage("glove: learning_rate must be > 0");
    if (!(grad_clip > 0.0)) fail_usage("glove: grad_clip must be > 0");
}

GloveParams GloveParams::zeros(std::size_t vocab_size, std::size_t dim) {
    const auto v = static_cast<Eigen::Index>(vocab_size);
    const auto d = static_cast<Eigen::Index>(dim);
    return {RowMatrix::Zero(v, d), RowMatrix::Zero(v, d), Eigen::VectorXd::Zero(v), Eigen::VectorXd::Zero(v)};
}

GloveParams init_glove_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    auto p = GloveParams::zeros(vocab_size, dim);
    const double scale = 1.0 / static_cast<double>(dim);
    for (std::size_t t = 0; t < vocab_size; ++t) {
        for (std::size_t k = 0; k < dim; ++k) {
            p.w(t, k) = (to_unit(hash_key(seed, 0, t, k)) - 0.5) * scale;
            p.w_ctx(t, k) = (to_unit(hash_key(seed, 1, t, k)) - 0.5) * scale;
        }
        p.b[t] = (to_unit(hash_key(seed, 2, t)) - 0.5) * scale;
        p.b_ctx[t] = (to_unit(hash_key(seed, 3, t)) - 0.5) * scale;
    }
    return p;
}

double glove_weight(double x, const GloveConfig& cfg) {
    return x < cfg.x_max ? std::pow(x / cfg.x_max, cfg.alpha) : 1.0;
}

GloveLoss glove_loss_and_grad(const CooccurMatrix& cooccur, const GloveParams& params, const GloveConfig& cfg) {
    const std::size_t v = params.vocab_size();
    if (params.w_ctx.rows() != params.w.rows() || params.w_ctx.cols() != params.w.cols() ||
        static_cast<std::size_t>(params.b.size()) != v || static_cast<std::size_t>(params.b_ctx.size()) != v)
        fail_usage("glove: parameter shapes are inconsistent");
    if (v != cooccur.vocab_size())
        fail_usage("glove: parameters cover ", v, " tokens but the matrix has vocab_size ", cooccur.vocab_size());

    GloveLoss out{0.0, GloveParams::zeros(v, params.dim())};
    for (const auto& c : expand_cells(cooccur, cfg)) {
        const double diff = params.w.row(c.i).dot(params.w_ctx.row(c.j)) + params.b[c.i] + params.b_ctx[c.j] - c.log_x;
        out.loss += c.f * diff * diff;
        const double g = 2.0 * c.f * diff;
        out.grad.w.row(c.i) += g * params.w_ctx.row(c.j);
        out.grad.w_ctx.row(c.j) += g * params.w.row(c.i);
        out.grad.b[c.i] += g;
        out.grad.b_ctx[c.j] += g;
    }
    return out;
}

GloveResult train_glove(const CooccurMatrix& cooccur, const GloveConfig& cfg) {
    cfg.validate();
    const auto cells = expand_cells(cooccur, cfg);
    if (cells.empty()) fail_data("glove: co-occurrence matrix is empty");
    if (cells.size() > UINT32_MAX) fail_usage("glove: too many co-occurrence cells");

    const std::size_t v = cooccur.vocab_size();
    GloveResult result;
    result.params = init_glove_params(v, cfg.dim, cfg.seed);
    AdaGradState state{RowMatrix::Ones(result.params.w.rows(), result.params.w.cols()),
                       RowMatrix::Ones(result.params.w.rows(), result.params.w.cols()),
                       Eigen::VectorXd::Ones(static_cast<Eigen::Index>(v)),
                       Eigen::VectorXd::Ones(static_cast<Eigen::Index>(v))};

    std::vector<std::uint32_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0u);
    const unsigned threads = std::max(1u, cfg.threads);
    for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        SplitMix rng(derive_seed(cfg.seed, "glove-epoch") + epoch);
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);

        double cost = 0.0;
        if (threads == 1) {
            cost = sgd_pass<false>(result.params, state, cells, order, cfg);
        } else {
            std::vector<double> partial(threads, 0.0);
            const std::span<const std::uint32_t> all(order);
            parallel_for(threads, threads, [&](std::size_t t) {
                const std::size_t begin = all.size() * t / threads;
                const std::size_t end = all.size() * (t + 1) / threads;
                partial[t] = sgd_pass<true>(result.params, state, cells, all.subspan(begin, end - begin), cfg);
            });
            for (double p : partial) cost += p;
        }
        const double mean = cost / static_cast<double>(cells.size());
        if (!std::isfinite(mean)) fail_numerical("glove: loss diverged (non-finite) at epoch ", epoch);
        result.epoch_loss.push_back(mean);
    }

    auto& emb = result.embeddings;
    emb.matrix = result.params.w + result.params.w_ctx;
    if (!emb.matrix.allFinite()) fail_numerical("glove: non-finite embedding after epoch ", cfg.epochs);
    emb.frequency = cooccur.row_mass();
    emb.covered.resize(v);
    for (std::size_t t = 0; t < v; ++t) emb.covered[t] = emb.frequency[t] > 0.0;
    return result;
}

}  // namespace tokalign
