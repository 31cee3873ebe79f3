#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "imrnn/linalg.hpp"
#include "imrnn/random.hpp"
#include "imrnn/trainer.hpp"

namespace imrnn::testkit {

namespace {

void fill(std::span<double> xs, Rng& rng, double scale) {
    for (auto& x : xs) x = scale * rng.normal();
}

std::vector<double> draw(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    fill(v, rng, 1.0);
    return v;
}

double min_abs_preactivation(const AdapterMlp& mlp, std::span<const double> x) {
    double best = INFINITY;
    for (std::size_t r = 0; r < mlp.w1.rows(); ++r) {
        double z = mlp.b1[r];
        for (std::size_t c = 0; c < x.size(); ++c) z += mlp.w1(r, c) * x[c];
        best = std::min(best, std::abs(z));
    }
    return best;
}

std::vector<std::span<const double>> spans(const std::vector<std::vector<double>>& pool) {
    return {pool.begin(), pool.end()};
}

}  // namespace

AdapterCheckpoint random_checkpoint(const AdapterConfig& config, std::uint64_t seed, double scale) {
    auto ckpt = AdapterCheckpoint::initialize(config, seed);
    Rng rng(seed * 7919 + 17);
    fill(ckpt.projection.values(), rng, scale);
    for (auto* mlp : {&ckpt.query_adapter, &ckpt.doc_adapter}) {
        fill(mlp->w1.values(), rng, scale);
        fill(mlp->b1, rng, scale);
        fill(mlp->w2.values(), rng, scale);
        fill(mlp->b2, rng, scale);
    }
    return ckpt;
}

GradCheckCase make_gradcheck_case(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t h,
                                  std::size_t pool_size, double kink_guard) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t s = seed * 1000003 + attempt;
        Rng rng(s);
        GradCheckCase c{random_checkpoint({m, n, h, kDefaultLayerNormEps, true}, s), draw(rng, n), draw(rng, n),
                        draw(rng, n), {}, 4.0};
        c.ckpt.config.identity_residual = (s % 2) == 0;
        for (std::size_t i = 0; i < pool_size; ++i) c.pool.push_back(draw(rng, n));

        bool smooth = min_abs_preactivation(c.ckpt.query_adapter, project(c.ckpt.projection, c.q)) > kink_guard;
        for (const auto& d : c.pool)
            smooth = smooth && min_abs_preactivation(c.ckpt.doc_adapter, project(c.ckpt.projection, d)) > kink_guard;
        if (smooth) return c;
    }
}

GradCheckResult run_gradcheck(GradCheckCase& c, double delta, double floor) {
    const auto pool = spans(c.pool);
    auto loss = [&] { return triple_forward(c.ckpt, c.q, c.pos, c.neg, pool, c.margin).loss; };
    const auto grads = triple_backward(c.ckpt, triple_forward(c.ckpt, c.q, c.pos, c.neg, pool, c.margin));

    GradCheckResult result;
    for_each_parameter(c.ckpt, grads, [&](const std::string& name, std::span<double> p, std::span<const double> g) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + delta;
            const double up = loss();
            p[i] = saved - delta;
            const double down = loss();
            p[i] = saved;
            const double fd = (up - down) / (2.0 * delta);
            const double rel = std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), floor});
            ++result.checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst = name + "[" + std::to_string(i) + "]";
            }
        }
    });
    return result;
}

}  // namespace imrnn::testkit
