#include "imrnn/adapter.hpp"

#include <cmath>
#include <string>

#include "imrnn/error.hpp"
#include "imrnn/random.hpp"

namespace imrnn {

ModulationTransform ModulationTransform::identity(std::size_t m) {
    return {Matrix::identity(m), Vector(m, 0.0)};
}

AdapterMlp::AdapterMlp(std::size_t m, std::size_t h)
    : w1(h, m), b1(h, 0.0), w2(m * m + m, h), b2(m * m + m, 0.0) {}

void AdapterMlp::validate(std::size_t m) const {
    const std::size_t h = w1.rows();
    if (w1.cols() != m) throw DimensionError("adapter W1 columns", m, w1.cols());
    if (b1.size() != h) throw DimensionError("adapter b1", h, b1.size());
    if (w2.rows() != m * m + m) throw DimensionError("adapter W2 rows", m * m + m, w2.rows());
    if (w2.cols() != h) throw DimensionError("adapter W2 columns", h, w2.cols());
    if (b2.size() != m * m + m) throw DimensionError("adapter b2", m * m + m, b2.size());
    if (!all_finite(w1.values()) || !all_finite(b1) || !all_finite(w2.values()) ||
        !all_finite(b2)) {
        throw NonFiniteError("adapter has a non-finite parameter");
    }
}

void AdapterConfig::validate() const {
    if (m < 2) throw Error("working dimension m must be >= 2");
    if (h < 2) throw Error("hidden width h must be >= 2");
    if (!(m < n)) {
        throw Error("working dimension m (" + std::to_string(m) +
                    ") must be smaller than the encoder dimension n (" + std::to_string(n) + ")");
    }
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error("layer-norm eps must be >= 0");
}

AdapterCheckpoint AdapterCheckpoint::initialize(const AdapterConfig& config, std::uint64_t seed) {
    config.validate();
    const auto [m, n, h, eps, identity_residual] = config;
    Rng rng(seed);

    // Gram-Schmidt over Gaussian rows: full row rank with unit, orthogonal rows.
    Matrix p(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        auto row = p.row(i);
        double len = 0.0;
        do {
            for (auto& v : row) v = rng.normal();
            for (std::size_t k = 0; k < i; ++k) {
                const double proj = dot(row, p.row(k));
                for (std::size_t j = 0; j < n; ++j) row[j] -= proj * p(k, j);
            }
            len = norm2(row);
        } while (len < 1e-6);
        for (auto& v : row) v /= len;
    }

    auto make_adapter = [&] {
        AdapterMlp mlp(m, h);
        const double scale = std::sqrt(2.0 / static_cast<double>(m));
        for (auto& v : mlp.w1.values()) v = scale * rng.normal();
        if (!identity_residual) {
            for (std::size_t i = 0; i < m; ++i) mlp.b2[i * m + i] = 1.0;
        }
        return mlp;
    };

    AdapterCheckpoint ckpt{config, std::move(p), {}, {}, {}};
    ckpt.query_adapter = make_adapter();
    ckpt.doc_adapter = make_adapter();
    return ckpt;
}

void AdapterCheckpoint::validate() const {
    config.validate();
    if (projection.rows() != config.m) throw DimensionError("projection rows", config.m, projection.rows());
    if (projection.cols() != config.n) throw DimensionError("projection columns", config.n, projection.cols());
    if (!all_finite(projection.values())) throw NonFiniteError("projection has a non-finite entry");
    query_adapter.validate(config.m);
    doc_adapter.validate(config.m);
    if (query_adapter.hidden_dim() != config.h) throw DimensionError("query adapter width", config.h, query_adapter.hidden_dim());
    if (doc_adapter.hidden_dim() != config.h) throw DimensionError("document adapter width", config.h, doc_adapter.hidden_dim());
}

Vector project(const Matrix& projection, std::span<const double> x) {
    if (x.size() != projection.cols()) throw DimensionError("project", projection.cols(), x.size());
    return matvec(projection, x);
}

AdapterActivations adapter_hidden(const AdapterMlp& mlp, std::span<const double> x, double eps) {
    if (x.size() != mlp.input_dim()) throw DimensionError("adapter input", mlp.input_dim(), x.size());
    AdapterActivations act;
    act.input.assign(x.begin(), x.end());
    act.pre = matvec(mlp.w1, x);
    Vector relu(act.pre.size());
    for (std::size_t i = 0; i < relu.size(); ++i) {
        act.pre[i] += mlp.b1[i];
        relu[i] = act.pre[i] > 0.0 ? act.pre[i] : 0.0;
    }
    double mean = 0.0;
    for (double v : relu) mean += v;
    mean /= static_cast<double>(relu.size());
    double var = 0.0;
    for (double v : relu) var += (v - mean) * (v - mean);
    var /= static_cast<double>(relu.size());
    const double sigma = std::sqrt(var + eps);
    act.inv_sigma = sigma > 0.0 ? 1.0 / sigma : 0.0;
    act.hidden = layer_norm(relu, eps);
    return act;
}

ModulationTransform adapter_head(const AdapterMlp& mlp, std::span<const double> hidden,
                                 bool identity_residual) {
    const std::size_t m = mlp.input_dim();
    Vector raw = matvec(mlp.w2, hidden);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += mlp.b2[i];
    ModulationTransform t{Matrix(m, m, Vector(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(m * m))),
                          Vector(raw.begin() + static_cast<std::ptrdiff_t>(m * m), raw.end())};
    if (identity_residual) {
        for (std::size_t i = 0; i < m; ++i) t.weight(i, i) += 1.0;
    }
    return t;
}

ModulationTransform adapter_forward(const AdapterMlp& mlp, std::span<const double> x,
                                    bool identity_residual, double eps) {
    return adapter_head(mlp, adapter_hidden(mlp, x, eps).hidden, identity_residual);
}

ModulationTransform aggregate_transforms(std::span<const ModulationTransform> transforms) {
    if (transforms.empty()) throw Error("cannot aggregate an empty list of transforms");
    const std::size_t m = transforms.front().dim();
    ModulationTransform mean{Matrix(m, m), Vector(m, 0.0)};
    for (const auto& t : transforms) {
        if (t.dim() != m || t.weight.rows() != m || t.weight.cols() != m) {
            throw DimensionError("aggregate_transforms", m, t.dim());
        }
        for (std::size_t i = 0; i < t.weight.size(); ++i) mean.weight.values()[i] += t.weight.values()[i];
        for (std::size_t i = 0; i < m; ++i) mean.bias[i] += t.bias[i];
    }
    const double inv = 1.0 / static_cast<double>(transforms.size());
    for (auto& v : mean.weight.values()) v *= inv;
    for (auto& v : mean.bias) v *= inv;
    return mean;
}

ModulationTransform aggregate_doc_transform(const AdapterMlp& mlp,
                                            std::span<const Vector> projected_docs,
                                            bool identity_residual, double eps) {
    if (projected_docs.empty()) throw Error("cannot aggregate over an empty document set");
    Vector mean_hidden(mlp.hidden_dim(), 0.0);
    for (const auto& d : projected_docs) {
        const auto act = adapter_hidden(mlp, d, eps);
        for (std::size_t i = 0; i < mean_hidden.size(); ++i) mean_hidden[i] += act.hidden[i];
    }
    const double inv = 1.0 / static_cast<double>(projected_docs.size());
    for (auto& v : mean_hidden) v *= inv;
    return adapter_head(mlp, mean_hidden, identity_residual);
}

Vector modulate(const ModulationTransform& t, std::span<const double> x) {
    if (t.weight.rows() != t.bias.size()) throw DimensionError("transform bias", t.weight.rows(), t.bias.size());
    Vector out = matvec(t.weight, x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.bias[i];
    return out;
}

double modulated_score(std::span<const double> q_mod, std::span<const double> d_mod, double eps) {
    return cosine(layer_norm(q_mod, eps), layer_norm(d_mod, eps));
}

double static_score(std::span<const double> q_orig, std::span<const double> d_orig) {
    return cosine(q_orig, d_orig);
}

}  // namespace imrnn
