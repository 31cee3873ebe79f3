#pragma once

// Forward computation of bidirectional embedding modulation:
//   q_proj = P q,  d_proj = P d
//   (W_q, b_q) = A_q(q_proj)           d_mod = W_q d_proj + b_q
//   (W_i, b_i) = A_d(d_proj_i), mean   q_mod = W̄ q_proj + b̄
//   score = cos(LN(q_mod), LN(d_mod))

#include <cstdint>
#include <span>
#include <vector>

#include "imrnn/linalg.hpp"

namespace imrnn {

/// Affine map x -> W x + b in the m-dimensional working space.
struct ModulationTransform {
    Matrix weight;  // m×m
    Vector bias;    // m

    std::size_t dim() const noexcept { return bias.size(); }
    static ModulationTransform identity(std::size_t m);
};

/// Two-layer MLP emitting a flattened (m×m weight, m bias) transform:
///   hidden = LN(relu(W1 x + b1)),  raw = W2 hidden + b2.
struct AdapterMlp {
    Matrix w1;  // h×m
    Vector b1;  // h
    Matrix w2;  // (m²+m)×h
    Vector b2;  // m²+m

    AdapterMlp() = default;
    AdapterMlp(std::size_t m, std::size_t h);

    std::size_t input_dim() const noexcept { return w1.cols(); }
    std::size_t hidden_dim() const noexcept { return w1.rows(); }
    std::size_t parameter_count() const noexcept {
        return w1.size() + b1.size() + w2.size() + b2.size();
    }
    void validate(std::size_t m) const;
};

struct AdapterConfig {
    std::size_t m = 256;  // working dimension
    std::size_t n = 0;    // encoder dimension
    std::size_t h = 512;  // adapter hidden width
    double eps = kDefaultLayerNormEps;
    bool identity_residual = true;

    void validate() const;
    bool operator==(const AdapterConfig&) const = default;
};

struct TrainingMetadata {
    std::uint32_t epoch = 0;
    double best_validation_ndcg = 0.0;

    bool operator==(const TrainingMetadata&) const = default;
};

/// All trainable state: projection and both adapters.
struct AdapterCheckpoint {
    AdapterConfig config;
    Matrix projection;  // m×n
    AdapterMlp query_adapter;
    AdapterMlp doc_adapter;
    TrainingMetadata metadata;

    /// Orthonormal random projection rows, He-scaled first layers and a zero
    /// final layer, so the initial transforms are exactly the identity.
    static AdapterCheckpoint initialize(const AdapterConfig& config, std::uint64_t seed);

    void validate() const;
    std::size_t parameter_count() const noexcept {
        return projection.size() + query_adapter.parameter_count() + doc_adapter.parameter_count();
    }
};

Vector project(const Matrix& projection, std::span<const double> x);

/// Intermediate values of one adapter forward, kept for back-propagation.
struct AdapterActivations {
    Vector input;        // x
    Vector pre;          // W1 x + b1
    Vector hidden;       // LN(relu(pre))
    double inv_sigma = 0.0;  // 1 / sqrt(var(relu(pre)) + eps)
};

AdapterActivations adapter_hidden(const AdapterMlp& mlp, std::span<const double> x, double eps);

/// Applies the output head to a hidden vector (or to a mean of hidden vectors).
ModulationTransform adapter_head(const AdapterMlp& mlp, std::span<const double> hidden,
                                 bool identity_residual);

ModulationTransform adapter_forward(const AdapterMlp& mlp, std::span<const double> x,
                                    bool identity_residual, double eps = kDefaultLayerNormEps);

/// Elementwise mean of the weights and biases.
ModulationTransform aggregate_transforms(std::span<const ModulationTransform> transforms);

/// Mean document-adapter transform over a set of projected documents. The head
/// is affine, so this equals aggregate_transforms over per-document forwards
/// while evaluating the (m²+m)×h head only once.
ModulationTransform aggregate_doc_transform(const AdapterMlp& mlp,
                                            std::span<const Vector> projected_docs,
                                            bool identity_residual, double eps);

Vector modulate(const ModulationTransform& t, std::span<const double> x);

double modulated_score(std::span<const double> q_mod, std::span<const double> d_mod,
                       double eps = kDefaultLayerNormEps);

/// Baseline retriever score on the original encoder embeddings.
double static_score(std::span<const double> q_orig, std::span<const double> d_orig);

}  // namespace imrnn
