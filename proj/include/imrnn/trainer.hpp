#pragma once

// Margin-ranking training of the projection and both adapters.
//
//   L = mean over batch of max(0, margin - s(q, d+) + s(q, d-))
//
// Gradients are derived by hand through cosine, layer norm, the affine
// modulations, the mean over the aggregation pool, the ReLU MLPs and the
// projection. Parameters are updated with Adam plus decoupled weight decay.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imrnn/adapter.hpp"
#include "imrnn/bm25.hpp"
#include "imrnn/embedding_store.hpp"

namespace imrnn {

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    std::size_t batch_size = 32;
    double margin = 0.3;
    std::size_t candidate_k = 100;
    std::size_t patience = 5;
    std::size_t max_epochs = 50;
    std::uint64_t seed = 0;
    std::size_t m = 256;
    std::size_t h = 512;
    double eps = kDefaultLayerNormEps;
    bool identity_residual = true;
    std::size_t workers = 1;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    /// Overlays the keys present in `j` onto this config; unknown keys are rejected.
    void merge_json(const nlohmann::json& j);
};

double hinge_loss(double s_pos, double s_neg, double margin);

/// One gradient tensor per trainable parameter, shaped like the checkpoint.
struct GradientBundle {
    Matrix projection;
    AdapterMlp query_adapter;
    AdapterMlp doc_adapter;

    static GradientBundle zeros_like(const AdapterCheckpoint& ckpt);
    void add(const GradientBundle& other, double scale = 1.0);
    void scale(double factor);
    bool is_zero() const;
};

/// Visits (name, parameter values, gradient values) for every tensor pair.
void for_each_parameter(AdapterCheckpoint& ckpt, const GradientBundle& grads,
                        const std::function<void(const std::string&, std::span<double>,
                                                 std::span<const double>)>& fn);

/// Cached activations of one (query, positive, negative, pool) forward pass.
struct TripleForward {
    double loss = 0.0;
    double s_pos = 0.0;
    double s_neg = 0.0;
    double margin = 0.0;

    Vector q_orig, pos_orig, neg_orig;
    std::vector<Vector> pool_orig;

    Vector q_proj, pos_proj, neg_proj;
    std::vector<Vector> pool_proj;

    AdapterActivations query_act;
    std::vector<AdapterActivations> pool_act;
    Vector pool_mean_hidden;
    ModulationTransform query_transform;
    ModulationTransform corpus_transform;

    Vector q_mod, pos_mod, neg_mod;
};

TripleForward triple_forward(const AdapterCheckpoint& ckpt, std::span<const double> q_orig,
                             std::span<const double> pos_orig, std::span<const double> neg_orig,
                             std::span<const std::span<const double>> pool, double margin);

/// Exact reverse-mode gradients of the triple's hinge loss; all-zero when the
/// hinge is inactive (loss == 0, including the kink).
GradientBundle triple_backward(const AdapterCheckpoint& ckpt, const TripleForward& fwd);

/// Same gradients, accumulated into an existing bundle.
void accumulate_triple_gradient(const AdapterCheckpoint& ckpt, const TripleForward& fwd,
                                GradientBundle& into);

struct AdamState {
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double epsilon = 1e-8;

    GradientBundle first;
    GradientBundle second;
    std::uint64_t step = 0;

    static AdamState zeros_like(const AdapterCheckpoint& ckpt);
};

/// Bias-corrected Adam followed by decoupled decay θ -= lr·wd·θ on every
/// parameter. A non-finite gradient throws NonFiniteError naming the tensor
/// before anything is modified.
void adam_step(AdapterCheckpoint& ckpt, const GradientBundle& grads, AdamState& state,
               double learning_rate, double weight_decay);

/// Tracks the best validation score; stops after `patience` epochs without a
/// strict improvement.
class EarlyStopping {
  public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Returns true when `value` is a new best.
    bool observe(std::size_t epoch, double value);
    bool should_stop() const noexcept { return since_best_ >= patience_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }
    double best_value() const noexcept { return best_; }

  private:
    std::size_t patience_;
    std::size_t since_best_ = 0;
    std::size_t best_epoch_ = 0;
    double best_ = 0.0;
    bool seen_ = false;
};

/// Inputs to train(). Pools map a query id to the corpus indices of its BM25
/// candidates; a query without a pool aggregates over the full corpus.
struct TrainingData {
    const EmbeddingSet* queries = nullptr;
    const EmbeddingSet* docs = nullptr;
    std::vector<TrainingTriple> triples;
    std::map<std::string, std::vector<std::size_t>> pools;
    std::vector<std::string> validation_queries;
    Qrels validation_qrels;
};

/// Candidate pools from BM25 over raw text, for every query in `queries`.
std::map<std::string, std::vector<std::size_t>> build_candidate_pools(
    const InvertedIndex& index, const CorpusText& queries, const EmbeddingSet& docs, std::size_t k);

struct EpochLog {
    std::size_t epoch;
    double train_loss;
    double validation_ndcg;
    double seconds;

    nlohmann::ordered_json to_json() const;
};

struct TrainResult {
    AdapterCheckpoint checkpoint;  // best-validation checkpoint
    std::vector<EpochLog> history;
};

/// Mean nDCG@10 of modulated retrieval over the validation split.
double validation_ndcg(const AdapterCheckpoint& ckpt, const TrainingData& data);

/// Mean hinge loss over a batch of triples, with its averaged gradient.
std::pair<double, GradientBundle> batch_loss_and_gradient(const AdapterCheckpoint& ckpt,
                                                          const TrainingData& data,
                                                          std::span<const TrainingTriple> batch,
                                                          double margin, std::size_t workers = 1);

TrainResult train(const TrainingData& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Variant starting from an existing checkpoint (used by tests that hand-set weights).
TrainResult train_from(AdapterCheckpoint initial, const TrainingData& data, const TrainConfig& config,
                       const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace imrnn
