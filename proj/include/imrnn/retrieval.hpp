#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "imrnn/adapter.hpp"
#include "imrnn/embedding_store.hpp"
#include "imrnn/ranking.hpp"

namespace imrnn {

enum class AggregationMode { FullCorpus, CandidatePool };

/// Documents whose adapter transforms are averaged into the query modulation.
/// An empty candidate pool falls back to the full corpus.
struct AggregationSet {
    AggregationMode mode = AggregationMode::FullCorpus;
    std::vector<std::size_t> pool;  // corpus indices, used in CandidatePool mode

    static AggregationSet full_corpus() { return {}; }
    static AggregationSet candidates(std::vector<std::size_t> indices) {
        return {AggregationMode::CandidatePool, std::move(indices)};
    }
    bool uses_full_corpus() const noexcept {
        return mode == AggregationMode::FullCorpus || pool.empty();
    }
};

/// Everything computed for one query before scoring.
struct QueryModulation {
    Vector q_proj;
    Vector q_mod;
    ModulationTransform query_transform;  // from the query adapter; applied to documents
    ModulationTransform corpus_transform; // mean document-adapter transform; applied to the query
};

/// Serves a checkpoint over a fixed corpus. Document projections and
/// document-adapter hidden states are computed once at construction; per query
/// only the adapters' output heads and the O(N·m²) document modulation run.
class ModulatedRetriever {
  public:
    ModulatedRetriever(const AdapterCheckpoint& checkpoint, const EmbeddingSet& corpus);

    const AdapterCheckpoint& checkpoint() const noexcept { return checkpoint_; }
    const EmbeddingSet& corpus() const noexcept { return corpus_; }
    std::span<const double> doc_projection(std::size_t i) const { return doc_proj_.at(i); }

    QueryModulation modulate_query(std::span<const double> q_orig, const AggregationSet& aggregation) const;
    Vector modulate_doc(const QueryModulation& qm, std::size_t doc) const;

    /// modulated_score for every corpus document, in corpus order.
    std::vector<double> score_all(const QueryModulation& qm) const;

    RankedList retrieve(const std::string& query_id, std::span<const double> q_orig,
                        const AggregationSet& aggregation, std::size_t top_n) const;

    /// Ranking by layer-normed cosine of the unmodulated projections.
    RankedList retrieve_projected(const std::string& query_id, std::span<const double> q_orig,
                                  std::size_t top_n) const;

  private:
    const AdapterCheckpoint& checkpoint_;
    const EmbeddingSet& corpus_;
    std::vector<Vector> doc_proj_;
    std::vector<Vector> doc_hidden_;  // LN(relu(W1 d_proj + b1)) of the document adapter
};

RankedList retrieve_modulated(const AdapterCheckpoint& checkpoint, const std::string& query_id,
                              std::span<const double> q_orig, const EmbeddingSet& corpus,
                              const AggregationSet& aggregation, std::size_t top_n);

/// Plain cosine on the original embeddings. Zero-norm documents are reported by id.
RankedList retrieve_static(const std::string& query_id, std::span<const double> q_orig,
                           const EmbeddingSet& corpus, std::size_t top_n);

}  // namespace imrnn
