#include "imrnn/retrieval.hpp"

#include "imrnn/error.hpp"

namespace imrnn {

ModulatedRetriever::ModulatedRetriever(const AdapterCheckpoint& checkpoint, const EmbeddingSet& corpus)
    : checkpoint_(checkpoint), corpus_(corpus) {
    if (corpus.empty()) throw Error("cannot retrieve over an empty corpus");
    if (corpus.dim() != checkpoint.config.n) {
        throw DimensionError("corpus embeddings vs checkpoint n", checkpoint.config.n, corpus.dim());
    }
    doc_proj_.reserve(corpus.size());
    doc_hidden_.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        doc_proj_.push_back(project(checkpoint.projection, corpus.vector(i)));
        doc_hidden_.push_back(
            adapter_hidden(checkpoint.doc_adapter, doc_proj_.back(), checkpoint.config.eps).hidden);
    }
}

QueryModulation ModulatedRetriever::modulate_query(std::span<const double> q_orig,
                                                   const AggregationSet& aggregation) const {
    const auto& cfg = checkpoint_.config;
    if (q_orig.size() != cfg.n) throw DimensionError("query embedding vs checkpoint n", cfg.n, q_orig.size());
    QueryModulation qm;
    qm.q_proj = project(checkpoint_.projection, q_orig);
    qm.query_transform = adapter_forward(checkpoint_.query_adapter, qm.q_proj, cfg.identity_residual, cfg.eps);

    Vector mean_hidden(cfg.h, 0.0);
    auto accumulate = [&](std::size_t i) {
        const auto& hdn = doc_hidden_[i];
        for (std::size_t j = 0; j < mean_hidden.size(); ++j) mean_hidden[j] += hdn[j];
    };
    std::size_t count = 0;
    if (aggregation.uses_full_corpus()) {
        for (std::size_t i = 0; i < doc_hidden_.size(); ++i) accumulate(i);
        count = doc_hidden_.size();
    } else {
        for (auto i : aggregation.pool) {
            if (i >= doc_hidden_.size()) throw NotFoundError("candidate pool index out of range");
            accumulate(i);
        }
        count = aggregation.pool.size();
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (auto& v : mean_hidden) v *= inv;
    qm.corpus_transform = adapter_head(checkpoint_.doc_adapter, mean_hidden, cfg.identity_residual);
    qm.q_mod = modulate(qm.corpus_transform, qm.q_proj);
    return qm;
}

Vector ModulatedRetriever::modulate_doc(const QueryModulation& qm, std::size_t doc) const {
    return modulate(qm.query_transform, doc_proj_.at(doc));
}

std::vector<double> ModulatedRetriever::score_all(const QueryModulation& qm) const {
    const double eps = checkpoint_.config.eps;
    const Vector q_norm = layer_norm(qm.q_mod, eps);
    std::vector<double> scores(doc_proj_.size());
    for (std::size_t i = 0; i < doc_proj_.size(); ++i) {
        scores[i] = cosine(q_norm, layer_norm(modulate(qm.query_transform, doc_proj_[i]), eps));
    }
    return scores;
}

RankedList ModulatedRetriever::retrieve(const std::string& query_id, std::span<const double> q_orig,
                                        const AggregationSet& aggregation, std::size_t top_n) const {
    const auto scores = score_all(modulate_query(q_orig, aggregation));
    std::vector<ScoredDoc> scored;
    scored.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scored.push_back({corpus_.id(i), scores[i]});
    return make_ranked_list(query_id, std::move(scored), top_n);
}

RankedList ModulatedRetriever::retrieve_projected(const std::string& query_id,
                                                  std::span<const double> q_orig,
                                                  std::size_t top_n) const {
    const auto& cfg = checkpoint_.config;
    if (q_orig.size() != cfg.n) throw DimensionError("query embedding vs checkpoint n", cfg.n, q_orig.size());
    const Vector q_norm = layer_norm(project(checkpoint_.projection, q_orig), cfg.eps);
    std::vector<ScoredDoc> scored;
    scored.reserve(doc_proj_.size());
    for (std::size_t i = 0; i < doc_proj_.size(); ++i) {
        scored.push_back({corpus_.id(i), cosine(q_norm, layer_norm(doc_proj_[i], cfg.eps))});
    }
    return make_ranked_list(query_id, std::move(scored), top_n);
}

RankedList retrieve_modulated(const AdapterCheckpoint& checkpoint, const std::string& query_id,
                              std::span<const double> q_orig, const EmbeddingSet& corpus,
                              const AggregationSet& aggregation, std::size_t top_n) {
    return ModulatedRetriever(checkpoint, corpus).retrieve(query_id, q_orig, aggregation, top_n);
}

RankedList retrieve_static(const std::string& query_id, std::span<const double> q_orig,
                           const EmbeddingSet& corpus, std::size_t top_n) {
    if (corpus.empty()) throw Error("cannot retrieve over an empty corpus");
    if (q_orig.size() != corpus.dim()) throw DimensionError("query vs corpus embeddings", corpus.dim(), q_orig.size());
    if (norm2(q_orig) == 0.0) throw ZeroNormError("query '" + query_id + "' has a zero-norm embedding");
    std::vector<ScoredDoc> scored;
    scored.reserve(corpus.size());
    std::string zero_norm;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto d = corpus.vector(i);
        if (norm2(d) == 0.0) {
            zero_norm += (zero_norm.empty() ? "" : ", ") + corpus.id(i);
            continue;
        }
        scored.push_back({corpus.id(i), static_score(q_orig, d)});
    }
    if (!zero_norm.empty()) throw ZeroNormError("zero-norm document embeddings: " + zero_norm);
    return make_ranked_list(query_id, std::move(scored), top_n);
}

}  // namespace imrnn
