#pragma once

// Explains a ranking change by lifting the modulation deltas back to the
// encoder space with the pseudoinverse of the projection, then ranking
// vocabulary tokens by cosine with the lifted delta.

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imrnn/adapter.hpp"
#include "imrnn/embedding_store.hpp"
#include "imrnn/retrieval.hpp"

namespace imrnn {

struct ModulationDelta {
    Vector delta_q;
    Vector delta_d;
    /// cos(q_mod, d_mod) - cos(q_proj, d_proj) on raw (not layer-normed) vectors.
    double delta_similarity = 0.0;
    double original_similarity = 0.0;
    double modulated_similarity = 0.0;
};

ModulationDelta compute_delta(std::span<const double> q_proj, std::span<const double> q_mod,
                              std::span<const double> d_proj, std::span<const double> d_mod);

/// P⁺ · delta. Computes the pseudoinverse on every call; see BackProjector.
Vector back_project(const Matrix& projection, std::span<const double> delta);

/// Caches P⁺ for repeated back-projection with one projection matrix.
class BackProjector {
  public:
    explicit BackProjector(const Matrix& projection);
    Vector operator()(std::span<const double> delta) const;
    const Matrix& pseudoinverse() const noexcept { return pinv_; }

  private:
    Matrix pinv_;
};

/// Vocabulary cleanup applied before attribution. Surface forms are normalized
/// (a leading "▁" word marker is stripped) before the remaining rules run.
struct TokenFilter {
    bool drop_special = true;        // [CLS]-like, <s>-like, control characters
    std::size_t min_length = 2;      // in code points
    bool require_letter = true;      // drops pure punctuation / numeric tokens
    bool drop_continuations = true;  // "##"-prefixed word pieces
    std::set<std::string> stoplist;  // compared case-insensitively (ASCII)

    /// Normalized surface form, or nullopt when the token is filtered out.
    std::optional<std::string> accept(const std::string& token) const;
    nlohmann::ordered_json to_json() const;
};

/// Filtered token table with precomputed norms. Duplicate normalized forms keep
/// their first occurrence.
class TokenTable {
  public:
    TokenTable(const EmbeddingSet& tokens, const TokenFilter& filter);

    std::size_t size() const noexcept { return names_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    std::span<const double> vector(std::size_t i) const { return set_.vector(rows_[i]); }
    double norm(std::size_t i) const { return norms_[i]; }

  private:
    const EmbeddingSet& set_;
    std::size_t dim_;
    std::vector<std::string> names_;
    std::vector<std::size_t> rows_;
    std::vector<double> norms_;
};

struct TokenAttribution {
    std::string token;
    double score;  // cos(delta_orig, e_t)

    bool emphasized() const noexcept { return score > 0.0; }
    bool operator==(const TokenAttribution&) const = default;
};

struct AttributionResult {
    bool no_modulation = false;              // delta was exactly zero
    std::vector<TokenAttribution> by_magnitude;  // top_j by |score|
    std::vector<TokenAttribution> emphasized;    // top_j most positive
    std::vector<TokenAttribution> deemphasized;  // top_j most negative
};

AttributionResult token_attribution(std::span<const double> delta_orig, const TokenTable& table,
                                    std::size_t top_j);
AttributionResult token_attribution(std::span<const double> delta_orig, const EmbeddingSet& tokens,
                                    std::size_t top_j, const TokenFilter& filter = {});

struct ExplanationReport {
    std::string query_id;
    std::string doc_id;
    double orig_sim = 0.0;
    double mod_sim = 0.0;
    double delta_similarity = 0.0;
    std::size_t rank_before = 0;  // projected-cosine ranking, 1-based
    std::size_t rank_after = 0;   // modulated ranking, 1-based
    std::optional<int> relevance;
    AttributionResult query_tokens;  // from delta_q
    AttributionResult doc_tokens;    // from delta_d of this document
    std::size_t top_j = 5;
    nlohmann::ordered_json filter;
    std::string aggregation;

    nlohmann::ordered_json to_json() const;
};

/// Plain-text table with the columns Query | Doc | Rel | Orig. Sim | Mod. Sim |
/// Δ Sim | Rank | Query keywords | Document keywords.
std::string format_report_table(const std::vector<ExplanationReport>& reports);

/// Explains (query, document) pairs for one checkpoint, corpus and token table.
class Explainer {
  public:
    Explainer(const AdapterCheckpoint& checkpoint, const EmbeddingSet& corpus, const EmbeddingSet& tokens,
              TokenFilter filter = {});

    ExplanationReport explain(const std::string& query_id, std::span<const double> q_orig,
                              const std::string& doc_id, const AggregationSet& aggregation,
                              const Qrels* qrels = nullptr, std::size_t top_j = 5) const;

  private:
    const AdapterCheckpoint& checkpoint_;
    ModulatedRetriever retriever_;
    BackProjector back_projector_;
    TokenFilter filter_;
    TokenTable tokens_;
};

ExplanationReport explain(const AdapterCheckpoint& checkpoint, const std::string& query_id,
                          std::span<const double> q_orig, const std::string& doc_id,
                          const EmbeddingSet& corpus, const EmbeddingSet& tokens,
                          const AggregationSet& aggregation, const Qrels* qrels = nullptr,
                          std::size_t top_j = 5, const TokenFilter& filter = {});

}  // namespace imrnn
