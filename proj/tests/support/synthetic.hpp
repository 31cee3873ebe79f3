#pragma once

// Seeded synthetic retrieval task with relevance planted in a low-dimensional
// subspace and corrupted by large distractor directions outside it.
//
// Topic directions u_t are unit vectors inside a `subspace_dim`-dimensional
// subspace S. The relevance direction r is a unit vector orthogonal to S, and
// the distractor directions span part of the complement of S + r.
//   document of topic t:  a·u_t + Σ c_j·D_j + noise + (β or β₀)·r
//   query of topic t:     u_t + γ·r + Σ c'_j·D_j + noise
// Static cosine is swamped by the distractor energy; a projection that keeps
// S + r and drops the distractors recovers the ranking. Texts make BM25
// return same-topic documents, so mined hard negatives are same-topic
// non-relevant documents.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imrnn/embedding_store.hpp"

namespace imrnn::testkit {

struct SyntheticParams {
    std::size_t dim = 64;
    std::size_t topics = 10;
    std::size_t docs_per_topic = 50;
    std::size_t relevant_per_topic = 10;
    std::size_t train_queries = 80;
    std::size_t validation_queries = 20;
    std::size_t test_queries = 20;
    std::size_t subspace_dim = 10;
    bool orthogonal_topics = true;   // u_t = basis vectors of S (needs topics <= subspace_dim)
    std::size_t distractors = 12;
    double topic_weight = 1.0;
    double distractor_scale = 0.3;
    double query_distractor_scale = 0.1;
    double relevance_weight = 0.5;
    double nonrelevant_weight = -0.5;  // r coefficient of non-relevant documents
    double query_relevance_weight = 0.0;
    double doc_noise = 0.02;
    double query_noise = 0.05;
    std::size_t random_tokens = 500;
    std::string planted_token = "relevance";
    std::uint64_t seed = 7;
};

struct SyntheticTask {
    EmbeddingSet queries;
    EmbeddingSet docs;
    EmbeddingSet tokens;  // planted token first, then random distractor tokens
    Qrels qrels;
    CorpusText doc_text;
    CorpusText query_text;
    std::vector<std::string> train_ids;
    std::vector<std::string> validation_ids;
    std::vector<std::string> test_ids;
    std::vector<double> relevance_direction;  // unit vector r
    std::string planted_token;

    Qrels qrels_for(const std::vector<std::string>& ids) const;
};

SyntheticTask make_synthetic_task(const SyntheticParams& params = {});

/// `count` random Gaussian vectors with ids prefix0, prefix1, ...
EmbeddingSet random_embeddings(std::uint64_t seed, std::size_t count, std::size_t dim, EmbeddingKind kind,
                               const std::string& prefix = "x");

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

/// Writes the task as CLI inputs: queries.emb, docs.emb, tokens.emb,
/// corpus.jsonl, queries.jsonl, qrels.txt and train/validation/test qrels.
void write_task_files(const SyntheticTask& task, const std::filesystem::path& dir);

}  // namespace imrnn::testkit
