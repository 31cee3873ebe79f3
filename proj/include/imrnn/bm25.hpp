#pragma once

// Lexical BM25 over raw corpus text. Supplies top-k candidate pools and the
// (query, positive, hard negative) triples used for training.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "imrnn/embedding_store.hpp"
#include "imrnn/ranking.hpp"

namespace imrnn {

/// Lowercases and splits on anything that is not a letter or digit.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

struct Posting {
    std::uint32_t doc;  // index into InvertedIndex::doc_ids()
    std::uint32_t tf;
};

class InvertedIndex {
  public:
    static InvertedIndex build(const CorpusText& corpus);

    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    std::uint32_t doc_length(std::size_t doc) const { return doc_lengths_.at(doc); }

    /// Postings sorted by doc id; empty span for unknown terms.
    std::span<const Posting> postings(const std::string& term) const;
    std::size_t document_frequency(const std::string& term) const {
        return postings(term).size();
    }

    std::size_t doc_index(const std::string& doc_id) const;
    const std::unordered_map<std::string, std::vector<Posting>>& all_postings() const noexcept {
        return postings_;
    }

  private:
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::size_t> doc_index_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_length_ = 0.0;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
double bm25_idf(std::size_t doc_count, std::size_t df);

double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                  const std::string& doc_id, const Bm25Params& params = {});

/// Documents with positive score, by descending score then ascending doc id.
std::vector<ScoredDoc> top_k_candidates(const InvertedIndex& index, std::string_view query_text,
                                        std::size_t k, const Bm25Params& params = {});

struct TrainingTriple {
    std::string query_id;
    std::string pos_id;
    std::string neg_id;

    bool operator==(const TrainingTriple&) const = default;
};

struct MiningResult {
    std::vector<TrainingTriple> triples;
    /// Queries whose whole top-k pool was judged relevant.
    std::vector<std::string> skipped;
};

/// One triple per query: a uniformly drawn positive and the highest-ranked
/// non-positive BM25 candidate within the top k.
MiningResult mine_triples(const InvertedIndex& index, const Qrels& qrels, const CorpusText& queries,
                          std::size_t k, std::uint64_t seed, const Bm25Params& params = {});

void write_triples(const std::vector<TrainingTriple>& triples, const std::filesystem::path& path);
std::vector<TrainingTriple> load_triples(const std::filesystem::path& path);

}  // namespace imrnn
