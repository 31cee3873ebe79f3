#pragma once

// nDCG@k (gain 2^grade - 1, log2 discount), Recall@k and MRR against graded
// qrels. A document is relevant for Recall/MRR when its grade is >= 1.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imrnn/embedding_store.hpp"
#include "imrnn/ranking.hpp"

namespace imrnn {

using Judgments = std::map<std::string, int>;

/// nullopt when the ideal DCG is zero (no graded-relevant document).
std::optional<double> ndcg_at_k(const RankedList& ranked, const Judgments& judged, std::size_t k);

/// nullopt when the query has no relevant document.
std::optional<double> recall_at_k(const RankedList& ranked, const Judgments& judged, std::size_t k);

/// Reciprocal rank of the first relevant document over the full list; 0 if none.
double mrr(const RankedList& ranked, const Judgments& judged);

struct QueryMetrics {
    std::string query_id;
    std::optional<double> ndcg;
    std::optional<double> recall;
    std::optional<double> mrr;  // absent for queries without relevant documents
};

struct MetricReport {
    std::size_t k = 10;
    std::vector<QueryMetrics> per_query;
    double mean_ndcg = 0.0;
    double mean_recall = 0.0;
    double mean_mrr = 0.0;
    std::size_t query_count = 0;          // queries contributing to the means
    std::size_t zero_relevance_count = 0; // evaluated but excluded: nothing relevant judged
    std::size_t missing_qrels_count = 0;  // run queries absent from qrels

    nlohmann::ordered_json to_json() const;
    std::string to_table() const;
};

MetricReport evaluate(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k = 10);

}  // namespace imrnn
