#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace imrnn {

struct ScoredDoc {
    std::string doc_id;
    double score;

    bool operator==(const ScoredDoc&) const = default;
};

/// Descending score, ties broken by ascending doc id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
}

struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    bool operator==(const RankedList&) const = default;
};

/// Sorts by the ranking rule and keeps the first `top_n` entries.
RankedList make_ranked_list(std::string query_id, std::vector<ScoredDoc> scored, std::size_t top_n);

/// TREC run format: `qid Q0 docid rank score tag`, score printed with 6 decimals.
void write_run(const std::vector<RankedList>& run, const std::filesystem::path& path,
               const std::string& tag);
std::string format_run(const std::vector<RankedList>& run, const std::string& tag);

/// Lists come back in first-appearance order of their query ids, entries in rank order.
std::vector<RankedList> load_run(const std::filesystem::path& path);

}  // namespace imrnn
