#include "imrnn/ranking.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "imrnn/error.hpp"
#include "imrnn/io.hpp"

namespace imrnn {

RankedList make_ranked_list(std::string query_id, std::vector<ScoredDoc> scored, std::size_t top_n) {
    const std::size_t n = std::min(top_n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      ranks_before);
    scored.resize(n);
    return {std::move(query_id), std::move(scored)};
}

std::string format_run(const std::vector<RankedList>& run, const std::string& tag) {
    std::string out;
    char score[64];
    for (const auto& list : run) {
        for (std::size_t i = 0; i < list.entries.size(); ++i) {
            std::snprintf(score, sizeof score, "%.6f", list.entries[i].score);
            out += list.query_id;
            out += " Q0 ";
            out += list.entries[i].doc_id;
            out += ' ';
            out += std::to_string(i + 1);
            out += ' ';
            out += score;
            out += ' ';
            out += tag;
            out += '\n';
        }
    }
    return out;
}

void write_run(const std::vector<RankedList>& run, const std::filesystem::path& path,
               const std::string& tag) {
    if (tag.empty() || tag.find_first_of(" \t\n") != std::string::npos) {
        throw Error("run tag must be a non-empty word");
    }
    const auto text = format_run(run, tag);
    io::write_atomic(path, [&](std::ostream& out) { out << text; });
}

std::vector<RankedList> load_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run file: " + path.string());

    struct Row {
        long rank;
        ScoredDoc doc;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<Row>> rows;
    std::unordered_map<std::string, std::set<std::string>> seen;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, docid, rank_text, score_text, tag, extra;
        if (!(fields >> qid)) continue;
        if (!(fields >> q0 >> docid >> rank_text >> score_text >> tag) || (fields >> extra)) {
            throw ParseError(path.string(), line_no, "expected 6 columns: qid Q0 docid rank score tag");
        }
        long rank = 0;
        double score = 0.0;
        try {
            std::size_t used = 0;
            rank = std::stol(rank_text, &used);
            if (used != rank_text.size()) throw std::invalid_argument("rank");
            score = std::stod(score_text, &used);
            if (used != score_text.size()) throw std::invalid_argument("score");
        } catch (const std::exception&) {
            throw ParseError(path.string(), line_no, "rank must be an integer and score a number");
        }
        if (!seen[qid].insert(docid).second) {
            throw ParseError(path.string(), line_no, "duplicate document '" + docid + "' for query '" + qid + "'");
        }
        if (!rows.contains(qid)) order.push_back(qid);
        rows[qid].push_back({rank, {docid, score}});
    }

    std::vector<RankedList> run;
    run.reserve(order.size());
    for (const auto& qid : order) {
        auto& r = rows[qid];
        std::stable_sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        RankedList list{qid, {}};
        for (auto& row : r) list.entries.push_back(std::move(row.doc));
        run.push_back(std::move(list));
    }
    return run;
}

}  // namespace imrnn
