#include "imrnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>

namespace imrnn {

namespace {

int grade(const Judgments& judged, const std::string& doc) {
    auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

double gain(int g) { return std::exp2(static_cast<double>(g)) - 1.0; }

double discount(std::size_t rank_zero_based) {
    return 1.0 / std::log2(static_cast<double>(rank_zero_based) + 2.0);
}

std::size_t relevant_count(const Judgments& judged) {
    return static_cast<std::size_t>(
        std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second >= 1; }));
}

}  // namespace

std::optional<double> ndcg_at_k(const RankedList& ranked, const Judgments& judged, std::size_t k) {
    if (k == 0) throw Error("nDCG cutoff k must be >= 1");
    std::vector<int> ideal;
    for (const auto& [doc, g] : judged)
        if (g > 0) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) idcg += gain(ideal[i]) * discount(i);
    if (idcg == 0.0) return std::nullopt;

    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i) dcg += gain(grade(judged, ranked.entries[i].doc_id)) * discount(i);
    return dcg / idcg;
}

std::optional<double> recall_at_k(const RankedList& ranked, const Judgments& judged, std::size_t k) {
    if (k == 0) throw Error("Recall cutoff k must be >= 1");
    const std::size_t total = relevant_count(judged);
    if (total == 0) return std::nullopt;
    std::size_t hits = 0;
    const std::size_t depth = std::min(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (grade(judged, ranked.entries[i].doc_id) >= 1) ++hits;
    return static_cast<double>(hits) / static_cast<double>(total);
}

double mrr(const RankedList& ranked, const Judgments& judged) {
    for (std::size_t i = 0; i < ranked.entries.size(); ++i)
        if (grade(judged, ranked.entries[i].doc_id) >= 1) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

MetricReport evaluate(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k) {
    if (run.empty()) throw Error("cannot evaluate an empty run");
    MetricReport report;
    report.k = k;
    std::set<std::string> seen;
    double sum_ndcg = 0.0, sum_recall = 0.0, sum_mrr = 0.0;
    for (const auto& list : run) {
        if (!seen.insert(list.query_id).second) {
            throw Error("query '" + list.query_id + "' appears twice in the run");
        }
        auto it = qrels.find(list.query_id);
        if (it == qrels.end()) {
            ++report.missing_qrels_count;
            continue;
        }
        QueryMetrics qm{list.query_id, ndcg_at_k(list, it->second, k), recall_at_k(list, it->second, k),
                        std::nullopt};
        if (!qm.recall) {
            ++report.zero_relevance_count;
        } else {
            qm.mrr = mrr(list, it->second);
            sum_ndcg += *qm.ndcg;
            sum_recall += *qm.recall;
            sum_mrr += *qm.mrr;
            ++report.query_count;
        }
        report.per_query.push_back(std::move(qm));
    }
    if (report.missing_qrels_count > 0) {
        std::cerr << "warning: " << report.missing_qrels_count
                  << " run queries have no qrels and were excluded\n";
    }
    if (report.query_count > 0) {
        const auto n = static_cast<double>(report.query_count);
        report.mean_ndcg = sum_ndcg / n;
        report.mean_recall = sum_recall / n;
        report.mean_mrr = sum_mrr / n;
    }
    return report;
}

nlohmann::ordered_json MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["k"] = k;
    j["query_count"] = query_count;
    j["zero_relevance_count"] = zero_relevance_count;
    j["missing_qrels_count"] = missing_qrels_count;
    j["ndcg@" + std::to_string(k)] = mean_ndcg;
    j["recall@" + std::to_string(k)] = mean_recall;
    j["mrr"] = mean_mrr;
    auto& rows = j["per_query"] = nlohmann::ordered_json::array();
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    for (const auto& q : per_query) {
        rows.push_back({{"query_id", q.query_id},
                        {"ndcg", opt(q.ndcg)},
                        {"recall", opt(q.recall)},
                        {"mrr", opt(q.mrr)}});
    }
    return j;
}

std::string MetricReport::to_table() const {
    std::size_t width = 5;
    for (const auto& q : per_query) width = std::max(width, q.query_id.size());
    const auto ks = std::to_string(k);
    std::string out;
    char buf[256];
    auto cell = [](const std::optional<double>& v) {
        char c[32];
        if (v) std::snprintf(c, sizeof c, "%10.4f", *v);
        else std::snprintf(c, sizeof c, "%10s", "-");
        return std::string(c);
    };
    std::snprintf(buf, sizeof buf, "%-*s %10s %10s %10s\n", static_cast<int>(width), "query",
                  ("nDCG@" + ks).c_str(), ("R@" + ks).c_str(), "MRR");
    out += buf;
    for (const auto& q : per_query) {
        std::snprintf(buf, sizeof buf, "%-*s ", static_cast<int>(width), q.query_id.c_str());
        out += buf + cell(q.ndcg) + " " + cell(q.recall) + " " + cell(q.mrr) + "\n";
    }
    std::snprintf(buf, sizeof buf, "%-*s %10.4f %10.4f %10.4f\n", static_cast<int>(width), "mean",
                  mean_ndcg, mean_recall, mean_mrr);
    out += buf;
    std::snprintf(buf, sizeof buf, "queries=%zu excluded_no_relevant=%zu excluded_no_qrels=%zu\n",
                  query_count, zero_relevance_count, missing_qrels_count);
    out += buf;
    return out;
}

}  // namespace imrnn
