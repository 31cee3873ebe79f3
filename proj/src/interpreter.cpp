#include "imrnn/interpreter.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "imrnn/error.hpp"

namespace imrnn {

ModulationDelta compute_delta(std::span<const double> q_proj, std::span<const double> q_mod,
                              std::span<const double> d_proj, std::span<const double> d_mod) {
    const std::size_t m = q_proj.size();
    for (auto v : {q_mod, d_proj, d_mod})
        if (v.size() != m) throw DimensionError("compute_delta", m, v.size());
    ModulationDelta d;
    d.delta_q.resize(m);
    d.delta_d.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        d.delta_q[i] = q_mod[i] - q_proj[i];
        d.delta_d[i] = d_mod[i] - d_proj[i];
    }
    d.original_similarity = cosine(q_proj, d_proj);
    d.modulated_similarity = cosine(q_mod, d_mod);
    d.delta_similarity = d.modulated_similarity - d.original_similarity;
    return d;
}

Vector back_project(const Matrix& projection, std::span<const double> delta) {
    return BackProjector(projection)(delta);
}

BackProjector::BackProjector(const Matrix& projection) : pinv_(imrnn::pseudoinverse(projection)) {}

Vector BackProjector::operator()(std::span<const double> delta) const { return matvec(pinv_, delta); }

namespace {

std::size_t code_points(const std::string& s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string ascii_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

constexpr std::string_view kWordMarker = "\xE2\x96\x81";  // U+2581

}  // namespace

std::optional<std::string> TokenFilter::accept(const std::string& token) const {
    std::string t = token;
    while (t.starts_with(kWordMarker)) t.erase(0, kWordMarker.size());
    if (drop_continuations && t.starts_with("##")) return std::nullopt;
    if (drop_special) {
        const bool bracketed = t.size() >= 2 && ((t.front() == '[' && t.back() == ']') ||
                                                 (t.front() == '<' && t.back() == '>'));
        const bool control = std::any_of(t.begin(), t.end(), [](char c) {
            const auto u = static_cast<unsigned char>(c);
            return u < 0x20 || u == 0x7F;
        });
        if (bracketed || control) return std::nullopt;
    }
    if (code_points(t) < min_length) return std::nullopt;
    if (require_letter) {
        const bool letter = std::any_of(t.begin(), t.end(), [](char c) {
            const auto u = static_cast<unsigned char>(c);
            return std::isalpha(u) || u >= 0x80;
        });
        if (!letter) return std::nullopt;
    }
    if (!stoplist.empty() && stoplist.contains(ascii_lower(t))) return std::nullopt;
    return t;
}

nlohmann::ordered_json TokenFilter::to_json() const {
    return {{"drop_special", drop_special},
            {"min_length", min_length},
            {"require_letter", require_letter},
            {"drop_continuations", drop_continuations},
            {"stoplist_size", stoplist.size()}};
}

TokenTable::TokenTable(const EmbeddingSet& tokens, const TokenFilter& filter)
    : set_(tokens), dim_(tokens.dim()) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto name = filter.accept(tokens.id(i));
        if (!name || !seen.insert(*name).second) continue;
        const double nrm = norm2(tokens.vector(i));
        if (nrm == 0.0) continue;  // cosine undefined
        names_.push_back(std::move(*name));
        rows_.push_back(i);
        norms_.push_back(nrm);
    }
}

AttributionResult token_attribution(std::span<const double> delta_orig, const TokenTable& table,
                                    std::size_t top_j) {
    if (delta_orig.size() != table.dim()) throw DimensionError("token table vs delta", delta_orig.size(), table.dim());
    AttributionResult result;
    const double delta_norm = norm2(delta_orig);
    if (delta_norm == 0.0) {
        result.no_modulation = true;
        return result;
    }
    if (table.size() == 0) throw Error("token vocabulary is empty after filtering");

    std::vector<TokenAttribution> all;
    all.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double s = std::clamp(dot(delta_orig, table.vector(i)) / (delta_norm * table.norm(i)), -1.0, 1.0);
        all.push_back({table.name(i), s});
    }

    auto take = [&](auto better, auto keep) {
        std::vector<TokenAttribution> picked;
        for (const auto& a : all)
            if (keep(a)) picked.push_back(a);
        const std::size_t n = std::min(top_j, picked.size());
        std::partial_sort(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(n), picked.end(), better);
        picked.resize(n);
        return picked;
    };
    auto by_name = [](const TokenAttribution& a, const TokenAttribution& b) { return a.token < b.token; };
    result.by_magnitude = take(
        [&](const TokenAttribution& a, const TokenAttribution& b) {
            const double x = std::abs(a.score), y = std::abs(b.score);
            return x != y ? x > y : by_name(a, b);
        },
        [](const TokenAttribution& a) { return a.score != 0.0; });
    result.emphasized = take(
        [&](const TokenAttribution& a, const TokenAttribution& b) {
            return a.score != b.score ? a.score > b.score : by_name(a, b);
        },
        [](const TokenAttribution& a) { return a.score > 0.0; });
    result.deemphasized = take(
        [&](const TokenAttribution& a, const TokenAttribution& b) {
            return a.score != b.score ? a.score < b.score : by_name(a, b);
        },
        [](const TokenAttribution& a) { return a.score < 0.0; });
    return result;
}

AttributionResult token_attribution(std::span<const double> delta_orig, const EmbeddingSet& tokens,
                                    std::size_t top_j, const TokenFilter& filter) {
    return token_attribution(delta_orig, TokenTable(tokens, filter), top_j);
}

namespace {

nlohmann::ordered_json attribution_json(const AttributionResult& r) {
    auto list = [](const std::vector<TokenAttribution>& v) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& a : v) arr.push_back({{"token", a.token}, {"score", a.score}});
        return arr;
    };
    return {{"no_modulation", r.no_modulation},
            {"emphasized", list(r.emphasized)},
            {"deemphasized", list(r.deemphasized)},
            {"by_magnitude", list(r.by_magnitude)}};
}

std::size_t rank_of(const RankedList& list, const std::string& doc_id) {
    for (std::size_t i = 0; i < list.entries.size(); ++i)
        if (list.entries[i].doc_id == doc_id) return i + 1;
    throw NotFoundError("document '" + doc_id + "' missing from ranking");
}

std::string keywords(const AttributionResult& r) {
    if (r.no_modulation) return "(no modulation)";
    std::string out;
    for (const auto& a : r.emphasized) out += (out.empty() ? "+" : ", +") + a.token;
    for (const auto& a : r.deemphasized) out += (out.empty() ? "-" : ", -") + a.token;
    return out.empty() ? "-" : out;
}

}  // namespace

nlohmann::ordered_json ExplanationReport::to_json() const {
    nlohmann::ordered_json j;
    j["query_id"] = query_id;
    j["doc_id"] = doc_id;
    j["relevance"] = relevance ? nlohmann::ordered_json(*relevance) : nlohmann::ordered_json(nullptr);
    j["orig_sim"] = orig_sim;
    j["mod_sim"] = mod_sim;
    j["delta_similarity"] = delta_similarity;
    j["rank_before"] = rank_before;
    j["rank_after"] = rank_after;
    j["query_tokens"] = attribution_json(query_tokens);
    j["doc_tokens"] = attribution_json(doc_tokens);
    j["top_j"] = top_j;
    j["filter"] = filter;
    j["aggregation"] = aggregation;
    j["vocabulary"] = "token table supplied with the encoder embeddings";
    return j;
}

std::string format_report_table(const std::vector<ExplanationReport>& reports) {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-12s %-12s %4s %9s %9s %8s %11s  %-40s %s\n", "Query", "Doc", "Rel",
                  "Orig.Sim", "Mod.Sim", "dSim", "Rank", "Query keywords", "Document keywords");
    out += buf;
    for (const auto& r : reports) {
        const std::string rel = r.relevance ? std::to_string(*r.relevance) : "-";
        const std::string rank = std::to_string(r.rank_before) + "->" + std::to_string(r.rank_after);
        std::snprintf(buf, sizeof buf, "%-12s %-12s %4s %9.4f %9.4f %+8.4f %11s  %-40s %s\n", r.query_id.c_str(),
                      r.doc_id.c_str(), rel.c_str(), r.orig_sim, r.mod_sim, r.delta_similarity, rank.c_str(),
                      keywords(r.query_tokens).c_str(), keywords(r.doc_tokens).c_str());
        out += buf;
    }
    return out;
}

Explainer::Explainer(const AdapterCheckpoint& checkpoint, const EmbeddingSet& corpus, const EmbeddingSet& tokens,
                     TokenFilter filter)
    : checkpoint_(checkpoint),
      retriever_(checkpoint, corpus),
      back_projector_(checkpoint.projection),
      filter_(std::move(filter)),
      tokens_(tokens, filter_) {
    if (tokens.dim() != checkpoint.config.n) {
        throw DimensionError("token table vs checkpoint n", checkpoint.config.n, tokens.dim());
    }
}

ExplanationReport Explainer::explain(const std::string& query_id, std::span<const double> q_orig,
                                     const std::string& doc_id, const AggregationSet& aggregation,
                                     const Qrels* qrels, std::size_t top_j) const {
    const auto& corpus = retriever_.corpus();
    const std::size_t doc = corpus.index_of(doc_id);
    const auto qm = retriever_.modulate_query(q_orig, aggregation);
    const Vector d_mod = retriever_.modulate_doc(qm, doc);
    const auto delta = compute_delta(qm.q_proj, qm.q_mod, retriever_.doc_projection(doc), d_mod);

    ExplanationReport r;
    r.query_id = query_id;
    r.doc_id = doc_id;
    r.orig_sim = delta.original_similarity;
    r.mod_sim = delta.modulated_similarity;
    r.delta_similarity = r.mod_sim - r.orig_sim;
    r.rank_before = rank_of(retriever_.retrieve_projected(query_id, q_orig, corpus.size()), doc_id);
    std::vector<ScoredDoc> scored;
    const auto scores = retriever_.score_all(qm);
    for (std::size_t i = 0; i < scores.size(); ++i) scored.push_back({corpus.id(i), scores[i]});
    r.rank_after = rank_of(make_ranked_list(query_id, std::move(scored), corpus.size()), doc_id);
    if (qrels != nullptr) r.relevance = grade_of(*qrels, query_id, doc_id);
    r.query_tokens = token_attribution(back_projector_(delta.delta_q), tokens_, top_j);
    r.doc_tokens = token_attribution(back_projector_(delta.delta_d), tokens_, top_j);
    r.top_j = top_j;
    r.filter = filter_.to_json();
    r.aggregation = aggregation.uses_full_corpus()
                        ? std::string("full-corpus")
                        : "candidate-pool(" + std::to_string(aggregation.pool.size()) + ")";
    return r;
}

ExplanationReport explain(const AdapterCheckpoint& checkpoint, const std::string& query_id,
                          std::span<const double> q_orig, const std::string& doc_id,
                          const EmbeddingSet& corpus, const EmbeddingSet& tokens,
                          const AggregationSet& aggregation, const Qrels* qrels, std::size_t top_j,
                          const TokenFilter& filter) {
    return Explainer(checkpoint, corpus, tokens, filter).explain(query_id, q_orig, doc_id, aggregation, qrels, top_j);
}

}  // namespace imrnn
