#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace imrnn::testkit {

Mat to_rows(const Matrix& m) {
    Mat out(m.rows(), Vec(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

Vec mat_vec(const Mat& a, const Vec& x) {
    Vec y(a.size(), 0.0);
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < x.size(); ++c) y[r] += a[r][c] * x[c];
    return y;
}

double ref_cosine(const Vec& a, const Vec& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

Vec ref_layer_norm(const Vec& v, double eps) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    Vec out(v.size());
    const double sd = std::sqrt(var + eps);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd == 0 ? 0.0 : (v[i] - mean) / sd;
    return out;
}

RefTransform ref_adapter(const AdapterMlp& mlp, const Vec& x, bool identity_residual, double eps) {
    const Mat w1 = to_rows(mlp.w1), w2 = to_rows(mlp.w2);
    Vec z = mat_vec(w1, x);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::max(0.0, z[i] + mlp.b1[i]);
    const Vec hidden = ref_layer_norm(z, eps);
    Vec raw = mat_vec(w2, hidden);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += mlp.b2[i];
    const std::size_t m = x.size();
    RefTransform t{Mat(m, Vec(m)), Vec(m)};
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) t.w[r][c] = raw[r * m + c] + (identity_residual && r == c ? 1.0 : 0.0);
    for (std::size_t i = 0; i < m; ++i) t.b[i] = raw[m * m + i];
    return t;
}

RefTransform ref_mean(const std::vector<RefTransform>& ts) {
    const std::size_t m = ts.front().b.size();
    RefTransform out{Mat(m, Vec(m, 0.0)), Vec(m, 0.0)};
    for (const auto& t : ts) {
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < m; ++c) out.w[r][c] += t.w[r][c];
            out.b[r] += t.b[r];
        }
    }
    const double n = static_cast<double>(ts.size());
    for (std::size_t r = 0; r < m; ++r) {
        for (auto& v : out.w[r]) v /= n;
        out.b[r] /= n;
    }
    return out;
}

Vec ref_apply(const RefTransform& t, const Vec& x) {
    Vec y = mat_vec(t.w, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t.b[i];
    return y;
}

namespace {

Vec as_vec(std::span<const double> s) { return Vec(s.begin(), s.end()); }

double ref_score(const Vec& q_mod, const Vec& d_mod, double eps) {
    return ref_cosine(ref_layer_norm(q_mod, eps), ref_layer_norm(d_mod, eps));
}

}  // namespace

std::vector<double> ref_modulated_scores(const AdapterCheckpoint& ckpt, const Vec& q, const EmbeddingSet& docs,
                                         const std::vector<std::size_t>& pool) {
    const Mat p = to_rows(ckpt.projection);
    const auto& cfg = ckpt.config;
    const Vec q_proj = mat_vec(p, q);
    std::vector<std::size_t> members = pool;
    if (members.empty()) {
        members.resize(docs.size());
        std::iota(members.begin(), members.end(), 0);
    }
    std::vector<RefTransform> doc_ts;
    for (auto i : members)
        doc_ts.push_back(ref_adapter(ckpt.doc_adapter, mat_vec(p, as_vec(docs.vector(i))), cfg.identity_residual,
                                     cfg.eps));
    const Vec q_mod = ref_apply(ref_mean(doc_ts), q_proj);
    const RefTransform tq = ref_adapter(ckpt.query_adapter, q_proj, cfg.identity_residual, cfg.eps);
    std::vector<double> scores;
    for (std::size_t i = 0; i < docs.size(); ++i)
        scores.push_back(ref_score(q_mod, ref_apply(tq, mat_vec(p, as_vec(docs.vector(i)))), cfg.eps));
    return scores;
}

std::vector<std::string> ref_order(const EmbeddingSet& docs, const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return docs.id(a) < docs.id(b);
    });
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(docs.id(i));
    return out;
}

double ref_triple_loss(const AdapterCheckpoint& ckpt, const Vec& q, const Vec& pos, const Vec& neg,
                       const std::vector<Vec>& pool, double margin) {
    const Mat p = to_rows(ckpt.projection);
    const auto& cfg = ckpt.config;
    std::vector<RefTransform> doc_ts;
    for (const auto& d : pool) doc_ts.push_back(ref_adapter(ckpt.doc_adapter, mat_vec(p, d), cfg.identity_residual, cfg.eps));
    const Vec q_proj = mat_vec(p, q);
    const Vec q_mod = ref_apply(ref_mean(doc_ts), q_proj);
    const RefTransform tq = ref_adapter(ckpt.query_adapter, q_proj, cfg.identity_residual, cfg.eps);
    const double sp = ref_score(q_mod, ref_apply(tq, mat_vec(p, pos)), cfg.eps);
    const double sn = ref_score(q_mod, ref_apply(tq, mat_vec(p, neg)), cfg.eps);
    return std::max(0.0, margin - sp + sn);
}

double ref_dcg(const std::vector<std::string>& order, const std::map<std::string, int>& judged, std::size_t k) {
    double dcg = 0;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
        auto it = judged.find(order[i]);
        const int g = it == judged.end() ? 0 : it->second;
        dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg;
}

double ref_ndcg(const std::vector<std::string>& order, const std::map<std::string, int>& judged, std::size_t k) {
    std::vector<std::pair<int, std::string>> ideal;
    for (const auto& [d, g] : judged) ideal.push_back({-g, d});
    std::sort(ideal.begin(), ideal.end());
    std::vector<std::string> ideal_order;
    for (const auto& [g, d] : ideal) ideal_order.push_back(d);
    const double idcg = ref_dcg(ideal_order, judged, k);
    if (idcg == 0) return -1.0;
    return ref_dcg(order, judged, k) / idcg;
}

double ref_recall(const std::vector<std::string>& order, const std::map<std::string, int>& judged, std::size_t k) {
    std::set<std::string> relevant, top;
    for (const auto& [d, g] : judged)
        if (g >= 1) relevant.insert(d);
    if (relevant.empty()) return -1.0;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) top.insert(order[i]);
    std::size_t hit = 0;
    for (const auto& d : relevant) hit += top.count(d);
    return static_cast<double>(hit) / static_cast<double>(relevant.size());
}

double ref_mrr(const std::vector<std::string>& order, const std::map<std::string, int>& judged) {
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto it = judged.find(order[i]);
        if (it != judged.end() && it->second >= 1) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

std::vector<std::string> ref_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double ref_bm25(const std::map<std::string, std::string>& corpus, const std::string& query, const std::string& doc,
                double k1, double b) {
    const double n = static_cast<double>(corpus.size());
    double total_len = 0;
    for (const auto& [id, text] : corpus) total_len += static_cast<double>(ref_tokens(text).size());
    const double avg = total_len / n;
    const auto doc_tokens = ref_tokens(corpus.at(doc));
    const double len = static_cast<double>(doc_tokens.size());
    double score = 0;
    for (const auto& term : ref_tokens(query)) {
        double df = 0;
        for (const auto& [id, text] : corpus) {
            const auto t = ref_tokens(text);
            if (std::find(t.begin(), t.end(), term) != t.end()) df += 1;
        }
        const double tf = static_cast<double>(std::count(doc_tokens.begin(), doc_tokens.end(), term));
        if (tf == 0) continue;
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
    }
    return score;
}

Mat ref_pseudoinverse(const Mat& p) {
    const std::size_t m = p.size(), n = p[0].size();
    // augmented system [G | P] with G = P Pᵀ
    Mat a(m, Vec(m + n, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t c = 0; c < n; ++c) a[i][j] += p[i][c] * p[j][c];
        for (std::size_t c = 0; c < n; ++c) a[i][m + c] = p[i][c];
    }
    std::vector<std::size_t> col(m);
    std::iota(col.begin(), col.end(), 0);
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t br = k, bc = k;
        for (std::size_t i = k; i < m; ++i)
            for (std::size_t j = k; j < m; ++j)
                if (std::abs(a[i][j]) > std::abs(a[br][bc])) br = i, bc = j;
        if (a[br][bc] == 0) throw std::runtime_error("oracle: singular Gram matrix");
        std::swap(a[k], a[br]);
        for (auto& row : a) std::swap(row[k], row[bc]);
        std::swap(col[k], col[bc]);
        for (std::size_t i = k + 1; i < m; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < m + n; ++j) a[i][j] -= f * a[k][j];
        }
    }
    // back substitution, then undo the column permutation (row order of X)
    Mat x(m, Vec(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        Vec y(m);
        for (std::size_t i = m; i-- > 0;) {
            double s = a[i][m + c];
            for (std::size_t j = i + 1; j < m; ++j) s -= a[i][j] * y[j];
            y[i] = s / a[i][i];
        }
        for (std::size_t i = 0; i < m; ++i) x[col[i]][c] = y[i];
    }
    Mat out(n, Vec(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < n; ++c) out[c][i] = x[i][c];
    return out;
}

}  // namespace imrnn::testkit
