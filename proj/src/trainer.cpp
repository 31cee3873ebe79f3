#include "imrnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "imrnn/error.hpp"
#include "imrnn/metrics.hpp"
#include "imrnn/parallel.hpp"
#include "imrnn/random.hpp"
#include "imrnn/retrieval.hpp"

namespace imrnn {

void TrainConfig::validate() const {
    if (!(margin > 0.0)) throw Error("margin must be > 0");
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw Error("weight_decay must be >= 0");
    if (patience < 1) throw Error("patience must be >= 1");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (max_epochs < 1) throw Error("max_epochs must be >= 1");
    if (candidate_k < 1) throw Error("candidate_k must be >= 1");
    if (m < 2) throw Error("m must be >= 2");
    if (h < 2) throw Error("h must be >= 2");
    if (!(eps >= 0.0)) throw Error("eps must be >= 0");
    if (workers < 1) throw Error("workers must be >= 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay},
            {"batch_size", batch_size},       {"margin", margin},
            {"candidate_k", candidate_k},     {"patience", patience},
            {"max_epochs", max_epochs},       {"seed", seed},
            {"m", m},                         {"h", h},
            {"eps", eps},                     {"identity_residual", identity_residual},
            {"workers", workers}};
}

void TrainConfig::merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("training config must be a JSON object");
    auto positive_int = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw Error("config field '" + key + "' must be a non-negative integer");
        }
        return static_cast<std::size_t>(v.get<long long>());
    };
    auto number = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_number()) throw Error("config field '" + key + "' must be a number");
        return v.get<double>();
    };
    for (const auto& [key, v] : j.items()) {
        if (key == "learning_rate") learning_rate = number(v, key);
        else if (key == "weight_decay") weight_decay = number(v, key);
        else if (key == "batch_size") batch_size = positive_int(v, key);
        else if (key == "margin") margin = number(v, key);
        else if (key == "candidate_k") candidate_k = positive_int(v, key);
        else if (key == "patience") patience = positive_int(v, key);
        else if (key == "max_epochs") max_epochs = positive_int(v, key);
        else if (key == "seed") seed = positive_int(v, key);
        else if (key == "m") m = positive_int(v, key);
        else if (key == "h") h = positive_int(v, key);
        else if (key == "eps") eps = number(v, key);
        else if (key == "workers") workers = positive_int(v, key);
        else if (key == "identity_residual") {
            if (!v.is_boolean()) throw Error("config field 'identity_residual' must be a boolean");
            identity_residual = v.get<bool>();
        } else {
            throw Error("unknown training config field '" + key + "'");
        }
    }
}

double hinge_loss(double s_pos, double s_neg, double margin) {
    return std::max(0.0, margin - s_pos + s_neg);
}

GradientBundle GradientBundle::zeros_like(const AdapterCheckpoint& ckpt) {
    const auto m = ckpt.config.m;
    const auto h = ckpt.config.h;
    return {Matrix(ckpt.projection.rows(), ckpt.projection.cols()), AdapterMlp(m, h), AdapterMlp(m, h)};
}

namespace {

void axpy(std::span<double> y, std::span<const double> x, double a) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Calls fn on every tensor of `b`, in checkpoint order; works for const and mutable bundles.
template <typename Bundle, typename Fn>
void visit_tensors(Bundle& b, Fn&& fn) {
    fn(b.projection.values());
    for (auto* mlp : {&b.query_adapter, &b.doc_adapter}) {
        fn(mlp->w1.values());
        fn(std::span(mlp->b1));
        fn(mlp->w2.values());
        fn(std::span(mlp->b2));
    }
}

}  // namespace

void GradientBundle::add(const GradientBundle& other, double scale) {
    std::vector<std::span<const double>> src;
    visit_tensors(other, [&](std::span<const double> x) { src.push_back(x); });
    std::size_t i = 0;
    visit_tensors(*this, [&](std::span<double> y) { axpy(y, src[i++], scale); });
}

void GradientBundle::scale(double factor) {
    visit_tensors(*this, [&](std::span<double> y) {
        for (auto& v : y) v *= factor;
    });
}

bool GradientBundle::is_zero() const {
    bool zero = true;
    visit_tensors(*this, [&](std::span<const double> y) {
        zero = zero && std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    });
    return zero;
}

void for_each_parameter(AdapterCheckpoint& ckpt, const GradientBundle& grads,
                        const std::function<void(const std::string&, std::span<double>,
                                                 std::span<const double>)>& fn) {
    fn("projection", ckpt.projection.values(), grads.projection.values());
    for (auto [name, p, g] : {std::tuple{"query_adapter", &ckpt.query_adapter, &grads.query_adapter},
                              std::tuple{"doc_adapter", &ckpt.doc_adapter, &grads.doc_adapter}}) {
        const std::string prefix = name;
        fn(prefix + ".w1", p->w1.values(), g->w1.values());
        fn(prefix + ".b1", p->b1, g->b1);
        fn(prefix + ".w2", p->w2.values(), g->w2.values());
        fn(prefix + ".b2", p->b2, g->b2);
    }
}

TripleForward triple_forward(const AdapterCheckpoint& ckpt, std::span<const double> q_orig,
                             std::span<const double> pos_orig, std::span<const double> neg_orig,
                             std::span<const std::span<const double>> pool, double margin) {
    const auto& cfg = ckpt.config;
    if (pool.empty()) throw Error("triple_forward: empty aggregation pool");
    for (auto x : {q_orig, pos_orig, neg_orig})
        if (x.size() != cfg.n) throw DimensionError("triple_forward embedding", cfg.n, x.size());

    TripleForward f;
    f.margin = margin;
    f.q_orig.assign(q_orig.begin(), q_orig.end());
    f.pos_orig.assign(pos_orig.begin(), pos_orig.end());
    f.neg_orig.assign(neg_orig.begin(), neg_orig.end());
    f.q_proj = project(ckpt.projection, q_orig);
    f.pos_proj = project(ckpt.projection, pos_orig);
    f.neg_proj = project(ckpt.projection, neg_orig);

    f.pool_orig.reserve(pool.size());
    f.pool_proj.reserve(pool.size());
    f.pool_act.reserve(pool.size());
    f.pool_mean_hidden.assign(cfg.h, 0.0);
    for (auto d : pool) {
        if (d.size() != cfg.n) throw DimensionError("triple_forward pool embedding", cfg.n, d.size());
        f.pool_orig.emplace_back(d.begin(), d.end());
        f.pool_proj.push_back(project(ckpt.projection, d));
        f.pool_act.push_back(adapter_hidden(ckpt.doc_adapter, f.pool_proj.back(), cfg.eps));
        axpy(f.pool_mean_hidden, f.pool_act.back().hidden, 1.0);
    }
    for (auto& v : f.pool_mean_hidden) v /= static_cast<double>(pool.size());
    f.corpus_transform = adapter_head(ckpt.doc_adapter, f.pool_mean_hidden, cfg.identity_residual);

    f.query_act = adapter_hidden(ckpt.query_adapter, f.q_proj, cfg.eps);
    f.query_transform = adapter_head(ckpt.query_adapter, f.query_act.hidden, cfg.identity_residual);

    f.q_mod = modulate(f.corpus_transform, f.q_proj);
    f.pos_mod = modulate(f.query_transform, f.pos_proj);
    f.neg_mod = modulate(f.query_transform, f.neg_proj);
    f.s_pos = modulated_score(f.q_mod, f.pos_mod, cfg.eps);
    f.s_neg = modulated_score(f.q_mod, f.neg_mod, cfg.eps);
    f.loss = hinge_loss(f.s_pos, f.s_neg, margin);
    return f;
}

namespace {

struct Normalized {
    Vector y;
    double inv_sigma;
};

Normalized normalize(std::span<const double> x, double eps) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    const double sigma = std::sqrt(var + eps);
    return {layer_norm(x, eps), sigma > 0.0 ? 1.0 / sigma : 0.0};
}

// dx = (dy - mean(dy) - y·mean(dy ⊙ y)) / sigma
Vector layer_norm_backward(std::span<const double> y, double inv_sigma, std::span<const double> g_y) {
    const auto k = static_cast<double>(y.size());
    double mean_g = 0.0, mean_gy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        mean_g += g_y[i];
        mean_gy += g_y[i] * y[i];
    }
    mean_g /= k;
    mean_gy /= k;
    Vector g_x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) g_x[i] = inv_sigma * (g_y[i] - mean_g - y[i] * mean_gy);
    return g_x;
}

// s = u·v / (|u||v|):  ds/du = v/(|u||v|) - s·u/|u|²
void cosine_backward(std::span<const double> u, std::span<const double> v, double g_s,
                     std::span<double> g_u, std::span<double> g_v) {
    const double nu = norm2(u);
    const double nv = norm2(v);
    const double s = dot(u, v) / (nu * nv);
    for (std::size_t i = 0; i < u.size(); ++i) {
        g_u[i] += g_s * (v[i] / (nu * nv) - s * u[i] / (nu * nu));
        g_v[i] += g_s * (u[i] / (nu * nv) - s * v[i] / (nv * nv));
    }
}

// Back-propagates from the adapter's hidden vector to its input, accumulating
// W1/b1 gradients.
Vector hidden_backward(const AdapterMlp& mlp, const AdapterActivations& act,
                       std::span<const double> g_hidden, AdapterMlp& grad) {
    Vector g_pre = layer_norm_backward(act.hidden, act.inv_sigma, g_hidden);
    for (std::size_t i = 0; i < g_pre.size(); ++i)
        if (!(act.pre[i] > 0.0)) g_pre[i] = 0.0;
    add_outer(grad.w1, g_pre, act.input);
    axpy(grad.b1, g_pre, 1.0);
    return matvec_transposed(mlp.w1, g_pre);
}

// Flattened gradient of a transform, in the adapter's (W row-major, b) output layout.
Vector flatten_transform_gradient(const Matrix& g_w, std::span<const double> g_b) {
    Vector raw(g_w.values().begin(), g_w.values().end());
    raw.insert(raw.end(), g_b.begin(), g_b.end());
    return raw;
}

}  // namespace

void accumulate_triple_gradient(const AdapterCheckpoint& ckpt, const TripleForward& f,
                                GradientBundle& g) {
    if (!(f.loss > 0.0)) return;
    const auto& cfg = ckpt.config;
    const std::size_t m = cfg.m;

    const auto u = normalize(f.q_mod, cfg.eps);
    const auto vp = normalize(f.pos_mod, cfg.eps);
    const auto vn = normalize(f.neg_mod, cfg.eps);
    Vector g_u(m, 0.0), g_vp(m, 0.0), g_vn(m, 0.0);
    cosine_backward(u.y, vp.y, -1.0, g_u, g_vp);
    cosine_backward(u.y, vn.y, +1.0, g_u, g_vn);
    const Vector g_qmod = layer_norm_backward(u.y, u.inv_sigma, g_u);
    const Vector g_posmod = layer_norm_backward(vp.y, vp.inv_sigma, g_vp);
    const Vector g_negmod = layer_norm_backward(vn.y, vn.inv_sigma, g_vn);

    // d_mod = W_q d_proj + b_q
    Matrix g_wq(m, m);
    add_outer(g_wq, g_posmod, f.pos_proj);
    add_outer(g_wq, g_negmod, f.neg_proj);
    Vector g_bq = g_posmod;
    axpy(g_bq, g_negmod, 1.0);
    const Vector g_pos_proj = matvec_transposed(f.query_transform.weight, g_posmod);
    const Vector g_neg_proj = matvec_transposed(f.query_transform.weight, g_negmod);

    // q_mod = W̄ q_proj + b̄
    Matrix g_wbar(m, m);
    add_outer(g_wbar, g_qmod, f.q_proj);
    Vector g_q_proj = matvec_transposed(f.corpus_transform.weight, g_qmod);

    // query adapter
    {
        const Vector g_raw = flatten_transform_gradient(g_wq, g_bq);
        add_outer(g.query_adapter.w2, g_raw, f.query_act.hidden);
        axpy(g.query_adapter.b2, g_raw, 1.0);
        const Vector g_hidden = matvec_transposed(ckpt.query_adapter.w2, g_raw);
        axpy(g_q_proj, hidden_backward(ckpt.query_adapter, f.query_act, g_hidden, g.query_adapter), 1.0);
    }

    // document adapter: every pool member receives 1/N of the mean's gradient
    {
        const Vector g_raw = flatten_transform_gradient(g_wbar, g_qmod);
        add_outer(g.doc_adapter.w2, g_raw, f.pool_mean_hidden);
        axpy(g.doc_adapter.b2, g_raw, 1.0);
        Vector g_hidden = matvec_transposed(ckpt.doc_adapter.w2, g_raw);
        const double inv_n = 1.0 / static_cast<double>(f.pool_act.size());
        for (auto& v : g_hidden) v *= inv_n;
        for (std::size_t i = 0; i < f.pool_act.size(); ++i) {
            const Vector g_pool_proj = hidden_backward(ckpt.doc_adapter, f.pool_act[i], g_hidden, g.doc_adapter);
            add_outer(g.projection, g_pool_proj, f.pool_orig[i]);
        }
    }

    add_outer(g.projection, g_q_proj, f.q_orig);
    add_outer(g.projection, g_pos_proj, f.pos_orig);
    add_outer(g.projection, g_neg_proj, f.neg_orig);
}

GradientBundle triple_backward(const AdapterCheckpoint& ckpt, const TripleForward& fwd) {
    auto g = GradientBundle::zeros_like(ckpt);
    accumulate_triple_gradient(ckpt, fwd, g);
    return g;
}

AdamState AdamState::zeros_like(const AdapterCheckpoint& ckpt) {
    return {GradientBundle::zeros_like(ckpt), GradientBundle::zeros_like(ckpt), 0};
}

void adam_step(AdapterCheckpoint& ckpt, const GradientBundle& grads, AdamState& state,
               double learning_rate, double weight_decay) {
    for_each_parameter(ckpt, grads, [](const std::string& name, std::span<double>, std::span<const double> g) {
        if (!all_finite(g)) throw NonFiniteError("non-finite gradient in tensor " + name);
    });

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(AdamState::beta1, t);
    const double c2 = 1.0 - std::pow(AdamState::beta2, t);

    // walk parameters, first moments and second moments in lockstep
    std::vector<std::span<double>> first, second;
    visit_tensors(state.first, [&](std::span<double> x) { first.push_back(x); });
    visit_tensors(state.second, [&](std::span<double> x) { second.push_back(x); });

    std::size_t tensor = 0;
    for_each_parameter(ckpt, grads, [&](const std::string&, std::span<double> p, std::span<const double> g) {
        auto m1 = first[tensor];
        auto m2 = second[tensor];
        ++tensor;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m1[i] = AdamState::beta1 * m1[i] + (1.0 - AdamState::beta1) * g[i];
            m2[i] = AdamState::beta2 * m2[i] + (1.0 - AdamState::beta2) * g[i] * g[i];
            const double m_hat = m1[i] / c1;
            const double v_hat = m2[i] / c2;
            const double decay = learning_rate * weight_decay * p[i];
            p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::epsilon);
            p[i] -= decay;
        }
    });
}

bool EarlyStopping::observe(std::size_t epoch, double value) {
    if (!seen_ || value > best_) {
        seen_ = true;
        best_ = value;
        best_epoch_ = epoch;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

std::map<std::string, std::vector<std::size_t>> build_candidate_pools(
    const InvertedIndex& index, const CorpusText& queries, const EmbeddingSet& docs, std::size_t k) {
    std::map<std::string, std::vector<std::size_t>> pools;
    for (const auto& [qid, text] : queries) {
        std::vector<std::size_t> pool;
        for (const auto& c : top_k_candidates(index, text, k)) {
            // text-only documents without an embedding cannot take part in aggregation
            if (auto i = docs.find(c.doc_id)) pool.push_back(*i);
        }
        pools.emplace(qid, std::move(pool));
    }
    return pools;
}

nlohmann::ordered_json EpochLog::to_json() const {
    return {{"epoch", epoch}, {"train_loss", train_loss}, {"validation_ndcg@10", validation_ndcg},
            {"seconds", seconds}};
}

namespace {

AggregationSet aggregation_for(const TrainingData& data, const std::string& query_id) {
    auto it = data.pools.find(query_id);
    if (it == data.pools.end() || it->second.empty()) return AggregationSet::full_corpus();
    return AggregationSet::candidates(it->second);
}

// Training pool: the query's candidates with the positive force-included.
std::vector<std::size_t> training_pool(const TrainingData& data, const std::string& query_id,
                                       std::size_t pos_index) {
    std::vector<std::size_t> pool;
    auto it = data.pools.find(query_id);
    if (it != data.pools.end() && !it->second.empty()) {
        pool = it->second;
        if (std::find(pool.begin(), pool.end(), pos_index) == pool.end()) pool.push_back(pos_index);
    } else {
        pool.resize(data.docs->size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    }
    return pool;
}

void check_data(const TrainingData& data) {
    if (data.queries == nullptr || data.docs == nullptr) throw Error("training data lacks embeddings");
    if (data.docs->empty()) throw Error("document embedding set is empty");
    if (data.queries->dim() != data.docs->dim()) {
        throw DimensionError("query vs document embeddings", data.docs->dim(), data.queries->dim());
    }
    if (data.triples.empty()) throw Error("training set is empty: no triples");
    if (data.validation_queries.empty()) throw Error("validation set is empty");

    std::set<std::string> train_queries;
    for (const auto& t : data.triples) {
        data.queries->index_of(t.query_id);
        data.docs->index_of(t.pos_id);
        data.docs->index_of(t.neg_id);
        train_queries.insert(t.query_id);
    }
    for (const auto& q : data.validation_queries) {
        if (train_queries.contains(q)) {
            throw Error("validation query '" + q + "' also appears in the training triples");
        }
        data.queries->index_of(q);
    }
}

}  // namespace

double validation_ndcg(const AdapterCheckpoint& ckpt, const TrainingData& data) {
    const ModulatedRetriever retriever(ckpt, *data.docs);
    std::vector<RankedList> run;
    run.reserve(data.validation_queries.size());
    for (const auto& qid : data.validation_queries) {
        run.push_back(retriever.retrieve(qid, data.queries->vector(data.queries->index_of(qid)),
                                         aggregation_for(data, qid), 10));
    }
    const auto report = evaluate(run, data.validation_qrels, 10);
    if (report.query_count == 0) throw Error("no validation query has a relevant document");
    return report.mean_ndcg;
}

std::pair<double, GradientBundle> batch_loss_and_gradient(const AdapterCheckpoint& ckpt,
                                                          const TrainingData& data,
                                                          std::span<const TrainingTriple> batch,
                                                          double margin, std::size_t workers) {
    workers = std::max<std::size_t>(1, std::min(workers, batch.size()));
    std::vector<GradientBundle> partial;
    partial.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) partial.push_back(GradientBundle::zeros_like(ckpt));
    std::vector<double> losses(batch.size(), 0.0);

    parallel_for(batch.size(), workers, [&](std::size_t w, std::size_t i) {
        const auto& t = batch[i];
        const auto& docs = *data.docs;
        const auto pos = docs.index_of(t.pos_id);
        const auto pool_idx = training_pool(data, t.query_id, pos);
        std::vector<std::span<const double>> pool;
        pool.reserve(pool_idx.size());
        for (auto d : pool_idx) pool.push_back(docs.vector(d));
        const auto fwd = triple_forward(ckpt, data.queries->vector(data.queries->index_of(t.query_id)),
                                        docs.vector(pos), docs.vector(docs.index_of(t.neg_id)), pool, margin);
        losses[i] = fwd.loss;
        accumulate_triple_gradient(ckpt, fwd, partial[w]);
    });

    GradientBundle total = std::move(partial[0]);
    for (std::size_t w = 1; w < workers; ++w) total.add(partial[w]);
    const double inv = 1.0 / static_cast<double>(batch.size());
    total.scale(inv);
    double loss = 0.0;
    for (double l : losses) loss += l;
    return {loss * inv, std::move(total)};
}

TrainResult train(const TrainingData& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    check_data(data);
    AdapterConfig cfg{config.m, data.docs->dim(), config.h, config.eps, config.identity_residual};
    return train_from(AdapterCheckpoint::initialize(cfg, config.seed), data, config, on_epoch);
}

TrainResult train_from(AdapterCheckpoint ckpt, const TrainingData& data, const TrainConfig& config,
                       const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    check_data(data);
    ckpt.validate();
    if (ckpt.config.n != data.docs->dim()) {
        throw DimensionError("checkpoint n vs embeddings", ckpt.config.n, data.docs->dim());
    }

    Rng shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    AdamState adam = AdamState::zeros_like(ckpt);
    EarlyStopping stopper(config.patience);
    TrainResult result{ckpt, {}};

    std::vector<TrainingTriple> order = data.triples;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const std::span<const TrainingTriple> batch(order.data() + begin, end - begin);
            auto [loss, grad] = batch_loss_and_gradient(ckpt, data, batch, config.margin, config.workers);
            if (!std::isfinite(loss)) {
                throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
            }
            try {
                adam_step(ckpt, grad, adam, config.learning_rate, config.weight_decay);
            } catch (const NonFiniteError& e) {
                throw NonFiniteError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batch_index));
            }
            loss_sum += loss * static_cast<double>(batch.size());
        }

        const double val = validation_ndcg(ckpt, data);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        EpochLog log{epoch, loss_sum / static_cast<double>(order.size()), val, seconds};
        result.history.push_back(log);
        if (on_epoch) on_epoch(log);

        if (stopper.observe(epoch, val)) {
            result.checkpoint = ckpt;
            result.checkpoint.metadata = {static_cast<std::uint32_t>(epoch), val};
        }
        if (stopper.should_stop()) break;
    }
    return result;
}

}  // namespace imrnn
