#include "synthetic.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "imrnn/random.hpp"

namespace imrnn::testkit {

namespace {

using Vec = std::vector<double>;

Vec gaussian(Rng& rng, std::size_t n, double scale = 1.0) {
    Vec v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

Vec unit(Rng& rng, std::size_t n) {
    Vec v = gaussian(rng, n);
    double s = 0;
    for (double x : v) s += x * x;
    for (auto& x : v) x /= std::sqrt(s);
    return v;
}

void axpy(Vec& y, const Vec& x, double a) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Random unit vectors, each orthogonal to `basis` and to the previous ones.
std::vector<Vec> orthonormal(Rng& rng, std::size_t n, std::size_t count, std::vector<Vec>& basis) {
    std::vector<Vec> out;
    while (out.size() < count) {
        Vec v = gaussian(rng, n);
        for (const auto& b : basis) axpy(v, b, -dot(v, b));
        const double len = std::sqrt(dot(v, v));
        if (len < 1e-6) continue;
        for (auto& x : v) x /= len;
        basis.push_back(v);
        out.push_back(std::move(v));
    }
    return out;
}

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

std::string topic_word(std::size_t topic, std::size_t w) {
    return "topic" + std::to_string(topic) + "word" + std::to_string(w);
}

}  // namespace

Qrels SyntheticTask::qrels_for(const std::vector<std::string>& ids) const {
    Qrels out;
    for (const auto& q : ids)
        if (auto it = qrels.find(q); it != qrels.end()) out.emplace(q, it->second);
    return out;
}

SyntheticTask make_synthetic_task(const SyntheticParams& p) {
    Rng rng(p.seed);
    const std::size_t n = p.dim;
    if (p.subspace_dim + 1 + p.distractors > n) throw std::invalid_argument("synthetic task: too many directions");
    std::vector<Vec> basis;
    const auto subspace = orthonormal(rng, n, p.subspace_dim, basis);
    const Vec relevance = orthonormal(rng, n, 1, basis).front();
    const auto distractor_dirs = orthonormal(rng, n, p.distractors, basis);
    SyntheticTask task{EmbeddingSet(n, EmbeddingKind::Query), EmbeddingSet(n, EmbeddingKind::Document),
                       EmbeddingSet(n, EmbeddingKind::Token), {}, {}, {}, {}, {}, {}, relevance,
                       p.planted_token};

    std::vector<Vec> topic_dirs;
    if (p.orthogonal_topics && p.topics > p.subspace_dim)
        throw std::invalid_argument("synthetic task: orthogonal topics need topics <= subspace_dim");
    for (std::size_t t = 0; t < p.topics; ++t) {
        if (p.orthogonal_topics) {
            topic_dirs.push_back(subspace[t]);
            continue;
        }
        Vec u(n, 0.0);
        const Vec c = unit(rng, p.subspace_dim);
        for (std::size_t k = 0; k < p.subspace_dim; ++k) axpy(u, subspace[k], c[k]);
        topic_dirs.push_back(std::move(u));
    }

    constexpr std::size_t kTopicWords = 5;
    constexpr std::size_t kFillerWords = 200;
    std::vector<std::vector<std::string>> relevant(p.topics);
    for (std::size_t t = 0; t < p.topics; ++t) {
        std::vector<std::size_t> slots(p.docs_per_topic);
        for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
        rng.shuffle(slots);
        std::vector<bool> is_relevant(p.docs_per_topic, false);
        for (std::size_t i = 0; i < p.relevant_per_topic; ++i) is_relevant[slots[i]] = true;

        for (std::size_t i = 0; i < p.docs_per_topic; ++i) {
            const std::string id = numbered("d", t * p.docs_per_topic + i, 4);
            Vec x = gaussian(rng, n, p.doc_noise);
            axpy(x, topic_dirs[t], p.topic_weight);
            for (const auto& dir : distractor_dirs) axpy(x, dir, p.distractor_scale * rng.normal());
            axpy(x, task.relevance_direction, is_relevant[i] ? p.relevance_weight : p.nonrelevant_weight);
            if (is_relevant[i]) relevant[t].push_back(id);
            task.docs.add(id, x);

            std::string text;
            for (int w = 0; w < 3; ++w) text += topic_word(t, rng.uniform_index(kTopicWords)) + " ";
            for (int w = 0; w < 4; ++w) text += "filler" + std::to_string(rng.uniform_index(kFillerWords)) + " ";
            task.doc_text.emplace(id, text);
        }
    }

    const std::size_t total = p.train_queries + p.validation_queries + p.test_queries;
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t t = i % p.topics;
        const std::string id = numbered("q", i, 3);
        Vec x = gaussian(rng, n, p.query_noise);
        axpy(x, topic_dirs[t], 1.0);
        axpy(x, task.relevance_direction, p.query_relevance_weight);
        for (const auto& dir : distractor_dirs) axpy(x, dir, p.query_distractor_scale * rng.normal());
        task.queries.add(id, x);
        task.query_text.emplace(id, topic_word(t, rng.uniform_index(kTopicWords)) + " " +
                                        topic_word(t, rng.uniform_index(kTopicWords)));
        for (const auto& d : relevant[t]) task.qrels[id][d] = 1;
        auto& split = i < p.train_queries                         ? task.train_ids
                      : i < p.train_queries + p.validation_queries ? task.validation_ids
                                                                   : task.test_ids;
        split.push_back(id);
    }

    task.tokens.add(p.planted_token, task.relevance_direction);
    for (std::size_t i = 0; i < p.random_tokens; ++i) task.tokens.add(numbered("tok", i, 3), gaussian(rng, n));
    return task;
}

EmbeddingSet random_embeddings(std::uint64_t seed, std::size_t count, std::size_t dim, EmbeddingKind kind,
                               const std::string& prefix) {
    Rng rng(seed);
    EmbeddingSet set(dim, kind);
    for (std::size_t i = 0; i < count; ++i) set.add(prefix + std::to_string(i), gaussian(rng, dim));
    return set;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("imrnn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_task_files(const SyntheticTask& task, const std::filesystem::path& dir) {
    write_embeddings(task.queries, dir / "queries.emb");
    write_embeddings(task.docs, dir / "docs.emb");
    write_embeddings(task.tokens, dir / "tokens.emb");
    write_corpus(task.doc_text, dir / "corpus.jsonl");
    write_corpus(task.query_text, dir / "queries.jsonl");
    CorpusText train_text;
    for (const auto& q : task.train_ids) train_text.emplace(q, task.query_text.at(q));
    write_corpus(train_text, dir / "train_queries.jsonl");
    write_qrels(task.qrels, dir / "qrels.txt");
    write_qrels(task.qrels_for(task.train_ids), dir / "qrels_train.txt");
    write_qrels(task.qrels_for(task.validation_ids), dir / "qrels_val.txt");
    write_qrels(task.qrels_for(task.test_ids), dir / "qrels_test.txt");
}

}  // namespace imrnn::testkit
