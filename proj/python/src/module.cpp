#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "imrnn/bm25.hpp"
#include "imrnn/checkpoint.hpp"
#include "imrnn/cli.hpp"
#include "imrnn/embedding_store.hpp"
#include "imrnn/interpreter.hpp"
#include "imrnn/metrics.hpp"
#include "imrnn/retrieval.hpp"
#include "imrnn/trainer.hpp"

namespace py = pybind11;
using namespace imrnn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const Array& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
    return {a.data(), static_cast<std::size_t>(a.size())};
}

Array to_array(std::span<const double> v) {
    return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
}

Array matrix_array(const Matrix& m) {
    Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

EmbeddingKind parse_kind(const std::string& k) {
    if (k == "query") return EmbeddingKind::Query;
    if (k == "document") return EmbeddingKind::Document;
    if (k == "token") return EmbeddingKind::Token;
    throw py::value_error("kind must be 'query', 'document' or 'token'");
}

EmbeddingSet from_array(const std::vector<std::string>& ids, const Array& values, const std::string& kind) {
    if (values.ndim() != 2) throw py::value_error("expected a 2-d array");
    if (static_cast<std::size_t>(values.shape(0)) != ids.size()) throw py::value_error("ids and rows differ in length");
    const auto dim = static_cast<std::size_t>(values.shape(1));
    EmbeddingSet set(dim, parse_kind(kind));
    for (std::size_t i = 0; i < ids.size(); ++i) set.add(ids[i], std::span<const double>(values.data() + i * dim, dim));
    return set;
}

Array embeddings_matrix(const EmbeddingSet& s) {
    Array out({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(s.dim())});
    auto* p = out.mutable_data();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = s.vector(i);
        std::copy(v.begin(), v.end(), p + i * s.dim());
    }
    return out;
}

using PyRanking = std::vector<std::pair<std::string, double>>;

PyRanking to_py(const RankedList& r) {
    PyRanking out;
    for (const auto& e : r.entries) out.emplace_back(e.doc_id, e.score);
    return out;
}

AggregationSet aggregation_for(const EmbeddingSet& docs, const std::optional<std::vector<std::string>>& pool) {
    if (!pool) return AggregationSet::full_corpus();
    std::vector<std::size_t> idx;
    for (const auto& id : *pool) idx.push_back(docs.index_of(id));
    return AggregationSet::candidates(std::move(idx));
}

std::pair<int, std::pair<std::string, std::string>> run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, {out.str(), err.str()}};
}

}  // namespace

PYBIND11_MODULE(_imrnn, m) {
    m.doc() = "Query-conditioned embedding adapters with token-level explanations";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    py::class_<EmbeddingSet>(m, "EmbeddingSet")
        .def(py::init(&from_array), py::arg("ids"), py::arg("values"), py::arg("kind") = "document")
        .def_property_readonly("dim", &EmbeddingSet::dim)
        .def_property_readonly("kind", [](const EmbeddingSet& s) { return to_string(s.kind()); })
        .def_property_readonly("ids", &EmbeddingSet::ids)
        .def("__len__", &EmbeddingSet::size)
        .def("vector", [](const EmbeddingSet& s, const std::string& id) { return to_array(s.vector(s.index_of(id))); })
        .def("matrix", &embeddings_matrix)
        .def("__eq__", &EmbeddingSet::operator==);

    m.def("load_embeddings", &load_embeddings, py::arg("path"));
    m.def("write_embeddings", &write_embeddings, py::arg("embeddings"), py::arg("path"));
    m.def("load_qrels", &load_qrels, py::arg("path"));
    m.def("write_qrels", &write_qrels, py::arg("qrels"), py::arg("path"));
    m.def("load_corpus", &load_corpus, py::arg("path"));

    py::class_<InvertedIndex>(m, "InvertedIndex")
        .def(py::init(&InvertedIndex::build), py::arg("corpus"))
        .def("score",
             [](const InvertedIndex& ix, const std::string& query, const std::string& doc) {
                 return bm25_score(ix, tokenize(query), doc);
             })
        .def(
            "top_k",
            [](const InvertedIndex& ix, const std::string& query, std::size_t k) {
                PyRanking out;
                for (const auto& c : top_k_candidates(ix, query, k)) out.emplace_back(c.doc_id, c.score);
                return out;
            },
            py::arg("query"), py::arg("k") = 100);
    m.def("tokenize", [](const std::string& text) { return tokenize(text); });

    m.def(
        "mine_triples",
        [](const InvertedIndex& ix, const Qrels& qrels, const CorpusText& queries, std::size_t k, std::uint64_t seed) {
            auto r = mine_triples(ix, qrels, queries, k, seed);
            std::vector<std::tuple<std::string, std::string, std::string>> triples;
            for (auto& t : r.triples) triples.emplace_back(t.query_id, t.pos_id, t.neg_id);
            return std::make_pair(triples, r.skipped);
        },
        py::arg("index"), py::arg("qrels"), py::arg("queries"), py::arg("k") = 100, py::arg("seed") = 0);

    py::class_<AdapterCheckpoint>(m, "Checkpoint")
        .def_static(
            "initialize",
            [](std::size_t m_, std::size_t n, std::size_t h, std::uint64_t seed) {
                return AdapterCheckpoint::initialize({m_, n, h}, seed);
            },
            py::arg("m"), py::arg("n"), py::arg("h"), py::arg("seed") = 0)
        .def_property_readonly("m", [](const AdapterCheckpoint& c) { return c.config.m; })
        .def_property_readonly("n", [](const AdapterCheckpoint& c) { return c.config.n; })
        .def_property_readonly("h", [](const AdapterCheckpoint& c) { return c.config.h; })
        .def_property_readonly("epoch", [](const AdapterCheckpoint& c) { return c.metadata.epoch; })
        .def_property_readonly("best_validation_ndcg",
                               [](const AdapterCheckpoint& c) { return c.metadata.best_validation_ndcg; })
        .def_property_readonly("projection", [](const AdapterCheckpoint& c) { return matrix_array(c.projection); })
        .def("summary_json", [](const AdapterCheckpoint& c) { return checkpoint_summary(c).dump(); })
        .def("save", [](const AdapterCheckpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); });
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    m.def(
        "train",
        [](const EmbeddingSet& queries, const EmbeddingSet& docs,
           const std::vector<std::tuple<std::string, std::string, std::string>>& triples, const Qrels& validation_qrels,
           const std::string& config_json, const std::optional<std::map<std::string, std::vector<std::string>>>& pools) {
            TrainConfig cfg;
            cfg.merge_json(nlohmann::json::parse(config_json));
            cfg.validate();
            TrainingData data;
            data.queries = &queries;
            data.docs = &docs;
            for (const auto& [q, p, n] : triples) data.triples.push_back({q, p, n});
            data.validation_qrels = validation_qrels;
            for (const auto& [q, _] : validation_qrels) data.validation_queries.push_back(q);
            if (pools) {
                for (const auto& [q, ids] : *pools) {
                    auto& pool = data.pools[q];
                    for (const auto& id : ids) pool.push_back(docs.index_of(id));
                }
            }
            std::vector<std::pair<double, double>> history;
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(data, cfg);
            }
            for (const auto& e : r.history) history.emplace_back(e.train_loss, e.validation_ndcg);
            return std::make_pair(std::move(r.checkpoint), history);
        },
        py::arg("queries"), py::arg("docs"), py::arg("triples"), py::arg("validation_qrels"),
        py::arg("config_json") = "{}", py::arg("pools") = py::none());

    m.def(
        "retrieve_static",
        [](const std::string& qid, const Array& q, const EmbeddingSet& docs, std::size_t top_n) {
            return to_py(retrieve_static(qid, as_span(q), docs, top_n));
        },
        py::arg("query_id"), py::arg("query"), py::arg("docs"), py::arg("top_n") = 1000);
    m.def(
        "retrieve_modulated",
        [](const AdapterCheckpoint& c, const std::string& qid, const Array& q, const EmbeddingSet& docs,
           const std::optional<std::vector<std::string>>& pool, std::size_t top_n) {
            return to_py(retrieve_modulated(c, qid, as_span(q), docs, aggregation_for(docs, pool), top_n));
        },
        py::arg("checkpoint"), py::arg("query_id"), py::arg("query"), py::arg("docs"), py::arg("pool") = py::none(),
        py::arg("top_n") = 1000);

    m.def(
        "evaluate_json",
        [](const std::map<std::string, PyRanking>& run, const Qrels& qrels, std::size_t k) {
            std::vector<RankedList> lists;
            for (const auto& [q, entries] : run) {
                RankedList r{q, {}};
                for (const auto& [d, s] : entries) r.entries.push_back({d, s});
                lists.push_back(std::move(r));
            }
            return evaluate(lists, qrels, k).to_json().dump();
        },
        py::arg("run"), py::arg("qrels"), py::arg("k") = 10);

    m.def(
        "explain_json",
        [](const AdapterCheckpoint& c, const std::string& qid, const Array& q, const std::string& doc_id,
           const EmbeddingSet& docs, const EmbeddingSet& tokens, const std::optional<Qrels>& qrels,
           const std::optional<std::vector<std::string>>& pool, std::size_t top_j) {
            const auto r = explain(c, qid, as_span(q), doc_id, docs, tokens, aggregation_for(docs, pool),
                                   qrels ? &*qrels : nullptr, top_j);
            return r.to_json().dump();
        },
        py::arg("checkpoint"), py::arg("query_id"), py::arg("query"), py::arg("doc_id"), py::arg("docs"),
        py::arg("tokens"), py::arg("qrels") = py::none(), py::arg("pool") = py::none(), py::arg("top_j") = 5);

    m.def("pseudoinverse", [](const Array& p) {
        if (p.ndim() != 2) throw py::value_error("expected a 2-d array");
        Matrix mat(static_cast<std::size_t>(p.shape(0)), static_cast<std::size_t>(p.shape(1)));
        std::copy(p.data(), p.data() + p.size(), mat.values().begin());
        return matrix_array(pseudoinverse(mat));
    });

    m.def("run_cli", &run_cli, py::arg("args"), "Runs the imrnn tool in-process; returns (status, (stdout, stderr))");
}
