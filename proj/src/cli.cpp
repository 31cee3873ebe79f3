#include "imrnn/cli.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "imrnn/bm25.hpp"
#include "imrnn/checkpoint.hpp"
#include "imrnn/embedding_store.hpp"
#include "imrnn/error.hpp"
#include "imrnn/interpreter.hpp"
#include "imrnn/io.hpp"
#include "imrnn/metrics.hpp"
#include "imrnn/parallel.hpp"
#include "imrnn/ranking.hpp"
#include "imrnn/retrieval.hpp"
#include "imrnn/trainer.hpp"

namespace imrnn::cli {
namespace {

namespace fs = std::filesystem;

struct Streams {
    std::ostream& out;
    std::ostream& err;
    bool quiet = false;

    void note(const std::string& line) const {
        if (!quiet) err << line << '\n';
    }
};

EmbeddingSet load_kind(const std::string& path, EmbeddingKind expected, const std::string& role) {
    auto set = load_embeddings(path);
    if (set.kind() != expected) {
        throw Error(role + " file '" + path + "' holds " + to_string(set.kind()) + " embeddings, expected " +
                    to_string(expected));
    }
    return set;
}

void write_text(const std::string& path, const std::string& text) {
    io::write_atomic(path, [&](std::ostream& o) { o << text; });
}

void emit(const Streams& s, const std::optional<std::string>& path, const std::string& text) {
    if (path) write_text(*path, text);
    else s.out << text;
}

// Candidate pools from BM25 over query text, or full-corpus aggregation.
class PoolSource {
  public:
    PoolSource() = default;
    PoolSource(const std::string& corpus_path, const std::string& queries_path, std::size_t k)
        : k_(k), index_(InvertedIndex::build(load_corpus(corpus_path))), queries_(load_corpus(queries_path)) {}

    AggregationSet for_query(const std::string& qid, const EmbeddingSet& docs) const {
        if (!index_) return AggregationSet::full_corpus();
        auto it = queries_.find(qid);
        if (it == queries_.end()) throw NotFoundError("no text for query '" + qid + "' in the query text file");
        std::vector<std::size_t> pool;
        for (const auto& c : top_k_candidates(*index_, it->second, k_))
            if (auto i = docs.find(c.doc_id)) pool.push_back(*i);
        return AggregationSet::candidates(std::move(pool));
    }

  private:
    std::size_t k_ = 0;
    std::optional<InvertedIndex> index_;
    CorpusText queries_;
};

struct PoolOptions {
    std::string aggregation = "pool";
    std::string corpus;
    std::string queries_text;
    std::size_t k = 100;
    CLI::Option* explicit_mode = nullptr;

    void add_to(CLI::App* app) {
        explicit_mode = app->add_option("--aggregation", aggregation,
                                        "Corpus transform aggregation: pool (BM25 top-k, default) or full")
                            ->check(CLI::IsMember({"full", "pool"}));
        app->add_option("--corpus", corpus, "Corpus text JSONL (pool aggregation)");
        app->add_option("--queries-text", queries_text, "Query text JSONL (pool aggregation)");
        app->add_option("--candidate-k", k, "BM25 pool size")->check(CLI::PositiveNumber);
    }

    PoolSource make(const Streams& s) const {
        if (aggregation == "full") return {};
        if (corpus.empty() || queries_text.empty()) {
            if (explicit_mode != nullptr && explicit_mode->count() > 0)
                throw Error("--aggregation pool requires --corpus and --queries-text");
            s.note("no --corpus/--queries-text given, aggregating over the full corpus");
            return {};
        }
        return PoolSource(corpus, queries_text, k);
    }
};

// --- mine -------------------------------------------------------------------

struct MineArgs {
    std::string corpus, queries, qrels, out;
    std::size_t k = 100;
    std::uint64_t seed = 0;
    Bm25Params params;
};

void add_mine(CLI::App& app, MineArgs& a) {
    auto* c = app.add_subcommand("mine", "Mine (query, positive, BM25 hard negative) triples");
    c->add_option("--corpus", a.corpus, "Corpus text JSONL (id, text)")->required();
    c->add_option("--queries", a.queries, "Query text JSONL (id, text)")->required();
    c->add_option("--qrels", a.qrels, "TREC qrels")->required();
    c->add_option("--out", a.out, "Output triples JSONL")->required();
    c->add_option("--k", a.k, "BM25 candidates per query")->check(CLI::PositiveNumber);
    c->add_option("--seed", a.seed, "Positive sampling seed");
    c->add_option("--bm25-k1", a.params.k1, "BM25 k1");
    c->add_option("--bm25-b", a.params.b, "BM25 b");
}

int cmd_mine(const MineArgs& a, const Streams& s) {
    a.params.validate();
    const auto index = InvertedIndex::build(load_corpus(a.corpus));
    const auto result = mine_triples(index, load_qrels(a.qrels), load_corpus(a.queries), a.k, a.seed, a.params);
    write_triples(result.triples, a.out);
    s.note("mined " + std::to_string(result.triples.size()) + " triples, skipped " +
           std::to_string(result.skipped.size()) + " queries");
    return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
    std::string queries, docs, triples, val_qrels, out, config, log;
    std::string corpus, queries_text;
    nlohmann::json overrides = nlohmann::json::object();
    std::function<void()> collect;
};

template <typename T>
void add_override(CLI::App* c, TrainArgs& a, const std::string& flag, const std::string& key,
                  const std::string& help, std::shared_ptr<T> slot) {
    auto* opt = c->add_option(flag, *slot, help);
    auto previous = std::move(a.collect);
    a.collect = [&a, opt, key, slot, previous] {
        if (previous) previous();
        if (opt->count() > 0) a.overrides[key] = *slot;
    };
}

void add_train(CLI::App& app, TrainArgs& a) {
    auto* c = app.add_subcommand("train", "Train the projection and adapters");
    c->add_option("--queries", a.queries, "Query embeddings")->required();
    c->add_option("--docs", a.docs, "Document embeddings")->required();
    c->add_option("--triples", a.triples, "Training triples JSONL")->required();
    c->add_option("--val-qrels", a.val_qrels, "Validation qrels (their queries form the validation split)")
        ->required();
    c->add_option("--out", a.out, "Output checkpoint")->required();
    c->add_option("--config", a.config, "Flat JSON training config");
    c->add_option("--log", a.log, "Per-epoch JSONL log");
    c->add_option("--corpus", a.corpus, "Corpus text JSONL, enables BM25 candidate pools");
    c->add_option("--queries-text", a.queries_text, "Query text JSONL, enables BM25 candidate pools");
    add_override(c, a, "--lr", "learning_rate", "Learning rate", std::make_shared<double>());
    add_override(c, a, "--weight-decay", "weight_decay", "Decoupled weight decay", std::make_shared<double>());
    add_override(c, a, "--batch-size", "batch_size", "Triples per batch", std::make_shared<std::size_t>());
    add_override(c, a, "--margin", "margin", "Hinge margin", std::make_shared<double>());
    add_override(c, a, "--candidate-k", "candidate_k", "BM25 pool size", std::make_shared<std::size_t>());
    add_override(c, a, "--patience", "patience", "Early-stopping patience", std::make_shared<std::size_t>());
    add_override(c, a, "--max-epochs", "max_epochs", "Epoch limit", std::make_shared<std::size_t>());
    add_override(c, a, "--seed", "seed", "Initialization and shuffling seed", std::make_shared<std::uint64_t>());
    add_override(c, a, "--m", "m", "Projected dimension", std::make_shared<std::size_t>());
    add_override(c, a, "--hidden", "h", "Adapter hidden width", std::make_shared<std::size_t>());
    add_override(c, a, "--eps", "eps", "Layer-norm epsilon", std::make_shared<double>());
    add_override(c, a, "--identity-residual", "identity_residual", "Add I to emitted weights",
                 std::make_shared<bool>());
    add_override(c, a, "--workers", "workers", "Gradient worker threads", std::make_shared<std::size_t>());
}

int cmd_train(TrainArgs& a, const Streams& s) {
    TrainConfig cfg;
    cfg.workers = default_worker_count();
    if (!a.config.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(io::read_text_file(a.config));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("cannot parse config '" + a.config + "': " + e.what());
        }
        cfg.merge_json(j);
    }
    if (a.collect) a.collect();
    cfg.merge_json(a.overrides);
    cfg.validate();
    if (a.corpus.empty() != a.queries_text.empty())
        throw Error("--corpus and --queries-text must be given together");

    const auto queries = load_kind(a.queries, EmbeddingKind::Query, "--queries");
    const auto docs = load_kind(a.docs, EmbeddingKind::Document, "--docs");
    TrainingData data;
    data.queries = &queries;
    data.docs = &docs;
    data.triples = load_triples(a.triples);
    data.validation_qrels = load_qrels(a.val_qrels);
    for (const auto& [qid, judged] : data.validation_qrels) data.validation_queries.push_back(qid);
    if (!a.corpus.empty()) {
        const auto index = InvertedIndex::build(load_corpus(a.corpus));
        data.pools = build_candidate_pools(index, load_corpus(a.queries_text), docs, cfg.candidate_k);
    }

    std::string log_text;
    auto result = train(data, cfg, [&](const EpochLog& e) {
        auto j = e.to_json();
        j.erase("seconds");  // keeps the log byte-reproducible
        log_text += j.dump() + "\n";
        char line[160];
        std::snprintf(line, sizeof line, "epoch %zu  loss %.6f  val nDCG@10 %.6f  (%.2fs)", e.epoch, e.train_loss,
                      e.validation_ndcg, e.seconds);
        s.note(line);
    });
    nlohmann::ordered_json extra;
    extra["train_config"] = cfg.to_json();
    extra["train_config"].erase("workers");
    save_checkpoint(result.checkpoint, a.out, extra);
    if (!a.log.empty()) write_text(a.log, log_text);
    s.note("best epoch " + std::to_string(result.checkpoint.metadata.epoch) + ", checkpoint written to " + a.out);
    return kExitOk;
}

// --- retrieve ---------------------------------------------------------------

struct RetrieveArgs {
    std::string mode = "modulated";
    std::string checkpoint, queries, docs, out, tag;
    std::size_t top_n = 1000;
    std::size_t workers = default_worker_count();
    PoolOptions pools;
};

void add_retrieve(CLI::App& app, RetrieveArgs& a) {
    auto* c = app.add_subcommand("retrieve", "Rank the corpus for every query and write a TREC run");
    c->add_option("--mode", a.mode, "static or modulated")->check(CLI::IsMember({"static", "modulated"}));
    c->add_option("--checkpoint", a.checkpoint, "Checkpoint (modulated mode)");
    c->add_option("--queries", a.queries, "Query embeddings")->required();
    c->add_option("--docs", a.docs, "Document embeddings")->required();
    c->add_option("--out", a.out, "Output run file")->required();
    c->add_option("--tag", a.tag, "Run tag (one word)");
    c->add_option("--top-n", a.top_n, "Documents per query")->check(CLI::PositiveNumber);
    c->add_option("--workers", a.workers, "Worker threads")->check(CLI::PositiveNumber);
    a.pools.add_to(c);
}

int cmd_retrieve(const RetrieveArgs& a, const Streams& s) {
    const auto queries = load_kind(a.queries, EmbeddingKind::Query, "--queries");
    const auto docs = load_kind(a.docs, EmbeddingKind::Document, "--docs");
    std::vector<RankedList> run(queries.size());
    if (a.mode == "static") {
        parallel_for(queries.size(), a.workers, [&](std::size_t, std::size_t i) {
            run[i] = retrieve_static(queries.id(i), queries.vector(i), docs, a.top_n);
        });
    } else {
        if (a.checkpoint.empty()) throw Error("--mode modulated requires --checkpoint");
        const auto ckpt = load_checkpoint(a.checkpoint);
        if (ckpt.config.n != queries.dim())
            throw DimensionError("checkpoint n vs query embeddings", ckpt.config.n, queries.dim());
        const ModulatedRetriever retriever(ckpt, docs);
        const auto pools = a.pools.make(s);
        parallel_for(queries.size(), a.workers, [&](std::size_t, std::size_t i) {
            run[i] = retriever.retrieve(queries.id(i), queries.vector(i), pools.for_query(queries.id(i), docs),
                                        a.top_n);
        });
    }
    write_run(run, a.out, a.tag.empty() ? "imrnn-" + a.mode : a.tag);
    s.note("wrote " + std::to_string(run.size()) + " ranked lists to " + a.out);
    return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string run, qrels;
    std::optional<std::string> out;
    std::size_t k = 10;
    bool json = false;
};

void add_eval(CLI::App& app, EvalArgs& a) {
    auto* c = app.add_subcommand("eval", "Score a TREC run against qrels");
    c->add_option("--run", a.run, "TREC run file")->required();
    c->add_option("--qrels", a.qrels, "TREC qrels")->required();
    c->add_option("--k", a.k, "Cutoff for nDCG and Recall")->check(CLI::PositiveNumber);
    c->add_flag("--json", a.json, "Emit the full JSON report");
    c->add_option("--out", a.out, "Write the report here instead of stdout");
}

int cmd_eval(const EvalArgs& a, const Streams& s) {
    const auto report = evaluate(load_run(a.run), load_qrels(a.qrels), a.k);
    emit(s, a.out, a.json ? report.to_json().dump(2) + "\n" : report.to_table());
    return kExitOk;
}

// --- explain ----------------------------------------------------------------

struct ExplainArgs {
    std::string checkpoint, queries, docs, tokens, pairs, stoplist, qrels;
    std::vector<std::string> query_ids, doc_ids;
    std::optional<std::string> out;
    std::string format = "table";
    std::size_t top_j = 5;
    std::size_t min_length = 2;
    bool keep_special = false;
    std::size_t workers = default_worker_count();
    PoolOptions pools;
};

void add_explain(CLI::App& app, ExplainArgs& a) {
    auto* c = app.add_subcommand("explain", "Attribute ranking changes to vocabulary tokens");
    c->add_option("--checkpoint", a.checkpoint, "Checkpoint")->required();
    c->add_option("--queries", a.queries, "Query embeddings")->required();
    c->add_option("--docs", a.docs, "Document embeddings")->required();
    c->add_option("--tokens", a.tokens, "Token embedding table")->required();
    c->add_option("--pairs", a.pairs, "File with one 'query_id doc_id' pair per line");
    c->add_option("--query", a.query_ids, "Query id (pairs with --doc, repeatable)");
    c->add_option("--doc", a.doc_ids, "Document id (pairs with --query, repeatable)");
    c->add_option("--qrels", a.qrels, "Qrels for the relevance column");
    c->add_option("--stoplist", a.stoplist, "File with one stopword per line");
    c->add_option("--top-j", a.top_j, "Tokens per list")->check(CLI::PositiveNumber);
    c->add_option("--min-token-length", a.min_length, "Shortest kept token, in code points");
    c->add_flag("--keep-special", a.keep_special, "Keep [CLS]-like and <s>-like tokens");
    c->add_option("--format", a.format, "json or table")->check(CLI::IsMember({"json", "table"}));
    c->add_option("--out", a.out, "Write the report here instead of stdout");
    c->add_option("--workers", a.workers, "Worker threads")->check(CLI::PositiveNumber);
    a.pools.add_to(c);
}

std::vector<std::pair<std::string, std::string>> collect_pairs(const ExplainArgs& a) {
    if (a.query_ids.size() != a.doc_ids.size())
        throw Error("--query and --doc must be given the same number of times");
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!a.pairs.empty()) {
        std::istringstream in(io::read_text_file(a.pairs));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::istringstream fields(line);
            std::string q, d, extra;
            if (!(fields >> q)) continue;
            if (!(fields >> d) || (fields >> extra)) throw ParseError(a.pairs, lineno, "expected 'query_id doc_id'");
            pairs.emplace_back(q, d);
        }
    }
    for (std::size_t i = 0; i < a.query_ids.size(); ++i) pairs.emplace_back(a.query_ids[i], a.doc_ids[i]);
    if (pairs.empty()) throw Error("nothing to explain: give --pairs or --query/--doc");
    return pairs;
}

int cmd_explain(const ExplainArgs& a, const Streams& s) {
    const auto pairs = collect_pairs(a);
    const auto ckpt = load_checkpoint(a.checkpoint);
    const auto queries = load_kind(a.queries, EmbeddingKind::Query, "--queries");
    const auto docs = load_kind(a.docs, EmbeddingKind::Document, "--docs");
    const auto tokens = load_kind(a.tokens, EmbeddingKind::Token, "--tokens");
    std::optional<Qrels> qrels;
    if (!a.qrels.empty()) qrels = load_qrels(a.qrels);

    TokenFilter filter;
    filter.drop_special = !a.keep_special;
    filter.min_length = a.min_length;
    if (!a.stoplist.empty()) {
        std::istringstream in(io::read_text_file(a.stoplist));
        std::string word;
        while (in >> word) {
            for (auto& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            filter.stoplist.insert(word);
        }
    }

    const Explainer explainer(ckpt, docs, tokens, filter);
    const auto pools = a.pools.make(s);
    std::vector<ExplanationReport> reports(pairs.size());
    parallel_for(pairs.size(), a.workers, [&](std::size_t, std::size_t i) {
        const auto& [qid, did] = pairs[i];
        reports[i] = explainer.explain(qid, queries.vector(queries.index_of(qid)), did, pools.for_query(qid, docs),
                                       qrels ? &*qrels : nullptr, a.top_j);
    });

    if (a.format == "json") {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : reports) arr.push_back(r.to_json());
        emit(s, a.out, arr.dump(2) + "\n");
    } else {
        emit(s, a.out, format_report_table(reports));
    }
    return kExitOk;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
    std::string mode = "modulated";
    std::string checkpoint, queries, docs;
    std::size_t n = 1000;
    std::size_t warmup = 10;
    std::size_t top_n = 100;
    PoolOptions pools;
};

void add_bench(CLI::App& app, BenchArgs& a) {
    auto* c = app.add_subcommand("bench", "Measure per-query retrieval latency (writes nothing)");
    c->add_option("--mode", a.mode, "static or modulated")->check(CLI::IsMember({"static", "modulated"}));
    c->add_option("--checkpoint", a.checkpoint, "Checkpoint (modulated mode)");
    c->add_option("--queries", a.queries, "Query embeddings")->required();
    c->add_option("--docs", a.docs, "Document embeddings")->required();
    c->add_option("--n", a.n, "Timed queries (cycled over the query file)")->check(CLI::PositiveNumber);
    c->add_option("--warmup", a.warmup, "Untimed queries before measuring");
    c->add_option("--top-n", a.top_n, "Documents per query")->check(CLI::PositiveNumber);
    a.pools.add_to(c);
}

int cmd_bench(const BenchArgs& a, const Streams& s) {
    const auto queries = load_kind(a.queries, EmbeddingKind::Query, "--queries");
    const auto docs = load_kind(a.docs, EmbeddingKind::Document, "--docs");
    if (queries.size() == 0) throw Error("query file is empty");

    std::optional<AdapterCheckpoint> ckpt;
    std::optional<ModulatedRetriever> retriever;
    if (a.mode == "modulated") {
        if (a.checkpoint.empty()) throw Error("--mode modulated requires --checkpoint");
        ckpt = load_checkpoint(a.checkpoint);
        retriever.emplace(*ckpt, docs);
    }
    const auto pools = a.pools.make(s);
    std::vector<AggregationSet> aggregation;
    if (retriever)
        for (std::size_t i = 0; i < queries.size(); ++i) aggregation.push_back(pools.for_query(queries.id(i), docs));

    std::size_t sink = 0;
    auto one = [&](std::size_t i) {
        const std::size_t q = i % queries.size();
        const auto list = retriever ? retriever->retrieve(queries.id(q), queries.vector(q), aggregation[q], a.top_n)
                                    : retrieve_static(queries.id(q), queries.vector(q), docs, a.top_n);
        sink += list.entries.size();
    };
    for (std::size_t i = 0; i < a.warmup; ++i) one(i);
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < a.n; ++i) one(a.warmup + i);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "mode %s  docs %zu  queries %zu (warm)\nmean latency %.4f ms/query\nthroughput %.1f queries/s\n",
                  a.mode.c_str(), docs.size(), a.n, 1e3 * secs / static_cast<double>(a.n),
                  static_cast<double>(a.n) / secs);
    s.out << buf;
    if (sink == 0) s.note("warning: every ranked list was empty");
    return kExitOk;
}

// --- inspect ----------------------------------------------------------------

int cmd_inspect(const std::string& path, std::size_t show_ids, const Streams& s) {
    const std::string bytes = io::read_text_file(path);
    const std::string magic = bytes.substr(0, 4);
    nlohmann::ordered_json j;
    if (magic == "IMCK") {
        j = checkpoint_summary(deserialize_checkpoint(bytes));
    } else if (magic == "IMRN") {
        const auto set = read_embeddings(bytes);
        j["format"] = "imrnn-embeddings";
        j["kind"] = to_string(set.kind());
        j["dim"] = set.dim();
        j["count"] = set.size();
        auto ids = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < std::min(show_ids, set.size()); ++i) ids.push_back(set.id(i));
        j["ids"] = ids;
    } else {
        throw Error("'" + path + "' is neither a checkpoint nor an embedding file");
    }
    s.out << j.dump(2) << '\n';
    return kExitOk;
}

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interpretable modulated retrieval: mining, training, retrieval, evaluation, explanation",
                 "imrnn"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

    MineArgs mine;
    TrainArgs train_args;
    RetrieveArgs retrieve;
    EvalArgs eval;
    ExplainArgs explain_args;
    BenchArgs bench;
    std::string inspect_path;
    std::size_t inspect_ids = 10;
    add_mine(app, mine);
    add_train(app, train_args);
    add_retrieve(app, retrieve);
    add_eval(app, eval);
    add_explain(app, explain_args);
    add_bench(app, bench);
    auto* inspect = app.add_subcommand("inspect", "Print checkpoint or embedding file metadata");
    inspect->add_option("path", inspect_path, "Checkpoint or embedding file")->required();
    inspect->add_option("--ids", inspect_ids, "Embedding ids to list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUserError;
    }

    const Streams s{out, err, quiet};
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (name == "mine") return cmd_mine(mine, s);
        if (name == "train") return cmd_train(train_args, s);
        if (name == "retrieve") return cmd_retrieve(retrieve, s);
        if (name == "eval") return cmd_eval(eval, s);
        if (name == "explain") return cmd_explain(explain_args, s);
        if (name == "bench") return cmd_bench(bench, s);
        if (name == "inspect") return cmd_inspect(inspect_path, inspect_ids, s);
        throw InternalError("unhandled subcommand " + name);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        return run_app(argc, argv, out, err);
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"imrnn"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace imrnn::cli
