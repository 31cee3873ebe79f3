#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "imrnn/bm25.hpp"
#include "imrnn/random.hpp"
#include "oracles.hpp"

using namespace imrnn;

TEST(Tokenize, LowercasesAndSplits) {
    EXPECT_EQ(tokenize("Peso peso!"), (std::vector<std::string>{"peso", "peso"}));
    EXPECT_EQ(tokenize("  a-b,c9  "), (std::vector<std::string>{"a", "b", "c9"}));
    EXPECT_TRUE(tokenize("?!").empty());
}

TEST(InvertedIndex, CaseFoldAndPunctuation) {
    const auto idx = InvertedIndex::build({{"d1", "Peso peso!"}});
    const auto p = idx.postings("peso");
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].doc, 0u);
    EXPECT_EQ(p[0].tf, 2u);
    EXPECT_EQ(idx.doc_length(0), 2u);
    EXPECT_EQ(idx.all_postings().size(), 1u);
    EXPECT_TRUE(idx.postings("nope").empty());
}

TEST(InvertedIndex, AverageLength) {
    const auto idx = InvertedIndex::build({{"d1", "a b"}, {"d2", "a"}});
    EXPECT_DOUBLE_EQ(idx.avg_doc_length(), 1.5);
    EXPECT_EQ(idx.doc_count(), 2u);
    EXPECT_EQ(idx.document_frequency("a"), 2u);
}

TEST(InvertedIndex, EmptyCorpusRejected) { EXPECT_THROW(InvertedIndex::build({}), Error); }

TEST(Bm25, SingleDocExample) {
    const auto idx = InvertedIndex::build({{"d1", "a"}});
    EXPECT_NEAR(bm25_idf(1, 1), std::log(1.0 + 0.5 / 1.5), 1e-15);
    EXPECT_NEAR(bm25_score(idx, {"a"}, "d1"), 0.2876821, 1e-7);
    EXPECT_EQ(bm25_score(idx, {"zz"}, "d1"), 0.0);
    EXPECT_EQ(bm25_score(idx, {}, "d1"), 0.0);
    EXPECT_THROW(bm25_score(idx, {"a"}, "d9"), NotFoundError);
}

TEST(Bm25, TfPartAtAverageLength) {
    const auto idx = InvertedIndex::build({{"d1", "a"}, {"d2", "b"}});
    Bm25Params p;
    p.k1 = 2.0;
    // tf = 1 and len = avg, so the tf part is (k1+1)/(1+k1) = 1
    EXPECT_NEAR(bm25_score(idx, {"a"}, "d1", p), bm25_idf(2, 1), 1e-15);
    EXPECT_NEAR(bm25_score(idx, {"a"}, "d1", p), testkit::ref_bm25({{"d1", "a"}, {"d2", "b"}}, "a", "d1", 2.0, 0.75),
                1e-15);
}

TEST(Bm25, ParamsValidated) {
    Bm25Params p;
    p.k1 = 0;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.b = 1.5;
    EXPECT_THROW(p.validate(), Error);
}

TEST(Bm25, MatchesNaiveScorer) {
    Rng rng(99);
    const std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    for (int t = 0; t < 50; ++t) {
        CorpusText corpus;
        const std::size_t n = 1 + rng.uniform_index(20);
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            const std::size_t len = 1 + rng.uniform_index(12);
            for (std::size_t w = 0; w < len; ++w) text += vocab[rng.uniform_index(vocab.size())] + (w % 3 ? " " : ", ");
            corpus["d" + std::to_string(i)] = text;
        }
        const auto idx = InvertedIndex::build(corpus);
        Bm25Params params;
        params.k1 = rng.uniform(0.5, 2.0);
        params.b = rng.uniform(0.0, 1.0);
        std::string query = vocab[rng.uniform_index(vocab.size())] + " " + vocab[rng.uniform_index(vocab.size())] +
                            " unknownterm";
        for (const auto& [id, text] : corpus) {
            const double got = bm25_score(idx, tokenize(query), id, params);
            EXPECT_NEAR(got, testkit::ref_bm25(corpus, query, id, params.k1, params.b), 1e-12);
        }
        const auto top = top_k_candidates(idx, query, n, params);
        for (std::size_t i = 0; i + 1 < top.size(); ++i) EXPECT_TRUE(ranks_before(top[i], top[i + 1]));
        for (const auto& c : top) EXPECT_NEAR(c.score, testkit::ref_bm25(corpus, query, c.doc_id, params.k1, params.b), 1e-12);
    }
}

TEST(TopK, Examples) {
    const auto idx = InvertedIndex::build({{"d1", "peso"}, {"d2", "sky"}});
    const auto top = top_k_candidates(idx, "peso", 1);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_EQ(top[0].doc_id, "d1");
    EXPECT_GT(top[0].score, 0.0);
    EXPECT_TRUE(top_k_candidates(idx, "ocean", 5).empty());
    EXPECT_THROW(top_k_candidates(idx, "peso", 0), Error);
}

TEST(TopK, TieBrokenByDocId) {
    const auto idx = InvertedIndex::build({{"d2", "peso"}, {"d1", "peso"}, {"d3", "sky"}});
    const auto top = top_k_candidates(idx, "peso", 5);
    ASSERT_EQ(top.size(), 2u);
    EXPECT_EQ(top[0].doc_id, "d1");
    EXPECT_EQ(top[1].doc_id, "d2");
    EXPECT_EQ(top[0].score, top[1].score);
}

TEST(Mining, ForcedChoice) {
    const auto idx = InvertedIndex::build({{"d1", "peso peso"}, {"d2", "peso sky"}, {"d3", "sky"}});
    const auto r = mine_triples(idx, {{"q1", {{"d1", 1}}}}, {{"q1", "peso"}}, 2, 0);
    ASSERT_EQ(r.triples.size(), 1u);
    EXPECT_EQ(r.triples[0], (TrainingTriple{"q1", "d1", "d2"}));
    EXPECT_TRUE(r.skipped.empty());
}

TEST(Mining, AllPositivePoolSkipped) {
    const auto idx = InvertedIndex::build({{"d1", "peso"}, {"d2", "peso"}, {"d3", "sky"}});
    testing::internal::CaptureStderr();
    const auto r = mine_triples(idx, {{"q1", {{"d1", 1}, {"d2", 2}}}}, {{"q1", "peso"}}, 2, 0);
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_TRUE(r.triples.empty());
    EXPECT_EQ(r.skipped, (std::vector<std::string>{"q1"}));
    EXPECT_NE(err.find("q1"), std::string::npos);
}

TEST(Mining, MissingPositiveNamesQuery) {
    const auto idx = InvertedIndex::build({{"d1", "peso"}, {"d2", "sky"}});
    const Qrels qrels{{"q1", {{"d1", 1}}}, {"q2", {{"d2", 0}}}, {"q3", {{"d2", 1}}}};
    try {
        mine_triples(idx, qrels, {{"q1", "peso"}, {"q2", "sky"}, {"q3", "sky"}}, 2, 0);
        FAIL();
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("q2"), std::string::npos);
        EXPECT_EQ(msg.find("q1"), std::string::npos);
    }
}

TEST(Mining, NegativesNeverPositiveAndSeeded) {
    Rng rng(4);
    CorpusText corpus;
    Qrels qrels;
    CorpusText queries;
    for (int i = 0; i < 40; ++i) corpus["d" + std::to_string(i)] = "w" + std::to_string(i % 5) + " w" + std::to_string(rng.uniform_index(8));
    for (int q = 0; q < 10; ++q) {
        const std::string qid = "q" + std::to_string(q);
        queries[qid] = "w" + std::to_string(q % 5);
        for (int j = 0; j < 4; ++j) qrels[qid]["d" + std::to_string(rng.uniform_index(40))] = 1 + j % 2;
    }
    const auto idx = InvertedIndex::build(corpus);
    const auto a = mine_triples(idx, qrels, queries, 20, 7);
    const auto b = mine_triples(idx, qrels, queries, 20, 7);
    EXPECT_EQ(a.triples, b.triples);
    for (const auto& t : a.triples) {
        EXPECT_EQ(grade_of(qrels, t.query_id, t.neg_id), 0);
        EXPECT_GE(grade_of(qrels, t.query_id, t.pos_id), 1);
    }
}

TEST(Triples, FileRoundTrip) {
    const std::vector<TrainingTriple> ts{{"q1", "d1", "d2"}, {"q\"2", "d3", "d4"}};
    const auto p = std::filesystem::temp_directory_path() / ("imrnn_triples_" + std::to_string(::getpid()) + ".jsonl");
    write_triples(ts, p);
    EXPECT_EQ(load_triples(p), ts);
    std::filesystem::remove(p);
}
