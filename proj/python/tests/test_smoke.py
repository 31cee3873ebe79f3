import numpy as np
import pytest

import imrnn


def _embeddings(rng, prefix, count, dim, kind):
    ids = [f"{prefix}{i}" for i in range(count)]
    return imrnn.EmbeddingSet(ids, rng.standard_normal((count, dim)), kind)


@pytest.fixture
def task(tmp_path):
    rng = np.random.default_rng(5)
    n = 16
    docs = _embeddings(rng, "d", 30, n, "document")
    queries = _embeddings(rng, "q", 12, n, "query")
    tokens = _embeddings(rng, "tok", 40, n, "token")
    words = ["river", "bank", "loan", "rate", "boat", "fish"]
    corpus = {d: " ".join(words[(i + j) % 6] for j in range(4)) for i, d in enumerate(docs.ids)}
    query_text = {q: words[i % 6] for i, q in enumerate(queries.ids)}
    qrels = {q: {docs.ids[(3 * i) % 30]: 1, docs.ids[(3 * i + 1) % 30]: 2} for i, q in enumerate(queries.ids)}
    return dict(docs=docs, queries=queries, tokens=tokens, corpus=corpus, query_text=query_text, qrels=qrels,
                tmp=tmp_path)


def test_embedding_round_trip(task):
    path = task["tmp"] / "docs.emb"
    imrnn.write_embeddings(task["docs"], path)
    back = imrnn.load_embeddings(path)
    # stored as float32
    np.testing.assert_array_equal(back.matrix(), task["docs"].matrix().astype(np.float32))
    imrnn.write_embeddings(back, task["tmp"] / "again.emb")
    assert imrnn.load_embeddings(task["tmp"] / "again.emb") == back
    assert back.kind == "document"
    assert back.matrix().shape == (30, 16)
    np.testing.assert_array_equal(back.vector("d7"), back.matrix()[7])
    assert "count" in imrnn.inspect(path).lower() or "30" in imrnn.inspect(path)


def test_bad_file_raises(tmp_path):
    p = tmp_path / "junk.emb"
    p.write_bytes(b"notanembeddingfile_____")
    with pytest.raises(imrnn.Error, match="magic"):
        imrnn.load_embeddings(p)


def test_bm25_and_mining(task):
    index = imrnn.InvertedIndex(task["corpus"])
    assert imrnn.tokenize("Peso peso!") == ["peso", "peso"]
    top = index.top_k("river bank", 5)
    assert top and all(s > 0 for _, s in top)
    assert top[0][1] == pytest.approx(index.score("river bank", top[0][0]))
    triples, skipped = imrnn.mine_triples(index, task["qrels"], task["query_text"], k=30, seed=1)
    for q, pos, neg in triples:
        assert task["qrels"][q][pos] >= 1
        assert task["qrels"][q].get(neg, 0) < 1
    assert len(triples) + len(skipped) == len(task["qrels"])


def test_pseudoinverse():
    p = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    np.testing.assert_allclose(p @ imrnn.pseudoinverse(p), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(imrnn.pseudoinverse(p), np.linalg.pinv(p), atol=1e-12)


def test_identity_checkpoint_matches_projected_and_explains_nothing(task):
    ck = imrnn.Checkpoint.initialize(4, 16, 8, seed=2)
    q = task["queries"].vector("q0")
    ranked = imrnn.retrieve_modulated(ck, "q0", q, task["docs"], top_n=5)
    assert len(ranked) == 5
    report = imrnn.explain(ck, "q0", q, ranked[0][0], task["docs"], task["tokens"])
    assert report["delta_similarity"] == 0.0
    assert report["doc_tokens"]["no_modulation"]


def test_train_retrieve_evaluate(task):
    index = imrnn.InvertedIndex(task["corpus"])
    val = {q: task["qrels"][q] for q in task["queries"].ids[:4]}
    train_text = {q: t for q, t in task["query_text"].items() if q not in val}
    triples, _ = imrnn.mine_triples(index, task["qrels"], train_text, k=30, seed=0)
    config = {"m": 4, "h": 8, "max_epochs": 2, "batch_size": 4, "seed": 3}
    ck, history = imrnn.train(task["queries"], task["docs"], triples, val, config)
    assert 1 <= len(history) <= 2
    assert ck.m == 4 and ck.n == 16 and ck.projection.shape == (4, 16)
    path = task["tmp"] / "model.imck"
    ck.save(path)
    again = imrnn.load_checkpoint(path)
    assert again.best_validation_ndcg == pytest.approx(ck.best_validation_ndcg, abs=1e-12)

    run = {q: imrnn.retrieve_modulated(again, q, task["queries"].vector(q), task["docs"], top_n=10) for q in val}
    report = imrnn.evaluate(run, val, k=10)
    assert report["ndcg@10"] == pytest.approx(ck.best_validation_ndcg, abs=1e-6)

    static = {q: imrnn.retrieve_static(q, task["queries"].vector(q), task["docs"], 10) for q in val}
    assert 0.0 <= imrnn.evaluate(static, val)["ndcg@10"] <= 1.0


def test_cli_in_process():
    status, out, err = imrnn.run_cli("--help")
    assert status == 0 and "explain" in out
    status, _, err = imrnn.run_cli("inspect", "/nonexistent/file.emb")
    assert status == 1 and err
