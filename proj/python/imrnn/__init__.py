"""Python bindings for the imrnn retrieval adapters."""

import json

from . import _imrnn
from ._imrnn import (
    Checkpoint,
    EmbeddingSet,
    Error,
    InvertedIndex,
    load_checkpoint,
    load_corpus,
    load_embeddings,
    load_qrels,
    mine_triples,
    pseudoinverse,
    retrieve_modulated,
    retrieve_static,
    tokenize,
    write_embeddings,
    write_qrels,
)

__all__ = [
    "Checkpoint",
    "EmbeddingSet",
    "Error",
    "InvertedIndex",
    "evaluate",
    "explain",
    "inspect",
    "load_checkpoint",
    "load_corpus",
    "load_embeddings",
    "load_qrels",
    "mine_triples",
    "pseudoinverse",
    "retrieve_modulated",
    "retrieve_static",
    "run_cli",
    "tokenize",
    "train",
    "write_embeddings",
    "write_qrels",
]


def train(queries, docs, triples, validation_qrels, config=None, pools=None):
    """Returns (checkpoint, [(train_loss, validation_ndcg) per epoch])."""
    return _imrnn.train(queries, docs, list(triples), validation_qrels, json.dumps(config or {}), pools)


def evaluate(run, qrels, k=10):
    """run maps query id to [(doc_id, score)]."""
    return json.loads(_imrnn.evaluate_json(run, qrels, k))


def explain(checkpoint, query_id, query, doc_id, docs, tokens, qrels=None, pool=None, top_j=5):
    return json.loads(_imrnn.explain_json(checkpoint, query_id, query, doc_id, docs, tokens, qrels, pool, top_j))


def run_cli(*args):
    """Runs the command-line tool in-process. Returns (status, stdout, stderr)."""
    status, (out, err) = _imrnn.run_cli([str(a) for a in args])
    return status, out, err


def inspect(path):
    status, out, err = run_cli("inspect", path)
    if status != 0:
        raise Error(err.strip())
    return out
