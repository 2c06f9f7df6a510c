"""
detect.py

Concept detection: a concept is represented by one keyword; topics are
linked to the keyword through a heuristic on phi (or on Gibbs assignment
counts), and segments are linked to those topics through theta (online
engine) or through token assignments (Gibbs engine).
"""
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import keyword_lookup

__all__ = ["OutOfVocabularyError", "ConceptQuery", "DetectionMethod", "HEURISTICS",
           "make_query", "topics_for_concept", "segments_for_topics", "detect",
           "keyword_baseline", "hybrid", "write_detections", "parse_method"]

HEURISTICS = ("most_likely", "highest_rank", "top_n", "concrete_assignment")
ENGINES = ("online", "gibbs")


class OutOfVocabularyError(KeyError):
    """The concept keyword is not in the corpus lexicon."""

    def __str__(self):
        return f"concept keyword not in lexicon: {self.args[0]!r}"


@dataclass(frozen=True)
class ConceptQuery:
    word: str
    token_id: int = None

    @property
    def in_vocabulary(self):
        return self.token_id is not None


def make_query(corpus, word):
    word = word.lower()
    return ConceptQuery(word, keyword_lookup(corpus, word))


@dataclass(frozen=True)
class DetectionMethod:
    engine: str = "online"
    heuristic: str = "top_n"
    top_n: int = 30
    theta_threshold: float = 0.01

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if self.heuristic == "concrete_assignment" and self.engine != "gibbs":
            raise ValueError("concrete_assignment requires the gibbs engine")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if not 0.0 <= self.theta_threshold <= 1.0:
            raise ValueError("theta_threshold must lie in [0, 1]")

    @property
    def name(self):
        h = f"top_{self.top_n}" if self.heuristic == "top_n" else self.heuristic
        return f"{self.engine}/{h}"


def parse_method(text, top_n=30, theta_threshold=0.01):
    """Parse names like ``online/top_30`` or ``gibbs/concrete_assignment``."""
    engine, _, heuristic = text.partition("/")
    if heuristic.startswith("top_") and heuristic != "top_n":
        top_n = int(heuristic[4:])
        heuristic = "top_n"
    return DetectionMethod(engine, heuristic, top_n, theta_threshold)


def _resolve(q, corpus=None):
    if isinstance(q, str):
        if corpus is None:
            raise TypeError("a corpus is needed to resolve a string query")
        q = make_query(corpus, q)
    return q


def topics_for_concept(model, state, q, heuristic, top_n=30):
    """Topic ids associated with the query word under ``heuristic``.

    Singleton heuristics break ties toward the lowest topic id. Ranks use
    competition ranking, so a word tied into position ``top_n`` qualifies.
    """
    if not q.in_vocabulary:
        raise OutOfVocabularyError(q.word)
    w = q.token_id
    if heuristic == "concrete_assignment":
        if state is None:
            raise ValueError("concrete_assignment needs a Gibbs state")
        return set(np.flatnonzero(state.nkw[:, w] >= 1).tolist())
    col = model.phi[:, w]
    if heuristic == "most_likely":
        return {int(np.argmax(col))}
    ranks = (model.phi > col[:, None]).sum(axis=1) + 1
    if heuristic == "highest_rank":
        return {int(np.argmin(ranks))}
    if heuristic == "top_n":
        return set(np.flatnonzero(ranks <= top_n).tolist())
    raise ValueError(f"unknown heuristic {heuristic!r}")


def segments_for_topics(model, state, topics, mode, theta_threshold=0.01):
    """Segment ids associated with any topic in ``topics``.

    ``online``: theta[d, k] >= theta_threshold. ``gibbs``: at least one token
    of the segment is assigned one of the topics.
    """
    topics = sorted(topics)
    if not topics:
        return set()
    if mode == "online":
        hit = (model.theta[:, topics] >= theta_threshold).any(axis=1)
        ids = model.segment_ids
        return {ids[i] for i in np.flatnonzero(hit)}
    if mode == "gibbs":
        if state is None:
            raise ValueError("gibbs segment association needs a Gibbs state")
        docs = np.unique(state.docs[np.isin(state.z, topics)])
        ids = state.segment_ids
        return {ids[i] for i in docs}
    raise ValueError(f"unknown mode {mode!r}")


def detect(corpus, model, state, q, method):
    q = _resolve(q, corpus)
    topics = topics_for_concept(model, state, q, method.heuristic, method.top_n)
    return segments_for_topics(model, state, topics, method.engine, method.theta_threshold)


def keyword_baseline(corpus, q):
    """Segments whose tokens include the query word."""
    q = _resolve(q, corpus)
    if not q.in_vocabulary:
        return set()
    return {sid for sid, ids in corpus.segments if np.any(ids == q.token_id)}


def hybrid(corpus, model, state, q, fallback=None):
    """Keyword hits, plus topic-based hits among segments lacking the keyword."""
    q = _resolve(q, corpus)
    fallback = fallback or DetectionMethod("online", "top_n")
    hits = keyword_baseline(corpus, q)
    return hits | (detect(corpus, model, state, q, fallback) - hits)


def write_detections(path, hits, provenance=None):
    """Write ``(concept, segment, method)`` triples as JSON lines sorted by segment."""
    rows = sorted(set(hits), key=lambda h: (h[1], h[0], h[2]))
    with Path(path).open("w", encoding="utf-8") as fh:
        if provenance is not None:
            fh.write(json.dumps({"provenance": provenance}, sort_keys=True) + "\n")
        for concept, segment, method in rows:
            fh.write(json.dumps({"concept": concept, "segment": segment, "method": method},
                                ensure_ascii=False) + "\n")
    return rows
