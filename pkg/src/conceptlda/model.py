"""
model.py

Shared LDA types, the generative process as a synthetic corpus generator,
ranking helpers and the versioned model file format.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import EncodedCorpus, Vocabulary

__all__ = [
    "Hyperparameters", "TopicModel", "ModelFormatError", "generate_corpus",
    "synthetic_vocabulary", "top_words", "ordinal_rank", "competition_rank",
    "save_model", "load_model", "model_to_dict", "model_from_dict",
]

MODEL_FORMAT_VERSION = 1
STOCHASTIC_TOL = 1e-9


class ModelFormatError(ValueError):
    """Raised when a model or state file cannot be decoded."""


@dataclass(frozen=True)
class Hyperparameters:
    """Symmetric Dirichlet priors and topic count.

    ``alpha`` defaults to ``50 / K`` and ``beta`` to ``0.1``.
    """
    K: int
    alpha: float = None
    beta: float = 0.1

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        object.__setattr__(self, "K", int(self.K))
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.K)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    def to_dict(self):
        return {"K": self.K, "alpha": self.alpha, "beta": self.beta}


def _check_stochastic(name, mat):
    if mat.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    if not np.all(np.isfinite(mat)) or np.any(mat < 0):
        raise ValueError(f"{name} has negative or non-finite entries")
    if mat.shape[0] and np.max(np.abs(mat.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        raise ValueError(f"{name} rows do not sum to 1")


@dataclass(frozen=True, eq=False)
class TopicModel:
    """Fitted topic-word (``phi``, K x V) and segment-topic (``theta``, M x K)
    distributions.

    ``segment_ids`` labels the rows of ``theta``; ``vocabulary`` labels the
    columns of ``phi``.
    """
    phi: np.ndarray
    theta: np.ndarray
    hyper: Hyperparameters
    engine: str
    segment_ids: tuple = ()
    vocabulary: tuple = ()
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        phi = np.array(self.phi, dtype=np.float64)
        theta = np.array(self.theta, dtype=np.float64)
        _check_stochastic("phi", phi)
        _check_stochastic("theta", theta)
        if phi.shape[0] != self.hyper.K or theta.shape[1] != self.hyper.K:
            raise ValueError("phi/theta shapes disagree with K")
        if self.segment_ids and len(self.segment_ids) != theta.shape[0]:
            raise ValueError("segment_ids length differs from theta rows")
        if self.vocabulary and len(self.vocabulary) != phi.shape[1]:
            raise ValueError("vocabulary length differs from phi columns")
        phi.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "segment_ids", tuple(self.segment_ids))
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))

    @property
    def K(self):
        return self.hyper.K

    @property
    def V(self):
        return self.phi.shape[1]

    @property
    def M(self):
        return self.theta.shape[0]

    def segment_row(self):
        return {sid: i for i, sid in enumerate(self.segment_ids)}


def synthetic_vocabulary(V):
    width = len(str(V - 1))
    return Vocabulary([f"w{i:0{width}d}" for i in range(V)])


def generate_corpus(hyper, M, lengths, seed, vocabulary=None, phi=None):
    """Draw a corpus from the LDA generative process.

    Returns ``(corpus, phi, theta, z)`` where ``z`` is a list of per-segment
    topic arrays aligned with the corpus tokens. ``vocabulary`` may be an
    int (synthetic terms ``w0..``) or a :class:`Vocabulary`. Passing ``phi``
    fixes the topics instead of drawing them.
    """
    if vocabulary is None:
        raise ValueError("vocabulary size must be given")
    vocab = synthetic_vocabulary(vocabulary) if isinstance(vocabulary, (int, np.integer)) \
        else vocabulary
    V = len(vocab)
    lengths = np.broadcast_to(np.asarray(lengths, dtype=np.int64), (M,)) \
        if np.ndim(lengths) == 0 else np.asarray(lengths, dtype=np.int64)
    if M < 1 or len(lengths) != M or lengths.sum() == 0:
        raise ValueError("corpus must have M >= 1 segments and a positive total length")
    if np.any(lengths < 0):
        raise ValueError("segment lengths must be non-negative")
    K = hyper.K
    rng = np.random.default_rng(seed)

    if phi is None:
        phi = rng.dirichlet(np.full(V, hyper.beta), size=K)
        phi /= phi.sum(axis=1, keepdims=True)
    else:
        phi = np.asarray(phi, dtype=np.float64)
        _check_stochastic("phi", phi)
    theta = rng.dirichlet(np.full(K, hyper.alpha), size=M)
    theta /= theta.sum(axis=1, keepdims=True)
    phi_cdf = np.cumsum(phi, axis=1)
    theta_cdf = np.cumsum(theta, axis=1)

    segments = []
    zs = []
    width = len(str(M - 1))
    for i in range(M):
        n = int(lengths[i])
        z = np.minimum(np.searchsorted(theta_cdf[i], rng.random(n) * theta_cdf[i, -1],
                                       side="right"), K - 1)
        u = rng.random(n)
        w = np.empty(n, dtype=np.int64)
        for k in range(K):
            sel = z == k
            if sel.any():
                w[sel] = np.searchsorted(phi_cdf[k], u[sel] * phi_cdf[k, -1], side="right")
        w = np.minimum(w, V - 1)
        segments.append((f"s{i:0{width}d}", w.astype(np.int32)))
        zs.append(z.astype(np.int32))
    return EncodedCorpus(vocab, tuple(segments)), phi, theta, zs


def ordinal_rank(row, w):
    """1-based position of ``w`` when ``row`` is sorted descending, ties by id."""
    row = np.asarray(row)
    v = row[w]
    return int(np.sum(row > v) + np.sum(row[:w] == v) + 1)


def competition_rank(row, w):
    """1-based rank where tied entries share the best position."""
    row = np.asarray(row)
    return int(np.sum(row > row[w]) + 1)


def top_words(model, k, n):
    """The ``n`` most probable terms of topic ``k`` as ``(term, prob)`` pairs.

    Order is descending probability with ties broken by ascending token id.
    Terms are token ids when the model carries no vocabulary.
    """
    if not 0 <= k < model.K:
        raise IndexError(f"topic {k} out of range for K={model.K}")
    if not 0 <= n <= model.V:
        raise ValueError(f"n must be in [0, {model.V}]")
    row = model.phi[k]
    order = np.lexsort((np.arange(len(row)), -row))[:n]
    names = model.vocabulary or range(model.V)
    return [(names[w], float(row[w])) for w in order]


def model_to_dict(model):
    return {
        "version": MODEL_FORMAT_VERSION,
        "engine": model.engine,
        "K": model.K,
        "V": model.V,
        "M": model.M,
        "alpha": model.hyper.alpha,
        "beta": model.hyper.beta,
        "phi": model.phi.tolist(),
        "theta": model.theta.tolist(),
        "segment_ids": list(model.segment_ids),
        "vocabulary": list(model.vocabulary),
        "config": model.config,
    }


def model_from_dict(data):
    if not isinstance(data, dict):
        raise ModelFormatError("model file must hold a JSON object")
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version')!r}")
    try:
        hyper = Hyperparameters(data["K"], data["alpha"], data["beta"])
        phi = np.asarray(data["phi"], dtype=np.float64)
        theta = np.asarray(data["theta"], dtype=np.float64).reshape(-1, hyper.K)
        if phi.shape != (data["K"], data["V"]) or theta.shape[0] != data["M"]:
            raise ModelFormatError("matrix shapes disagree with K/V/M header")
        return TopicModel(phi, theta, hyper, data["engine"], data.get("segment_ids", ()),
                          data.get("vocabulary", ()), data.get("config", {}))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None


def save_model(model, path, provenance=None):
    data = model_to_dict(model)
    if provenance is not None:
        data = {"provenance": provenance, **data}
    Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")


def load_model(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: cannot decode model ({exc.msg})") from None
    return model_from_dict(data)
