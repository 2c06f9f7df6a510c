"""
gibbs.py

Collapsed Gibbs sampling for LDA. Topic-word and segment-topic
distributions are integrated out; the sampler walks over per-token topic
assignments and recovers phi and theta from the final counts.

Each sweep draws its uniforms from a generator seeded with
``(seed, iteration)``, so a chain can be resumed from a saved state file
and reproduce the uninterrupted run exactly.
"""
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .model import Hyperparameters, ModelFormatError, TopicModel

__all__ = ["GibbsState", "from_assignments", "init", "sweep", "run", "estimate", "assignment_counts",
           "check_consistency", "save_state", "load_state"]

STATE_FORMAT_VERSION = 1


@dataclass(eq=False)
class GibbsState:
    """Topic assignments ``z`` (flat, in corpus token order) plus their tallies."""
    corpus: object
    words: np.ndarray
    docs: np.ndarray
    offsets: np.ndarray
    z: np.ndarray
    ndk: np.ndarray
    nkw: np.ndarray
    nk: np.ndarray
    hyper: Hyperparameters
    seed: int
    iteration: int = 0

    @property
    def K(self):
        return self.hyper.K

    @property
    def segment_ids(self):
        return self.corpus.segment_ids

    def z_by_segment(self):
        return [self.z[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def copy(self):
        return GibbsState(self.corpus, self.words, self.docs, self.offsets, self.z.copy(),
                          self.ndk.copy(), self.nkw.copy(), self.nk.copy(), self.hyper,
                          self.seed, self.iteration)


def _flatten(corpus):
    lengths = corpus.lengths()
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    words = np.ascontiguousarray(np.concatenate([ids for _, ids in corpus.segments])
                                 .astype(np.int32)) if corpus.M else np.zeros(0, np.int32)
    docs = np.repeat(np.arange(corpus.M, dtype=np.int32), lengths)
    return words, docs, offsets


def _tally(words, docs, z, M, K, V):
    ndk = np.zeros((M, K), dtype=np.int64)
    nkw = np.zeros((K, V), dtype=np.int64)
    np.add.at(ndk, (docs, z), 1)
    np.add.at(nkw, (z, words), 1)
    return ndk, nkw, nkw.sum(axis=1)


def _sweep_rng(seed, iteration):
    return np.random.default_rng([int(seed), int(iteration)])


def from_assignments(corpus, hyper, z, seed=0, iteration=0):
    """State with the given flat assignments over the non-empty segments."""
    corpus = corpus.nonempty()
    words, docs, offsets = _flatten(corpus)
    z = np.ascontiguousarray(z, dtype=np.int32)
    ndk, nkw, nk = _tally(words, docs, z, corpus.M, hyper.K, corpus.V)
    return GibbsState(corpus, words, docs, offsets, z, ndk, nkw, nk, hyper, int(seed),
                      int(iteration))


def init(corpus, hyper, seed=0):
    """Assign every token a uniformly random topic.

    Empty segments are dropped; at least one token is required.
    """
    corpus = corpus.nonempty()
    if corpus.n_tokens == 0:
        raise ValueError("cannot sample topics for an empty corpus")
    z = _sweep_rng(seed, 0).integers(hyper.K, size=corpus.n_tokens, dtype=np.int32)
    return from_assignments(corpus, hyper, z, seed, 0)


def sweep(state):
    """Resample every token once from its collapsed full conditional (in place)."""
    state.iteration += 1
    uniforms = _sweep_rng(state.seed, state.iteration).random(len(state.words))
    _backend.gibbs_sweep(state.words, state.docs, state.z, state.ndk, state.nkw, state.nk,
                         state.hyper.alpha, state.hyper.beta, uniforms)
    return state


def check_consistency(state):
    """Raise AssertionError unless the count matrices tally ``z`` exactly."""
    ndk, nkw, nk = _tally(state.words, state.docs, state.z, state.ndk.shape[0], state.K,
                          state.nkw.shape[1])
    assert np.array_equal(ndk, state.ndk), "n_dk does not tally z"
    assert np.array_equal(nkw, state.nkw), "n_kw does not tally z"
    assert np.array_equal(nk, state.nk), "n_k does not tally z"
    assert np.array_equal(state.ndk.sum(axis=1), np.diff(state.offsets)), "segment length drift"
    assert (state.ndk >= 0).all() and (state.nkw >= 0).all()


def _point_estimates(state):
    a, b = state.hyper.alpha, state.hyper.beta
    V = state.nkw.shape[1]
    phi = (state.nkw + b) / (state.nk + V * b)[:, None]
    theta = (state.ndk + a) / (state.ndk.sum(axis=1) + state.K * a)[:, None]
    return phi, theta


def estimate(state, config=None):
    phi, theta = _point_estimates(state)
    return _model(state, phi, theta, config)


def _model(state, phi, theta, config):
    # renormalize to absorb rounding in the closed-form ratios
    phi = phi / phi.sum(axis=1, keepdims=True)
    theta = theta / theta.sum(axis=1, keepdims=True)
    return TopicModel(phi, theta, state.hyper, "gibbs", state.corpus.segment_ids,
                      state.corpus.vocabulary.terms, dict(config or {}))


def run(corpus, hyper, burn_in=150, seed=0, n_average=0, config=None):
    """Initialize and sweep ``burn_in`` times; estimate phi and theta.

    By default the single end state is used. With ``n_average > 0`` that
    many further sweeps are taken and their point estimates averaged
    together with the end-of-burn-in estimate.
    """
    if burn_in < 1:
        raise ValueError("burn_in must be >= 1")
    if n_average < 0:
        raise ValueError("n_average must be >= 0")
    state = init(corpus, hyper, seed)
    for _ in range(burn_in):
        sweep(state)
    if not n_average:
        return state, estimate(state, config)
    phi, theta = _point_estimates(state)
    for _ in range(n_average):
        sweep(state)
        p, t = _point_estimates(state)
        phi = phi + p
        theta = theta + t
    return state, _model(state, phi / (n_average + 1), theta / (n_average + 1), config)


def assignment_counts(state, word):
    """Per-topic number of tokens of ``word`` currently assigned to each topic."""
    if not 0 <= word < state.nkw.shape[1]:
        raise IndexError(f"token id {word} out of range")
    return state.nkw[:, word].copy()


def state_to_dict(state):
    return {
        "version": STATE_FORMAT_VERSION,
        "seed": state.seed,
        "iteration": state.iteration,
        "hyper": state.hyper.to_dict(),
        "segment_ids": state.corpus.segment_ids,
        "z": [seg.tolist() for seg in state.z_by_segment()],
    }


def state_from_dict(data, corpus):
    """Rebuild a state against ``corpus``; counts are recomputed from ``z``."""
    if not isinstance(data, dict) or data.get("version") != STATE_FORMAT_VERSION:
        raise ModelFormatError("unsupported or missing Gibbs state version")
    try:
        hyper = Hyperparameters(**data["hyper"])
        corpus = corpus.nonempty()
        if list(data["segment_ids"]) != corpus.segment_ids:
            raise ModelFormatError("state segments do not match the corpus")
        zs = data["z"]
        if len(zs) != corpus.M or any(len(z) != len(ids) for z, (_, ids) in
                                      zip(zs, corpus.segments)):
            raise ModelFormatError("assignment lengths do not match corpus segments")
        z = np.array([t for seg in zs for t in seg], dtype=np.int64)
        if len(z) and (z.min() < 0 or z.max() >= hyper.K):
            raise ModelFormatError("assignment outside [0, K)")
        state = from_assignments(corpus, hyper, z, data["seed"], data["iteration"])
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed Gibbs state: {exc}") from None
    check_consistency(state)
    return state


def save_state(state, path, provenance=None):
    data = state_to_dict(state)
    if provenance is not None:
        data = {"provenance": provenance, **data}
    Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")


def load_state(path, corpus):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: cannot decode Gibbs state ({exc.msg})") from None
    return state_from_dict(data, corpus)
