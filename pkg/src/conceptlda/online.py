"""
online.py

Online variational Bayes for LDA: minibatch coordinate ascent on the
per-segment variational Dirichlets (gamma), followed by a stochastic
natural-gradient step on the topic Dirichlets (lambda) with step size
``rho_t = (tau0 + t) ** -kappa``, ``t`` counting updates from 1.
"""
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import gammaln, psi

from .model import Hyperparameters, ModelFormatError, TopicModel

__all__ = ["VBState", "SegmentPosterior", "init_state", "e_step", "update", "train",
           "infer_theta", "step_size", "dirichlet_expectation", "document_bound",
           "save_state", "load_state"]

STATE_FORMAT_VERSION = 1
_EPS = 1e-100


def dirichlet_expectation(x):
    """E[log p] under Dir(x), row-wise for matrices."""
    if x.ndim == 1:
        return psi(x) - psi(np.sum(x))
    return psi(x) - psi(np.sum(x, axis=1))[:, np.newaxis]


@dataclass(frozen=True, eq=False)
class VBState:
    lam: np.ndarray
    hyper: Hyperparameters
    n_docs: int
    tau0: float = 1.0
    kappa: float = 0.7
    batch_size: int = 256
    t: int = 0
    vocabulary: tuple = ()

    def __post_init__(self):
        if self.tau0 < 0:
            raise ValueError("tau0 must be >= 0")
        if not 0.5 < self.kappa <= 1.0:
            raise ValueError("kappa must lie in (0.5, 1]")
        if self.batch_size < 1 or self.n_docs < 1:
            raise ValueError("batch_size and n_docs must be positive")
        if self.lam.shape[0] != self.hyper.K or not np.all(self.lam > 0):
            raise ValueError("lambda must be K x V and strictly positive")

    @property
    def V(self):
        return self.lam.shape[1]

    @property
    def rho(self):
        """Step size the next update will use."""
        return step_size(self.tau0, self.kappa, self.t + 1)


@dataclass(frozen=True, eq=False)
class SegmentPosterior:
    gamma: np.ndarray

    @property
    def theta(self):
        return self.gamma / self.gamma.sum()


def step_size(tau0, kappa, t):
    return (tau0 + t) ** -kappa


def init_state(V, hyper, n_docs, seed=0, tau0=1.0, kappa=0.7, batch_size=256, vocabulary=()):
    rng = np.random.default_rng(seed)
    lam = rng.gamma(100.0, 1.0 / 100.0, size=(hyper.K, V))
    return VBState(lam, hyper, int(n_docs), float(tau0), float(kappa), int(batch_size), 0,
                   tuple(vocabulary))


def _bag(ids):
    ids, cts = np.unique(np.asarray(ids, dtype=np.int64), return_counts=True)
    return ids, cts.astype(np.float64)


def document_bound(cts, gamma, exp_elogbeta_d, alpha):
    """Per-segment variational objective with the word responsibilities at
    their optimum for ``gamma`` (topic terms held fixed, constants dropped)."""
    elogtheta = dirichlet_expectation(gamma)
    phinorm = np.exp(elogtheta) @ exp_elogbeta_d + _EPS
    return (np.sum(cts * np.log(phinorm)) + np.sum((alpha - gamma) * elogtheta)
            - gammaln(np.sum(gamma)) + np.sum(gammaln(gamma)))


def _fit_segment(ids, cts, exp_elogbeta, alpha, K, tol, max_iter, trace=None):
    gamma = np.full(K, alpha + cts.sum() / K)
    if len(ids) == 0:
        return np.full(K, alpha), np.ones(K), cts, np.zeros((K, 0))
    eb = exp_elogbeta[:, ids]
    exp_elogtheta = np.exp(dirichlet_expectation(gamma))
    phinorm = exp_elogtheta @ eb + _EPS
    if trace is not None:
        trace.append(document_bound(cts, gamma, eb, alpha))
    for _ in range(max_iter):
        last = gamma
        gamma = alpha + exp_elogtheta * ((cts / phinorm) @ eb.T)
        exp_elogtheta = np.exp(dirichlet_expectation(gamma))
        phinorm = exp_elogtheta @ eb + _EPS
        if trace is not None:
            trace.append(document_bound(cts, gamma, eb, alpha))
        if np.mean(np.abs(gamma - last)) < tol:
            break
    return gamma, exp_elogtheta, cts / phinorm, eb


def e_step(batch, state, tol=1e-4, max_iter=100, trace=None):
    """Fit gamma for each segment in ``batch`` with lambda held fixed.

    ``batch`` is a sequence of token-id arrays. Returns ``(gamma, sstats)``
    where ``sstats`` is the K x V matrix of expected topic-word counts summed
    over the batch. When ``trace`` is a list, the per-segment objective
    after each inner iteration is appended to it as one list per segment.
    """
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    K = state.hyper.K
    alpha = state.hyper.alpha
    exp_elogbeta = np.exp(dirichlet_expectation(state.lam))
    gamma = np.empty((len(batch), K))
    sstats = np.zeros_like(state.lam)
    for d, seg in enumerate(batch):
        ids, cts = _bag(seg)
        if len(ids) and ids.max() >= state.V:
            raise ValueError("segment token id outside the model vocabulary")
        seg_trace = [] if trace is not None else None
        g, exp_elogtheta, ratio, _ = _fit_segment(ids, cts, exp_elogbeta, alpha, K, tol,
                                                  max_iter, seg_trace)
        gamma[d] = g
        if len(ids):
            sstats[:, ids] += np.outer(exp_elogtheta, ratio)
        if trace is not None:
            trace.append(seg_trace)
    return gamma, sstats * exp_elogbeta


def update(batch, state, tol=1e-4, max_iter=100):
    """One stochastic step on lambda from a minibatch; returns the new state."""
    _, sstats = e_step(batch, state, tol, max_iter)
    rho = state.rho
    lam_hat = state.hyper.beta + (state.n_docs / len(batch)) * sstats
    lam = (1.0 - rho) * state.lam + rho * lam_hat
    return replace(state, lam=lam, t=state.t + 1)


def _topic_model(state, segments, segment_ids, tol, max_iter, config):
    phi = state.lam / state.lam.sum(axis=1, keepdims=True)
    if segments:
        gamma, _ = e_step(segments, state, tol, max_iter)
        theta = gamma / gamma.sum(axis=1, keepdims=True)
    else:
        theta = np.zeros((0, state.hyper.K))
    return TopicModel(phi, theta, state.hyper, "online", segment_ids, state.vocabulary,
                      dict(config or {}))


def train(corpus, hyper, passes=1, batch_size=256, tau0=1.0, kappa=0.7, seed=0,
          tol=1e-4, max_iter=100, config=None):
    """Train on every non-empty segment; theta comes from a final e-step
    over all of them with the learned lambda."""
    if passes < 1:
        raise ValueError("passes must be >= 1")
    corpus = corpus.nonempty()
    if corpus.M == 0:
        raise ValueError("cannot train on an empty corpus")
    segments = [ids for _, ids in corpus.segments]
    state = init_state(corpus.V, hyper, corpus.M, seed, tau0, kappa, batch_size,
                       corpus.vocabulary.terms)
    rng = np.random.default_rng([int(seed), 1])
    for _ in range(passes):
        order = rng.permutation(corpus.M)
        for start in range(0, corpus.M, batch_size):
            batch = [segments[i] for i in order[start:start + batch_size]]
            state = update(batch, state, tol, max_iter)
    return state, _topic_model(state, segments, corpus.segment_ids, tol, max_iter, config)


def infer_theta(state, segment, vocabulary=None, tol=1e-4, max_iter=100):
    """Posterior over topics for one encoded segment with lambda frozen."""
    if vocabulary is not None and state.vocabulary and \
            tuple(getattr(vocabulary, "terms", vocabulary)) != state.vocabulary:
        raise ValueError("segment was encoded against a different vocabulary")
    ids = np.asarray(segment, dtype=np.int64)
    if len(ids) and (ids.min() < 0 or ids.max() >= state.V):
        raise ValueError("segment token id outside the model vocabulary")
    gamma, _ = e_step([ids], state, tol, max_iter)
    return SegmentPosterior(gamma[0])


def state_to_dict(state):
    return {
        "version": STATE_FORMAT_VERSION,
        "t": state.t,
        "tau0": state.tau0,
        "kappa": state.kappa,
        "batch_size": state.batch_size,
        "n_docs": state.n_docs,
        "hyper": state.hyper.to_dict(),
        "vocabulary": list(state.vocabulary),
        "lambda": state.lam.tolist(),
    }


def state_from_dict(data):
    if not isinstance(data, dict) or data.get("version") != STATE_FORMAT_VERSION:
        raise ModelFormatError("unsupported or missing VB state version")
    try:
        return VBState(np.asarray(data["lambda"], dtype=np.float64),
                       Hyperparameters(**data["hyper"]), data["n_docs"], data["tau0"],
                       data["kappa"], data["batch_size"], data["t"],
                       tuple(data.get("vocabulary", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed VB state: {exc}") from None


def save_state(state, path, provenance=None):
    data = state_to_dict(state)
    if provenance is not None:
        data = {"provenance": provenance, **data}
    Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")


def load_state(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: cannot decode VB state ({exc.msg})") from None
    return state_from_dict(data)
