"""Independent reference computations used as test oracles.

Nothing here imports the inference code under test.
"""
import itertools
from math import exp, lgamma

import mpmath
import numpy as np


def exact_gibbs_posterior(docs, K, V, alpha, beta):
    """P(z | w) over every assignment of the flattened tokens, by enumeration.

    Returns ``{z_tuple: probability}`` with ``z_tuple`` in corpus token order.
    """
    flat = [(d, w) for d, doc in enumerate(docs) for w in doc]
    logp = {}
    for z in itertools.product(range(K), repeat=len(flat)):
        ndk = np.zeros((len(docs), K))
        nkw = np.zeros((K, V))
        for (d, w), k in zip(flat, z):
            ndk[d, k] += 1
            nkw[k, w] += 1
        lp = 0.0
        for d in range(len(docs)):
            lp += sum(lgamma(ndk[d, k] + alpha) for k in range(K)) - lgamma(len(docs[d]) + K * alpha)
        for k in range(K):
            lp += sum(lgamma(nkw[k, w] + beta) for w in range(V)) - lgamma(nkw[k].sum() + V * beta)
        logp[z] = lp
    top = max(logp.values())
    weights = {z: exp(lp - top) for z, lp in logp.items()}
    total = sum(weights.values())
    return {z: p / total for z, p in weights.items()}


def _digamma(x):
    return float(mpmath.digamma(x))


def naive_segment_gamma(words, lam, alpha, tol=1e-13, max_iter=100_000):
    """Fixed-point variational update for one segment, written with plain loops.

    Starts from alpha + N/K in every topic and iterates until the largest
    change in gamma is below ``tol``. Returns (gamma, responsibilities per
    distinct word as {word: [phi_k]}).
    """
    K, V = len(lam), len(lam[0])
    elogbeta = [[_digamma(lam[k][v]) - _digamma(sum(lam[k])) for v in range(V)]
                for k in range(K)]
    counts = {}
    for w in words:
        counts[w] = counts.get(w, 0) + 1
    gamma = [alpha + len(words) / K] * K
    resp = {}
    for _ in range(max_iter):
        elogtheta = [_digamma(g) - _digamma(sum(gamma)) for g in gamma]
        resp = {}
        for w in counts:
            raw = [exp(elogtheta[k] + elogbeta[k][w]) for k in range(K)]
            s = sum(raw)
            resp[w] = [r / s for r in raw]
        new = [alpha + sum(counts[w] * resp[w][k] for w in counts) for k in range(K)]
        delta = max(abs(a - b) for a, b in zip(new, gamma))
        gamma = new
        if delta < tol:
            break
    return gamma, resp, counts


def naive_batch_vb_lambda(docs, lam, alpha, beta):
    """One batch variational M-step: lambda = beta + expected topic-word counts."""
    K, V = len(lam), len(lam[0])
    out = [[beta] * V for _ in range(K)]
    for doc in docs:
        _, resp, counts = naive_segment_gamma(doc, lam, alpha)
        for w, c in counts.items():
            for k in range(K):
                out[k][w] += c * resp[w][k]
    return np.array(out)


def greedy_l1(learned, true):
    """Mean per-topic L1 distance after greedily pairing closest topics."""
    cost = np.abs(learned[:, None, :] - true[None, :, :]).sum(axis=2)
    used_l, used_t, errs = set(), set(), []
    for idx in np.argsort(cost, axis=None, kind="stable"):
        i, j = divmod(int(idx), cost.shape[1])
        if i in used_l or j in used_t:
            continue
        used_l.add(i)
        used_t.add(j)
        errs.append(cost[i, j])
    return float(np.mean(errs))


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
