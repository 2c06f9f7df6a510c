"""Pure-Python kernels used when the compiled extension is unavailable."""
import numpy as np


def gibbs_sweep(words, docs, z, ndk, nkw, nk, alpha, beta, uniforms):
    """One in-place collapsed Gibbs pass over every token.

    ``uniforms[i]`` drives the inverse-CDF draw for token ``i``.
    """
    K = nk.shape[0]
    vbeta = nkw.shape[1] * beta
    last = K - 1
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        cum = np.cumsum((nkw[:, w] + beta) / (nk + vbeta) * (ndk[d] + alpha))
        k = int(np.searchsorted(cum, uniforms[i] * cum[last], side="right"))
        if k > last:
            k = last
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1
