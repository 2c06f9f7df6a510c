"""Compare the compiled Gibbs sweep with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--sweeps N]

Both kernels run on copies of the same state with the same uniforms, so the
script also checks that they leave identical assignments behind.
"""
import argparse
import time

import numpy as np

from conceptlda import _fallback, gibbs
from conceptlda.model import Hyperparameters, generate_corpus

try:
    from conceptlda._gibbs_kernel import gibbs_sweep as compiled_sweep
except ImportError:
    compiled_sweep = None


def time_kernel(kernel, state, sweeps):
    state = state.copy()
    start = time.perf_counter()
    for i in range(sweeps):
        u = np.random.default_rng([state.seed, i + 1]).random(len(state.words))
        kernel(state.words, state.docs, state.z, state.ndk, state.nkw, state.nk,
               state.hyper.alpha, state.hyper.beta, u)
    elapsed = time.perf_counter() - start
    return elapsed, state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=3)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--segments", type=int, default=200)
    ap.add_argument("--length", type=int, default=100)
    args = ap.parse_args(argv)

    hyper = Hyperparameters(args.k)
    corpus, _, _, _ = generate_corpus(hyper, args.segments, args.length, 0, vocabulary=500)
    state = gibbs.init(corpus, hyper, seed=0)
    n = len(state.words)
    print(f"tokens={n} K={args.k} sweeps={args.sweeps}")

    t_py, s_py = time_kernel(_fallback.gibbs_sweep, state, args.sweeps)
    print(f"python  {t_py / args.sweeps * 1e3:10.2f} ms/sweep")
    if compiled_sweep is None:
        print("cython  (extension not built)")
        return 0
    t_c, s_c = time_kernel(compiled_sweep, state, args.sweeps)
    print(f"cython  {t_c / args.sweeps * 1e3:10.2f} ms/sweep")
    print(f"speedup {t_py / t_c:10.1f}x")
    print("identical assignments:", bool(np.array_equal(s_py.z, s_c.z)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
