"""Kernel selection: compiled extension when importable, else pure Python.

Set ``CONCEPTLDA_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
gibbs_sweep = _fallback.gibbs_sweep

if os.environ.get("CONCEPTLDA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._gibbs_kernel import gibbs_sweep  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass
