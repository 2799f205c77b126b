"""Backend selection for the simulation kernels.

``LEVY_PASSAGE_BACKEND=numpy`` forces the vectorised numpy kernels;
``numba`` (the default when importable) uses the compiled event loops.
"""

from __future__ import annotations

import os

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

ENV_BACKEND = "LEVY_PASSAGE_BACKEND"
ENV_THREADS = "LEVY_PASSAGE_THREADS"


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        fn = args[0]
        fn.py_func = fn
        return fn

    def wrap(fn):
        fn.py_func = fn
        return fn

    return wrap


def active_backend(requested: str | None = None) -> str:
    name = (requested or os.environ.get(ENV_BACKEND, "")).strip().lower()
    if name in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; use 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return name


def default_threads() -> int:
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {env!r}") from exc
        return max(1, n)
    return max(1, os.cpu_count() or 1)
