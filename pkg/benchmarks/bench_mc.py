"""Throughput of the compiled and the pure-numpy simulation backends.

    python benchmarks/bench_mc.py --paths 200000

Each case runs once to warm up (JIT compilation) and is then timed over
``--repeat`` runs; the best time is reported.
"""

from __future__ import annotations

import argparse
import time

from levy_passage.mc import HAVE_NUMBA, SimConfig, estimate_sup_tail, simulate_passage
from levy_passage.measures import NO_JUMPS, Atoms, GammaMixture
from levy_passage.model import ProcessSpec

CASES = {
    "brownian x=2": (ProcessSpec(1.0, NO_JUMPS), 2.0),
    "gamma jumps x=5": (ProcessSpec(0.6, GammaMixture(((0.1, 0.6, 0), (0.1, 1.0, 1)))), 5.0),
    "two-sided atoms x=2": (ProcessSpec(1.0, Atoms(((-0.5, 0.2), (1.0, 0.5)))), 2.0),
}


def _best(fn, repeat: int) -> float:
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    a = ap.parse_args()
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    print(f"{'case':<22} {'kernel':<8} " + " ".join(f"{b:>12}" for b in backends) + "   speed-up")
    for name, (spec, x) in CASES.items():
        for kernel in ("passage", "sup"):
            times = []
            for b in backends:
                cfg = SimConfig(n_paths=a.paths, x=x, seed=1, threads=a.threads, backend=b)
                if kernel == "passage":
                    fn = lambda cfg=cfg: simulate_passage(spec, cfg)  # noqa: E731
                else:
                    fn = lambda b=b: estimate_sup_tail(spec, [x], n_paths=a.paths, seed=1,  # noqa: E731
                                                       threads=a.threads, backend=b)
                times.append(_best(fn, a.repeat))
            cells = " ".join(f"{t:>11.3f}s" for t in times)
            ratio = f"{times[1] / times[0]:9.1f}x" if len(times) == 2 else ""
            print(f"{name:<22} {kernel:<8} {cells} {ratio}")


if __name__ == "__main__":
    main()
