"""Monte Carlo front end: configuration, seeding, threading and estimators.

Paths are generated in fixed-size blocks. Block ``i`` draws from
``PCG64(SeedSequence(seed).spawn(n_blocks)[i])`` so the output depends only
on ``(seed, n_paths, block_size)`` and never on the number of workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from ..errors import LevyPassageError, TooFewHits
from ..model import ProcessSpec, eval_phi_derivative, mean_x1, phi_second_at_zero
from ..zeros import find_real_zeros, is_zero_mean
from . import kernels_numba, kernels_numpy
from .backend import active_backend, default_threads
from .kernels_numba import CENSORED, HIT, KILLED

DEFAULT_BLOCK = 1 << 14
KILL_LEVEL = 1e-6  # Lundberg factor e^{-γ₀ D} at the default kill depth


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Parameters
    ----------
    n_paths
        Number of independent paths (>= 1).
    x
        Level.
    horizon
        Censoring time T_max; ``None`` picks 50 x/|E X₁| (or 50 x² φ''(0)
        in the zero-mean case).
    h_euler
        Kept for interface compatibility. The kernels are exact between
        jump epochs, so no time step is used.
    seed
        Root seed of the block streams.
    kill_depth
        Paths below ``-kill_depth`` are stopped as non-hits. ``None`` picks
        ln(1e6)/γ₀ when E X₁ < 0 and disables killing otherwise;
        ``math.inf`` disables it explicitly.
    threads
        Worker threads; ``None`` reads ``LEVY_PASSAGE_THREADS``.
    block_size
        Paths per random stream; part of the reproducibility key.
    backend
        ``"numba"``, ``"numpy"`` or ``None`` for the environment default.
    """

    n_paths: int = 100_000
    x: float = 1.0
    horizon: float | None = None
    h_euler: float | None = None
    seed: int = 0
    kill_depth: float | None = None
    threads: int | None = None
    block_size: int = DEFAULT_BLOCK
    backend: str | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.h_euler is not None and self.h_euler <= 0:
            raise ValueError("h_euler must be positive")


class PassageSample(NamedTuple):
    hit: bool
    t_hit: float | None
    k: float | None
    l: float | None

    @property
    def jump_at_hit(self) -> float | None:
        return None if not self.hit else self.k + self.l


@dataclass
class PassageSamples:
    """Column store of one simulation run."""

    x: float
    status: np.ndarray
    t: np.ndarray
    k: np.ndarray
    l: np.ndarray
    position: np.ndarray
    horizon: float
    kill_depth: float
    gamma0: float | None
    seed: int
    backend: str

    @property
    def hit(self) -> np.ndarray:
        return self.status == HIT

    @property
    def n_paths(self) -> int:
        return int(self.status.size)

    @property
    def n_hits(self) -> int:
        return int(np.count_nonzero(self.hit))

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.status == CENSORED))

    @property
    def killed_fraction(self) -> float:
        return float(np.mean(self.status == KILLED))

    def bias_bound(self) -> float:
        """Upper bound on the hit mass lost to censoring and killing.

        With E X₁ < 0 the Lundberg bound P(sup X > u) ≤ e^{-γ₀ u} applies
        from each stopping position; otherwise every stopped path counts.
        """
        stopped = self.status != HIT
        if not stopped.any():
            return 0.0
        if self.gamma0 is not None and self.gamma0 > 0:
            gap = self.x - self.position[stopped]
            per = np.minimum(1.0, np.exp(-self.gamma0 * np.maximum(gap, 0.0)))
            return float(per.sum() / self.n_paths)
        return float(np.count_nonzero(stopped) / self.n_paths)

    def __iter__(self) -> Iterator[PassageSample]:
        for s, t, k, l in zip(self.status, self.t, self.k, self.l):
            if s == HIT:
                yield PassageSample(True, float(t), float(k), float(l))
            else:
                yield PassageSample(False, None, None, None)

    def __len__(self) -> int:
        return self.n_paths

    def weights(self, theta: float = 0.0, mu: float = 0.0, rho: float = 0.0) -> np.ndarray:
        h = self.hit
        w = np.zeros(self.n_paths)
        w[h] = np.exp(-theta * self.t[h] - mu * self.k[h] - rho * self.l[h])
        return w

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["hit", "t", "k", "l"])
            for s, t, k, l in zip(self.status, self.t, self.k, self.l):
                if s == HIT:
                    wr.writerow([1, repr(float(t)), repr(float(k)), repr(float(l))])
                else:
                    wr.writerow([0, "", "", ""])

    def metadata(self) -> dict:
        return {
            "x": self.x,
            "n_paths": self.n_paths,
            "n_hits": self.n_hits,
            "horizon": self.horizon,
            "kill_depth": self.kill_depth if math.isfinite(self.kill_depth) else None,
            "censored_fraction": self.censored_fraction,
            "killed_fraction": self.killed_fraction,
            "bias_bound": self.bias_bound(),
            "seed": self.seed,
            "backend": self.backend,
        }


class FEstimate(NamedTuple):
    estimate: float
    std_error: float
    bias_bound: float
    n_hits: int
    n_paths: int


# ---------------------------------------------------------------------------
# parameter resolution


def _gamma0(spec: ProcessSpec) -> float | None:
    """Lundberg exponent when E X₁ < 0 and it exists (None otherwise)."""
    if mean_x1(spec) >= 0 or is_zero_mean(spec) or spec.r_nu <= 0:
        return None
    try:
        return float(find_real_zeros(spec, 0.0)[0])
    except LevyPassageError:
        return None


def default_horizon(spec: ProcessSpec, x: float) -> float:
    xe = max(float(x), 1.0)
    if is_zero_mean(spec):
        return 50.0 * xe * xe * phi_second_at_zero(spec)
    return 50.0 * xe / abs(mean_x1(spec))


def default_kill_depth(spec: ProcessSpec) -> float:
    g0 = _gamma0(spec)
    if g0 is None or g0 <= 0:
        return math.inf
    return math.log(1.0 / KILL_LEVEL) / g0


def _resolve(spec: ProcessSpec, cfg: SimConfig, x: float):
    horizon = cfg.horizon if cfg.horizon is not None else default_horizon(spec, x)
    kill = cfg.kill_depth if cfg.kill_depth is not None else default_kill_depth(spec)
    threads = cfg.threads if cfg.threads is not None else default_threads()
    return float(horizon), float(kill), max(1, int(threads)), active_backend(cfg.backend)


def _blocks(n: int, size: int, seed: int):
    nb = -(-n // size)
    seqs = np.random.SeedSequence(seed).spawn(nb)
    out = []
    for i, ss in enumerate(seqs):
        lo = i * size
        out.append((lo, min(size, n - lo), ss))
    return out


def _run_blocks(work, blocks, threads: int) -> None:
    if threads == 1 or len(blocks) == 1:
        for b in blocks:
            work(*b)
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        for f in [ex.submit(work, *b) for b in blocks]:
            f.result()


def _kill_arg(kill: float) -> float:
    return kill if math.isfinite(kill) else 1e300


# ---------------------------------------------------------------------------
# passage


def simulate_passage(spec: ProcessSpec, config: SimConfig) -> PassageSamples:
    """Simulate ``T_x``, ``K_x`` and ``L_x`` for ``config.n_paths`` paths."""
    x = float(config.x)
    horizon, kill, threads, backend = _resolve(spec, config, x)
    tab = spec.measure.jump_table()
    m = spec.effective_drift
    n = config.n_paths
    status = np.empty(n, dtype=np.int64)
    t = np.empty(n)
    k = np.empty(n)
    l = np.empty(n)
    pos = np.empty(n)
    kern = kernels_numba.passage_kernel if backend == "numba" else kernels_numpy.passage_kernel
    args = (tab.rate, tab.cumw, tab.kind, tab.p1, tab.p2, tab.bound, tab.off, tab.deg, tab.coefs)
    kl = _kill_arg(kill)

    def work(lo, size, ss):
        rng = np.random.Generator(np.random.PCG64(ss))
        sl = slice(lo, lo + size)
        kern(rng, size, x, m, horizon, kl, *args, status[sl], t[sl], k[sl], l[sl], pos[sl])

    _run_blocks(work, _blocks(n, config.block_size, config.seed), threads)
    return PassageSamples(
        x=x,
        status=status,
        t=t,
        k=k,
        l=l,
        position=pos,
        horizon=horizon,
        kill_depth=kill,
        gamma0=_gamma0(spec),
        seed=config.seed,
        backend=backend,
    )


def F_from_samples(samples: PassageSamples, theta=0.0, mu=0.0, rho=0.0) -> FEstimate:
    w = samples.weights(theta, mu, rho)
    n = w.size
    est = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return FEstimate(est, se, samples.bias_bound(), samples.n_hits, n)


def estimate_F(
    spec: ProcessSpec,
    theta: float,
    mu: float,
    rho: float,
    x: float,
    config: SimConfig,
) -> FEstimate:
    """Monte Carlo estimate of E[e^{-θT - μK - ρL}; T_x < ∞].

    Returns estimate, standard error, an upper bound on the censoring and
    killing bias, the hit count and the path count.
    """
    if x <= 0:
        return FEstimate(1.0, 0.0, 0.0, config.n_paths, config.n_paths)
    samples = simulate_passage(spec, replace(config, x=float(x)))
    return F_from_samples(samples, theta, mu, rho)


# ---------------------------------------------------------------------------
# supremum tail on many levels at once


class SupTail(NamedTuple):
    """Tail estimates per level.

    ``se`` is floored at 1/n so an empty cell still carries the
    rule-of-three upper bound 3/n. ``bias_bound`` is a true bound only when
    ``bounded`` (Lundberg exponent available); otherwise it is the fraction
    of stopped paths, reported as a diagnostic.
    """

    levels: np.ndarray
    p: np.ndarray
    se: np.ndarray
    bias_bound: np.ndarray
    n_paths: int
    bounded: bool


def simulate_sup(spec: ProcessSpec, top: float, config: SimConfig):
    """Running supremum of each path, stopped once it passes ``top``."""
    horizon, kill, threads, backend = _resolve(spec, config, top)
    tab = spec.measure.jump_table()
    m = spec.effective_drift
    n = config.n_paths
    sup = np.empty(n)
    status = np.empty(n, dtype=np.int64)
    kern = kernels_numba.sup_kernel if backend == "numba" else kernels_numpy.sup_kernel
    args = (tab.rate, tab.cumw, tab.kind, tab.p1, tab.p2, tab.bound, tab.off, tab.deg, tab.coefs)
    kl = _kill_arg(kill)

    def work(lo, size, ss):
        rng = np.random.Generator(np.random.PCG64(ss))
        sl = slice(lo, lo + size)
        kern(rng, size, float(top), m, horizon, kl, *args, sup[sl], status[sl])

    _run_blocks(work, _blocks(n, config.block_size, config.seed), threads)
    return sup, status, horizon, kill


def estimate_sup_tail(
    spec: ProcessSpec,
    levels: Sequence[float],
    n_paths: int = 100_000,
    seed: int = 0,
    horizon: float | None = None,
    kill_depth: float | None = None,
    threads: int | None = None,
    backend: str | None = None,
) -> SupTail:
    """P(sup_{t ≤ T_max} X_t > x) on every level from one set of paths."""
    lv = np.asarray(levels, dtype=float)
    cfg = SimConfig(
        n_paths=n_paths,
        x=float(lv.max(initial=0.0)),
        horizon=horizon,
        seed=seed,
        kill_depth=kill_depth,
        threads=threads,
        backend=backend,
    )
    sup, status, _, kill = simulate_sup(spec, float(lv.max(initial=0.0)), cfg)
    srt = np.sort(sup)
    p = 1.0 - np.searchsorted(srt, lv, side="right") / n_paths
    p = np.where(lv <= 0, 1.0, p)
    se = np.sqrt(np.maximum(p, 1.0 / n_paths) * (1 - p) / n_paths)
    g0 = _gamma0(spec)
    killed = float(np.mean(status == KILLED))
    censored = float(np.mean(status == CENSORED))
    if g0 is not None:
        # censored paths have no recorded position and count in full
        kb = np.exp(-g0 * (lv + kill)) if math.isfinite(kill) else 0.0
        bias = killed * kb + censored
        bias = np.where(lv <= 0, 0.0, bias)
        return SupTail(lv, p, se, bias, n_paths, True)
    return SupTail(lv, p, se, np.full(lv.shape, killed + censored), n_paths, False)


# ---------------------------------------------------------------------------
# conditional law of the triplet


@dataclass(frozen=True)
class TripletLaw:
    """Hit-conditional samples of the normalized time, overshoot and undershoot."""

    x: float
    z: np.ndarray
    k: np.ndarray
    l: np.ndarray
    scaling: str
    n_paths: int

    @property
    def n_hits(self) -> int:
        return int(self.z.size)

    @staticmethod
    def ecdf(sample: np.ndarray):
        s = np.sort(sample)
        return lambda v: np.searchsorted(s, np.asarray(v, dtype=float), side="right") / s.size


MIN_HITS = 1000


def normalize_time(spec: ProcessSpec, t: np.ndarray, x: float) -> tuple[np.ndarray, str]:
    if is_zero_mean(spec):
        return t / (x * x), "T/x^2"
    g0 = find_real_zeros(spec, 0.0)[0] if mean_x1(spec) < 0 else 0.0
    d1 = float(np.real(eval_phi_derivative(spec, -g0)))
    return (t + x / d1) / math.sqrt(x), "(T + x/phi'(-gamma0))/sqrt(x)"


def empirical_triplet_law(spec: ProcessSpec, x: float, config: SimConfig) -> TripletLaw:
    """Hit-conditional (normalized T, K, L) samples.

    Raises
    ------
    TooFewHits
        Fewer than 1000 hits.
    """
    s = simulate_passage(spec, replace(config, x=float(x)))
    h = s.hit
    if s.n_hits < MIN_HITS:
        raise TooFewHits(f"{s.n_hits} hits < {MIN_HITS}; raise n_paths")
    z, how = normalize_time(spec, s.t[h], float(x))
    return TripletLaw(float(x), z, s.k[h].copy(), s.l[h].copy(), how, s.n_paths)


# ---------------------------------------------------------------------------
# coupled truncation


@dataclass
class CoupledSamples:
    x: float
    ktrunc: float
    status: np.ndarray
    t: np.ndarray
    status_k: np.ndarray
    t_k: np.ndarray

    def hit(self):
        return self.status == HIT

    def hit_k(self):
        return self.status_k == HIT

    def monotone(self) -> bool:
        """Every pair has T^k ≤ T (a non-hit counts as T = ∞)."""
        h, hk = self.hit(), self.hit_k()
        if np.any(h & ~hk):
            return False
        both = h & hk
        return bool(np.all(self.t_k[both] <= self.t[both]))


def simulate_coupled(spec: ProcessSpec, k: float, config: SimConfig) -> CoupledSamples:
    """Full and lower-truncated processes driven by shared randomness.

    The pathwise identity X^k = X + S needs both processes to share the
    drift between jumps, i.e. no mass of ν in (-1, -k) when k < 1.

    Raises
    ------
    ValueError
        ``k < 1`` with mass in (-1, -k).
    """
    if not k > 0:
        raise ValueError("truncation level must be positive")
    trunc = ProcessSpec(spec.drift, spec.measure.truncate_below(k), spec.label)
    if abs(trunc.effective_drift - spec.effective_drift) > 1e-12 * (1 + abs(spec.effective_drift)):
        raise ValueError("coupling needs identical drift: ν has mass in (-1, -k)")
    x = float(config.x)
    horizon, kill, threads, backend = _resolve(spec, config, x)
    tab = spec.measure.jump_table()
    m = spec.effective_drift
    n = config.n_paths
    status = np.empty(n, dtype=np.int64)
    statk = np.empty(n, dtype=np.int64)
    t = np.empty(n)
    tk = np.empty(n)
    kern = kernels_numba.coupled_kernel if backend == "numba" else kernels_numpy.coupled_kernel_py
    args = (tab.rate, tab.cumw, tab.kind, tab.p1, tab.p2, tab.bound, tab.off, tab.deg, tab.coefs)
    kl = _kill_arg(kill)
    kt = float(k) if math.isfinite(k) else 1e300

    def work(lo, size, ss):
        rng = np.random.Generator(np.random.PCG64(ss))
        sl = slice(lo, lo + size)
        kern(rng, size, x, m, horizon, kl, kt, *args, status[sl], t[sl], tk[sl], statk[sl])

    _run_blocks(work, _blocks(n, config.block_size, config.seed), threads)
    return CoupledSamples(x, float(k), status, t, statk, tk)
