import csv
import math

import numpy as np
import pytest

from levy_passage.errors import TooFewHits
from levy_passage.mc import (
    SimConfig,
    default_horizon,
    default_kill_depth,
    empirical_triplet_law,
    estimate_F,
    estimate_sup_tail,
    normalize_time,
    simulate_coupled,
    simulate_passage,
)
from levy_passage.measures import NO_JUMPS, Atoms, GammaMixture
from levy_passage.model import ProcessSpec, mean_x1
from levy_passage.transform import invert_bromwich
from levy_passage.zeros import find_real_zeros

BACKENDS = ["numba", "numpy"]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_paths=0)
    with pytest.raises(ValueError):
        SimConfig(horizon=-1.0)
    with pytest.raises(ValueError):
        SimConfig(block_size=0)


def test_defaults(cramer_lundberg, brownian):
    g0 = find_real_zeros(cramer_lundberg)[0]
    assert default_kill_depth(cramer_lundberg) == pytest.approx(math.log(1e6) / g0)
    assert default_horizon(brownian, 2.0) == pytest.approx(100.0)
    up = ProcessSpec(-1.0, GammaMixture(((1.0, 1.0, 0),)))
    assert default_kill_depth(up) == math.inf


@pytest.mark.parametrize("backend", BACKENDS)
def test_brownian_ruin_probability(brownian, backend):
    cfg = SimConfig(n_paths=100_000, x=1.0, seed=3, backend=backend)
    est = estimate_F(brownian, 0, 0, 0, 1.0, cfg)
    assert abs(est.estimate - math.exp(-2)) <= 4 * est.std_error + est.bias_bound


@pytest.mark.parametrize("backend", BACKENDS)
def test_brownian_time_transform(brownian, backend):
    theta = 0.5
    cfg = SimConfig(n_paths=50_000, x=1.0, seed=4, backend=backend)
    est = estimate_F(brownian, theta, 0, 0, 1.0, cfg)
    assert abs(est.estimate - math.exp(-(1 + math.sqrt(1 + 2 * theta)))) <= 4 * est.std_error + 1e-4


@pytest.mark.parametrize("backend", BACKENDS)
def test_gamma_joint_transform_against_inversion(cramer_lundberg, backend):
    th, mu, rho, x = 0.1, 0.5, 0.3, 2.0
    cfg = SimConfig(n_paths=100_000, x=x, seed=9, backend=backend)
    est = estimate_F(cramer_lundberg, th, mu, rho, x, cfg)
    ref = invert_bromwich(cramer_lundberg, th, mu, rho, x)
    assert abs(est.estimate - ref) <= 4 * est.std_error + est.bias_bound


def test_samples_structure(cramer_lundberg):
    s = simulate_passage(cramer_lundberg, SimConfig(n_paths=5000, x=1.0, seed=1))
    h = s.hit
    assert s.n_hits == h.sum() and s.n_paths == 5000
    assert np.all(s.k[h] >= 0) and np.all(s.l[h] >= 0)
    # a creeping hit has no overshoot and sits exactly on the level
    creep = h & (s.k == 0)
    assert np.all(s.position[creep] == 1.0)
    assert np.allclose(s.position[h & ~creep], 1.0 + s.k[h & ~creep])
    assert s.censored_fraction + s.killed_fraction == pytest.approx(1 - h.mean())
    first = next(iter(s))
    assert first.hit == bool(h[0])
    meta = s.metadata()
    assert meta["n_hits"] == s.n_hits and meta["backend"] in BACKENDS


def test_brownian_never_overshoots(brownian):
    s = simulate_passage(brownian, SimConfig(n_paths=2000, x=0.5, seed=2))
    assert np.all(s.k[s.hit] == 0) and np.all(s.l[s.hit] == 0)


def test_csv_output(tmp_path, cramer_lundberg):
    s = simulate_passage(cramer_lundberg, SimConfig(n_paths=300, x=0.5, seed=2))
    s.to_csv(tmp_path / "s.csv")
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert len(rows) == 300
    for r, hit in zip(rows, s.hit):
        assert r["hit"] == ("1" if hit else "0")
        assert (r["t"] == "") == (not hit)


@pytest.mark.parametrize("backend", BACKENDS)
def test_seed_determinism_across_threads(cramer_lundberg, backend):
    a = simulate_passage(cramer_lundberg, SimConfig(n_paths=40_000, x=1.0, seed=11, threads=1, backend=backend))
    b = simulate_passage(cramer_lundberg, SimConfig(n_paths=40_000, x=1.0, seed=11, threads=3, backend=backend))
    assert np.array_equal(a.status, b.status) and np.array_equal(a.t, b.t)
    c = simulate_passage(cramer_lundberg, SimConfig(n_paths=40_000, x=1.0, seed=12, backend=backend))
    assert not np.array_equal(a.t, c.t)


def test_level_zero_is_certain(cramer_lundberg):
    est = estimate_F(cramer_lundberg, 0.3, 0, 0, 0.0, SimConfig(n_paths=10))
    assert est.estimate == 1.0 and est.std_error == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_sup_tail_against_inversion(backend):
    spec = ProcessSpec(0.6, GammaMixture(((0.1, 0.6, 0), (0.1, 1.0, 1))))
    xs = [0.5, 2.0, 6.0]
    tail = estimate_sup_tail(spec, xs, n_paths=100_000, seed=6, backend=backend)
    assert tail.bounded
    for x, p, se, b in zip(xs, tail.p, tail.se, tail.bias_bound):
        assert abs(p - invert_bromwich(spec, 0, 0, 0, x)) <= 4 * se + b


def test_sup_tail_unbounded_for_heavy_tail(power_tail):
    tail = estimate_sup_tail(power_tail, [1.0], n_paths=2000, seed=1)
    assert not tail.bounded


def test_two_sided_mc_matches_pathwise_definitions(two_sided):
    s = simulate_passage(two_sided, SimConfig(n_paths=20_000, x=1.0, seed=8))
    tail = estimate_sup_tail(two_sided, [1.0], n_paths=20_000, seed=8)
    se = math.sqrt(tail.p[0] * (1 - tail.p[0]) / 20_000)
    assert abs(s.hit.mean() - tail.p[0]) <= 5 * math.sqrt(2) * se


def test_triplet_law_and_normalisation(cramer_lundberg):
    law = empirical_triplet_law(cramer_lundberg, 1.0, SimConfig(n_paths=20_000, x=1.0, seed=3))
    assert law.n_hits >= 1000 and law.scaling.startswith("(T + x/phi'")
    assert law.z.shape == law.k.shape == law.l.shape
    F = law.ecdf(np.array([3.0, 1.0, 2.0]))
    assert list(F([0.5, 1.0, 2.5, 3.0])) == pytest.approx([0, 1 / 3, 2 / 3, 1])
    with pytest.raises(TooFewHits):
        empirical_triplet_law(cramer_lundberg, 20.0, SimConfig(n_paths=2000, x=20.0, seed=3))


def test_zero_mean_scaling():
    zm = ProcessSpec(2 / math.e, GammaMixture(((1.0, 1.0, 0),)))
    assert abs(mean_x1(zm)) < 1e-12
    z, kind = normalize_time(zm, np.array([100.0]), 10.0)
    assert kind == "T/x^2" and z[0] == pytest.approx(1.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_coupled_truncation_is_monotone(two_sided, backend):
    spec = ProcessSpec(1.0, Atoms(((-3.0, 0.3), (-0.5, 0.2), (1.0, 0.5))))
    cs = simulate_coupled(spec, 1.0, SimConfig(n_paths=3000, x=1.0, seed=4, backend=backend))
    assert cs.monotone()
    assert cs.hit_k().sum() >= cs.hit().sum()


def test_coupled_rejects_drift_change():
    spec = ProcessSpec(1.0, Atoms(((-0.5, 0.2), (1.0, 0.5))))
    with pytest.raises(ValueError):
        simulate_coupled(spec, 0.25, SimConfig(n_paths=10, x=1.0))


def test_brownian_hitting_time_is_inverse_gaussian():
    from scipy import stats

    spec = ProcessSpec(-1.0, NO_JUMPS)
    x = 50.0
    s = simulate_passage(spec, SimConfig(n_paths=20_000, x=x, seed=21))
    assert s.hit.all()
    # drift +1: T_x ~ IG(mean x, shape x²)
    ig = stats.invgauss(1 / x, scale=x * x)
    assert stats.kstest(s.t, ig.cdf).pvalue > 0.001
