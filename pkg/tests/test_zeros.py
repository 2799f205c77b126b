import math

import numpy as np
import pytest
from scipy import optimize

from levy_passage.errors import HypothesisUnverified
from levy_passage.measures import NO_JUMPS, Atoms, GammaMixture
from levy_passage.model import ProcessSpec, eval_phi
from levy_passage.zeros import (
    companion_zeros,
    count_profile,
    find_real_zeros,
    find_strip_zeros,
    is_zero_mean,
    multiplicity_at,
)


def test_brownian_real_zeros():
    # roots of q²/2 + q = θ are -1 ± √(1+2θ)
    for theta in (0.0, 0.5, 2.0):
        g0, gs = find_real_zeros(ProcessSpec(1.0, NO_JUMPS), theta)
        assert g0 == pytest.approx(1 + math.sqrt(1 + 2 * theta), abs=1e-12)
        assert gs == pytest.approx(-1 + math.sqrt(1 + 2 * theta), abs=1e-12)


def test_cramer_lundberg_gamma0_against_brentq(cramer_lundberg):
    g0, gs = find_real_zeros(cramer_lundberg, 0.0)
    assert gs == 0.0
    f = lambda q: eval_phi(cramer_lundberg, q).real  # noqa: E731
    ref = -optimize.brentq(f, -0.999999, -1e-6, xtol=1e-15)
    assert g0 == pytest.approx(ref, abs=1e-11)


def test_theta_must_be_nonnegative(brownian):
    with pytest.raises(ValueError):
        find_real_zeros(brownian, -1.0)


def test_strip_zeros_match_companion_roots():
    spec = ProcessSpec(0.6, GammaMixture(((0.1, 0.6, 0), (0.1, 1.0, 1))))
    B = 0.59
    rep = find_strip_zeros(spec, 0.0, B)
    comp = companion_zeros(spec, 0.0, B, beta_t=rep.strip[1])
    found = [z for z, m in rep.zeros for _ in range(m)]
    assert len(found) == len(comp) == rep.winding_total
    for z in found:
        assert min(abs(z - c) for c in comp) < 1e-8


def test_pairs_exclude_real_zeros_and_keep_upper_half():
    spec = ProcessSpec(0.6, GammaMixture(((0.1, 0.6, 0), (0.1, 1.0, 1))))
    rep = find_strip_zeros(spec, 0.25, 0.59)
    for g, _ in rep.pairs:
        assert g.imag >= 0
        assert abs(g - rep.gamma0) > 1e-8
    d = rep.to_dict()
    assert d["winding_total"] == rep.winding_total


def test_strip_zeros_near_high_order_pole():
    # left edge 0.011 away from a triple pole: phase tracking must not alias
    spec = ProcessSpec(2.868592941589471, GammaMixture(((1.5150835937171094, 0.5629921770044009, 2),
                                                        (0.10918307404901768, 0.8072302555125234, 1))))
    B = 0.98 * 0.5629921770044009
    rep = find_strip_zeros(spec, 0.0, B)
    comp = companion_zeros(spec, 0.0, B, beta_t=rep.strip[1])
    assert rep.winding_total == len(comp)


def test_zero_mean_double_zero():
    spec = ProcessSpec(0.0, Atoms(((-5.0, 0.02), (5.0, 0.02))))
    assert is_zero_mean(spec)
    assert multiplicity_at(spec, 0.0, 0.0) == 2
    rep = find_strip_zeros(spec, 0.0, 1.0)
    assert rep.gamma0_multiplicity == 2


def test_multiplicity_rejects_non_zero(brownian):
    with pytest.raises(ValueError):
        multiplicity_at(brownian, 0.0, 1.0)


def test_count_profile_rows():
    spec = ProcessSpec(0.6, GammaMixture(((0.1, 0.6, 0), (0.1, 1.0, 1))))
    rows = count_profile(spec, [0.0, 0.5, 1.0], 0.59)
    assert [r["theta"] for r in rows] == [0.0, 0.5, 1.0]
    assert rows[0]["changed"] is False
    assert all(r["p"] >= 1 for r in rows)


def test_heavy_tail_is_refused(power_tail):
    with pytest.raises(HypothesisUnverified):
        find_strip_zeros(power_tail, 0.0, 0.5)


def test_zero_locations_are_zeros():
    spec = ProcessSpec(0.5, GammaMixture(((0.05, 0.5, 0), (0.1, 0.9, 0))))
    rep = find_strip_zeros(spec, 0.3, 0.49)
    for z, _ in rep.zeros:
        assert abs(eval_phi(spec, z) - 0.3) < 1e-9
    assert np.isfinite(rep.height)
