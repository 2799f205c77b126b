import math

import numpy as np
import pytest
from scipy import integrate

from levy_passage.measures import (
    Atoms,
    CompactDensity,
    GammaMixture,
    PowerTail,
    measure_sum,
)


def _c(v) -> complex:
    return complex(np.asarray(v).ravel()[0])


def _quad_transform(density, q, a, b):
    # reference ∫(e^{-qy} - 1 + q y 1{|y|<1}) ν(dy) by adaptive quadrature
    def f(y):
        return (math.exp(-q * y) - 1 + q * y * (abs(y) < 1)) * density(y)

    pts = [p for p in (-1.0, 1.0) if a < p < b]
    return integrate.quad(f, a, b, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12)[0]


def test_gamma_mixture_transform_matches_quadrature():
    m = GammaMixture(((0.7, 1.5, 0), (0.3, 2.0, 2)))
    dens = lambda y: float(m.density(np.array([y]))[0])  # noqa: E731
    for q in (-0.7, 0.3, 1.2):
        ref = _quad_transform(dens, q, 0.0, 80.0)
        assert _c(m.comp_integral(q)).real == pytest.approx(ref, abs=1e-9)


def test_gamma_mixture_poles_and_masses():
    m = GammaMixture(((0.7, 1.5, 0), (0.3, 2.0, 2)))
    # density ρ y^m e^{-βy}: mass ρ m!/β^{m+1}
    assert m.masses() == pytest.approx([0.7 / 1.5, 0.3 * 2 / 8])
    assert sorted((p.real, o) for p, o in m.poles()) == [(-2.0, 3), (-1.5, 1)]
    assert m.r_nu() == pytest.approx(1.5)
    assert m.spectrally_positive


def test_atoms_transform_closed_form():
    m = Atoms(((-0.5, 0.2), (2.0, 0.5)))
    q = 0.4
    ref = 0.2 * (math.exp(0.2) - 1 - 0.2) + 0.5 * (math.exp(-0.8) - 1)
    assert _c(m.comp_integral(q)).real == pytest.approx(ref, rel=1e-13)
    assert not m.spectrally_positive
    assert m.neg_support_lower() == pytest.approx(-0.5)


def test_atoms_reject_bad_input():
    with pytest.raises(ValueError):
        Atoms(((1.0, -0.1),))
    with pytest.raises(ValueError):
        Atoms(((0.0, 1.0),))


def test_compact_density_transform_matches_quadrature():
    m = CompactDensity((-2.0, 0.0, 2.0), ((0.2, 0.1), (0.2, -0.1)))
    dens = lambda y: float(m.density(np.array([y]))[0])  # noqa: E731
    for q in (-0.5, 0.8):
        ref = _quad_transform(dens, q, -2.0, 2.0)
        assert _c(m.comp_integral(q)).real == pytest.approx(ref, abs=1e-10)


def test_power_tail_moment_order_and_masses():
    m = PowerTail(1.0, 6.0, 1.0)
    assert m.total_mass() == pytest.approx(1.0 / 5.0)
    assert m.moment_order() == pytest.approx(5.0)
    assert m.tail_pos(np.array([2.0]))[0] == pytest.approx(2.0**-5 / 5.0)


def test_tail_and_sample_above_agree(rng):
    m = GammaMixture(((1.0, 1.0, 1),))
    lv = np.full(20000, 0.5)
    s = m.sample_above(lv, rng)
    assert np.all(s > 0.5)
    # conditional survival P(S > 2 | S > 0.5) from the tail
    ref = m.tail_pos(np.array([2.0]))[0] / m.tail_pos(np.array([0.5]))[0]
    assert np.mean(s > 2.0) == pytest.approx(ref, abs=0.015)


def test_measure_sum_adds_components():
    a = GammaMixture(((0.5, 1.5, 1),))
    b = Atoms(((-0.5, 0.3),))
    s = measure_sum([a, b])
    q = 0.25
    assert _c(s.comp_integral(q)) == pytest.approx(
        _c(a.comp_integral(q)) + _c(b.comp_integral(q))
    )
    assert s.total_mass() == pytest.approx(a.total_mass() + 0.3)


def test_truncate_below_removes_deep_jumps():
    m = Atoms(((-3.0, 1.0), (-0.5, 0.2), (1.0, 0.5)))
    t = m.truncate_below(1.0)
    assert t.neg_support_lower() == pytest.approx(-0.5)
