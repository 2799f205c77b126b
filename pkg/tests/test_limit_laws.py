import math

import numpy as np
import pytest
from scipy import stats

from levy_passage.errors import NoNegativeZero, TwoSidedUnsupported, WrongRegime, ZeroMean
from levy_passage.limit_laws import (
    gaussian_limit,
    hitting_law_rho,
    jump_size_limit_w0,
    ks_2d,
    ks_2d_test,
    ks_critical_1d,
    nu_integral,
    overshoot_law,
    rho_cdf,
    sample_overshoot_law,
    sup_distance,
)
from levy_passage.measures import NO_JUMPS, Atoms, GammaMixture, PowerTail
from levy_passage.model import ProcessSpec, phi_second_at_zero

NEG = ProcessSpec(3.0, GammaMixture(((1.0, 1.0, 0),)))
POS = ProcessSpec(-0.5, GammaMixture(((1.0, 1.0, 1),)))
ZERO = ProcessSpec(2 / math.e, GammaMixture(((1.0, 1.0, 0),)))


def test_brownian_inverse_gaussian_limit():
    # T_x ~ IG(x, x²) for unit BM with drift +1
    lim = gaussian_limit(ProcessSpec(-1.0, NO_JUMPS))
    assert lim.regime == "positive"
    assert lim.shift == pytest.approx(-1.0) and lim.variance == pytest.approx(1.0)
    assert lim.normalize(np.array([104.0]), 100.0)[0] == pytest.approx(0.4)


def test_negative_regime_limit_uses_gamma0():
    lim = gaussian_limit(NEG)
    # φ is decreasing at -γ₀, so the shift is negative: T ≈ x/|φ'(-γ₀)|
    assert lim.regime == "negative" and lim.gamma > 0
    assert lim.shift < 0 and lim.variance > 0


def test_zero_mean_time_law():
    with pytest.raises(ZeroMean):
        gaussian_limit(ZERO)
    v = phi_second_at_zero(ZERO)
    assert hitting_law_rho(ZERO, 1.0) == pytest.approx(math.exp(-math.sqrt(2 / v)))
    # ϱ is the first time a standard BM reaches v^{-1/2}
    s = np.array([0.5, 2.0])
    ref = stats.levy.cdf(s, scale=1 / v)
    assert np.allclose(rho_cdf(ZERO, s), ref)
    with pytest.raises(WrongRegime):
        hitting_law_rho(NEG, 1.0)
    with pytest.raises(ValueError):
        hitting_law_rho(ZERO, -1.0)


@pytest.mark.parametrize("spec", [NEG, POS, ZERO], ids=["negative", "positive", "zero"])
def test_overshoot_law_is_a_probability(spec):
    law = overshoot_law(spec)
    assert 0 < law.atom < 1
    assert law.total_mass() == pytest.approx(1.0, abs=1e-10)
    assert float(law.l_cdf(np.array([1e4]))[0]) == pytest.approx(1.0, abs=1e-8)


def test_atom_formula_negative_regime():
    law = overshoot_law(NEG)
    from levy_passage.model import mean_x1
    from levy_passage.zeros import find_real_zeros

    g0 = find_real_zeros(NEG)[0]
    assert law.atom == pytest.approx(-g0 / (2 * mean_x1(NEG)))


def test_overshoot_regime_and_support_guards():
    with pytest.raises(WrongRegime):
        overshoot_law(NEG, regime="positive")
    with pytest.raises(TwoSidedUnsupported):
        overshoot_law(ProcessSpec(1.0, Atoms(((-0.5, 0.2), (1.0, 0.5)))))


def test_atomic_measure_law_mass():
    law = overshoot_law(ProcessSpec(2.0, Atoms(((0.5, 0.3), (2.0, 0.2)))))
    assert law.total_mass() == pytest.approx(1.0, abs=1e-9)


def test_heavy_tail_has_no_exponential_law():
    with pytest.raises(NoNegativeZero):
        overshoot_law(ProcessSpec(1.25, PowerTail(1.0, 6.0, 1.0)))


def test_sup_distance_with_atom():
    z = np.array([0.0, 0.0, 1.0, 2.0])
    cdf = lambda v: np.where(v < 0, 0.0, 0.5 + 0.25 * np.minimum(v, 2.0))  # noqa: E731
    assert sup_distance(z, cdf) == pytest.approx(0.25)
    assert sup_distance(np.array([0.5]), lambda v: np.clip(v, 0, 1)) == pytest.approx(0.5)


def test_nu_integral_gamma():
    m = GammaMixture(((2.0, 1.5, 1),))
    # ∫ y · 2 y e^{-1.5y} dy = 4/1.5³
    assert nu_integral(m, lambda y: y) == pytest.approx(4 / 1.5**3, rel=1e-10)


def test_sampler_reproduces_law():
    law = overshoot_law(NEG)
    k, l = sample_overshoot_law(law, 40_000, rng_seed=3)
    atom = np.mean((k == 0) & (l == 0))
    assert abs(atom - law.atom) < 4 * math.sqrt(law.atom * (1 - law.atom) / k.size)
    assert np.all(k >= 0) and np.all(l >= 0)
    d = sup_distance(l, law.l_cdf)
    assert d < ks_critical_1d(k.size, 0.001)


def test_w0_pushforward_and_laplace():
    w0 = jump_size_limit_w0(NEG)
    assert w0.laplace(0.0) == pytest.approx(1.0, abs=1e-9)
    law = overshoot_law(NEG)
    k, l = sample_overshoot_law(law, 40_000, rng_seed=5)
    s = k + l
    for v in (0.5, 2.0):
        assert np.mean(s <= v) == pytest.approx(float(w0.cdf(np.array([v]))[0]), abs=0.01)
    with pytest.raises(WrongRegime):
        jump_size_limit_w0(POS)


def test_ks2d_same_law_passes():
    law = overshoot_law(NEG)
    k, l = sample_overshoot_law(law, 2000, rng_seed=11)
    res = ks_2d_test(k, l, law, n_rep=30, seed=2, n_eval=150)
    assert res.passed and 0 < res.critical < 1


def test_ks2d_detects_shift(rng):
    a = rng.normal(size=(2000, 2))
    b = rng.normal(size=(2000, 2)) + [0.3, 0.0]
    assert ks_2d(a, b) > ks_2d(a, rng.normal(size=(2000, 2)))


def test_ks_critical_value():
    assert ks_critical_1d(100_000) == pytest.approx(1.628 / math.sqrt(100_000), rel=1e-3)


def test_mass_with_slowly_decaying_density():
    # γ₀ close to β: e^{γl} and e^{-βl} over/underflow separately past l ≈ 700
    spec = ProcessSpec(2.0, GammaMixture(((0.03125, 1.0, 0),)))
    law = overshoot_law(spec)
    exact = law.atom + law.norm * 0.03125 * law.gamma / (1 - law.gamma)
    assert exact == pytest.approx(1.0, abs=1e-12)
    assert law.total_mass() == pytest.approx(1.0, abs=1e-10)
