import math

import numpy as np
import pytest

from levy_passage.bounds import (
    check_poly_bound,
    moment_order,
    truncate_below,
    truncation_certificate,
)
from levy_passage.errors import RegimeError
from levy_passage.mc import SimConfig
from levy_passage.measures import Atoms, GammaMixture, PowerTail
from levy_passage.model import ProcessSpec


def test_moment_orders():
    assert moment_order(PowerTail(1.0, 6.0, 1.0)) == pytest.approx(4.99)
    assert moment_order(GammaMixture(((1.0, 1.0, 0),))) == 64


def test_poly_bound_guards(power_tail):
    with pytest.raises(RegimeError):
        check_poly_bound(ProcessSpec(-1.0, PowerTail(1.0, 6.0, 1.0)), 4, [1.0])
    with pytest.raises(ValueError):
        check_poly_bound(power_tail, 1.5, [1.0])
    with pytest.raises(ValueError):
        check_poly_bound(power_tail, 5.0, [1.0])


def test_poly_bound_report(power_tail):
    rep = check_poly_bound(power_tail, 4.0, [1.0, 2.0, 5.0, 10.0], SimConfig(n_paths=20_000, seed=1))
    assert rep.n == 2 and rep.ok
    assert np.all(rep.scaled <= rep.C_n + 1e-15)
    assert not rep.bias_is_bound
    d = rep.to_dict()
    assert len(d["rows"]) == 4 and d["violations"] == []


def test_poly_bound_light_tail(cramer_lundberg):
    cfg = SimConfig(n_paths=20_000, seed=2)
    rep = check_poly_bound(cramer_lundberg, 6.0, [1.0, 3.0, 6.0, 15.0, 30.0], cfg)
    assert rep.ok and rep.bias_is_bound and rep.n == 4
    # x⁴F(x) still rising at the right end of a short grid is flagged
    short = check_poly_bound(cramer_lundberg, 6.0, [1.0, 3.0, 6.0], cfg)
    assert short.violations == (6.0,)


def test_truncate_below():
    m = Atoms(((-3.0, 1.0), (1.0, 1.0)))
    assert truncate_below(m, math.inf) is m
    assert truncate_below(m, 1.0).atoms == ((1.0, 1.0),)
    with pytest.raises(ValueError):
        truncate_below(m, 0.0)


def test_truncation_certificate():
    spec = ProcessSpec(0.5, Atoms(((-3.0, 1.0), (1.0, 1.0))))
    cert = truncation_certificate(spec, 1.0, [0.5, 2.0], SimConfig(n_paths=5000, seed=3))
    assert cert.pathwise and cert.ok
    assert all(a <= b for a, b in zip(cert.F, cert.F_k))
