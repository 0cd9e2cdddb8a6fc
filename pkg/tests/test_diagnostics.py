import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pxlap.diagnostics import (contraction_check, continuity_check, decay_fit, energy_inequality_ledger,
                               gamma_exponents, max_principle_check, smoothing_bound_check)
from pxlap.dynamics import StepParams, solve_trajectory
from pxlap.errors import HypothesisError, InsufficientTrajectoryError, UnsupportedRegimeError
from pxlap.exponent import ConstantExponent
from pxlap.initial import sine, spike
from pxlap.mesh import build_grid
from pxlap.norms import INF, NormRecord, lp_norm

P2 = ConstantExponent(value=2.0)
P3 = ConstantExponent(value=3.0)


def gamma_oracle(n, r0, r, pm, pp):
    """Exact rational arithmetic for integer inputs."""
    n, r0, pm, pp = map(Fraction, (n, r0, pm, pp))
    d = r0 * pm - 2 * n + n * pm
    if r == INF:
        return n / d, n * pm / (pp * d)
    r = Fraction(r)
    return (r - r0) * n / (r * d), (r - r0) * n * pm / (r * pp * d)


def test_gamma_examples():
    assert gamma_exponents(1, 2, INF, 3, 3) == (1 / 7, 1 / 7)
    assert gamma_exponents(2, 2, INF, 3, 3) == (0.25, 0.25)
    assert gamma_exponents(1, 2, 2, 3, 3) == (0.0, 0.0)
    for args in [(1, 2, 6, 3, 4), (2, 4, 10, 3, 5), (1, 3, INF, 2, 3)]:
        got = gamma_exponents(*args)
        assert got == pytest.approx(tuple(float(x) for x in gamma_oracle(*args)), rel=1e-15)


def test_gamma_gates():
    with pytest.raises(HypothesisError):
        gamma_exponents(2, 2, 4, 1.0, 2.0)
    with pytest.raises(HypothesisError):
        gamma_exponents(2, 2, INF, 2.0, 2.0)
    with pytest.raises(UnsupportedRegimeError):
        gamma_exponents(2, 2, 4, 1.2, 2.0)
    with pytest.raises(ValueError):
        gamma_exponents(1, 2, 1.5, 3, 3)


@settings(max_examples=1000, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(2.0, 20.0), st.one_of(st.just(INF), st.floats(1.0, 50.0)),
       st.floats(0.0, 4.0), st.floats(0.0, 3.0))
def test_gamma_ratio_identity(n, r0, rmul, pm_extra, spread):
    pm = n + 0.01 + pm_extra
    pp = pm + spread
    r = INF if rmul == INF else r0 * rmul
    gm, gp = gamma_exponents(n, r0, r, pm, pp)
    assert gp == pytest.approx(gm * pm / pp, rel=1e-12, abs=1e-300)


def _records(values, r=2.0, dt=0.1):
    return [NormRecord(k * dt, r, v) for k, v in enumerate(values)]


def test_contraction_examples():
    assert contraction_check(_records([0, 0, 0])).passed
    g = build_grid(1, [(0, 1)], 64)
    heat = solve_trajectory(g, sine(g), StepParams(0, 0, 1e-4), P2, 0.02)
    assert contraction_check(heat.norms, 1e-8, r=2.0).passed
    bad = contraction_check(_records([1.0, 0.9, 0.8, 0.95, 0.7]))
    assert not bad.passed
    assert bad.worst_pair[:2] == pytest.approx((0.2, 0.3))
    with pytest.raises(ValueError):
        contraction_check(heat.norms)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=2, max_size=40))
def test_contraction_matches_pairwise(vals):
    res = contraction_check(_records(vals), tol=1e-8)
    brute = all(vals[j] <= vals[i] * (1 + 1e-8) for i in range(len(vals)) for j in range(i + 1, len(vals)))
    assert res.passed == brute


def test_max_principle_check():
    assert max_principle_check(_records([1.0, 1.0, 0.5], r=INF)).passed
    res = max_principle_check(_records([1.0, 1.1, 0.5], r=INF))
    assert not res.passed and res.worst_pair[2] == pytest.approx(0.1)


def test_ledger_zero_and_sparse():
    g = build_grid(1, [(0, 1)], 16)
    z = solve_trajectory(g, g.zeros(), StepParams(0.1, 0, 1e-2), P3, 0.05, dense=True)
    led = energy_inequality_ledger(g, z, P3, 2.0)
    assert led.passed and all(r.deriv_term == r.dissipation == 0 for r in led.rows)
    sparse = solve_trajectory(g, sine(g), StepParams(0.1, 0, 1e-2), P3, 0.05)
    with pytest.raises(InsufficientTrajectoryError):
        energy_inequality_ledger(g, sparse, P3, 2.0)


def test_ledger_heat_identity():
    g = build_grid(1, [(0, 1)], 64)
    tr = solve_trajectory(g, sine(g), StepParams(0, 0, 1e-4), P2, 0.01, dense=True)
    led = energy_inequality_ledger(g, tr, P2, 2.0)
    assert led.passed
    assert all(r.residual <= 0 for r in led.rows)


def test_ledger_r0_4_p3():
    g = build_grid(1, [(0, 1)], 64)
    tr = solve_trajectory(g, sine(g), StepParams(0.1, 0, 1e-4, inner_tol=1e-12), P3, 0.1, dense=True)
    assert len(tr.steps) >= 1000
    assert energy_inequality_ledger(g, tr, P3, 4.0).passed


def test_smoothing_bound_examples():
    g = build_grid(1, [(0, 1)], 64)
    tr = solve_trajectory(g, sine(g), StepParams(0, 0, 1e-3), P3, 0.1, norm_rs=(2.0, INF))
    rep = smoothing_bound_check(tr.norms, 2.0, gamma_exponents(1, 2, 2.0, 3, 3), (1e-3, 0.1), 1, 2, 3, 3)
    assert rep.fitted_c <= lp_norm(g, sine(g), 2) / 2
    heat = solve_trajectory(g, sine(g), StepParams(0, 0, 1e-4), P2, 0.1, norm_rs=(INF,))
    rep = smoothing_bound_check(heat.norms, INF, gamma_exponents(1, 2, INF, 2, 2), (1e-3, 0.1))
    assert math.isfinite(rep.fitted_c) and rep.fitted_c > 0
    with pytest.raises(ValueError):
        smoothing_bound_check(heat.norms, INF, (0.1, 0.1), (0.0, 0.1))


def test_decay_fit_examples():
    t = np.geomspace(1e-3, 1e-1, 30)
    recs = [NormRecord(float(s), 2.0, 3.0 * s ** (-1 / 7)) for s in t]
    slope, r2 = decay_fit(recs, (1e-3, 1e-1))
    assert slope == pytest.approx(-1 / 7, rel=1e-12) and r2 == pytest.approx(1.0, abs=1e-12)
    assert decay_fit([NormRecord(float(s), 2.0, 0.5) for s in t], (1e-3, 1e-1)) == (0.0, 1.0)
    heat = [NormRecord(float(s), 2.0, math.exp(-math.pi**2 * s)) for s in np.linspace(0.01, 0.1, 30)]
    slope, r2 = decay_fit(heat, (0.01, 0.1))
    assert slope < -0.3 and 0 <= r2 <= 1
    with pytest.raises(ValueError):
        decay_fit(recs[:3], (1e-3, 1e-1))


def test_continuity_examples():
    g = build_grid(1, [(0, 1)], 128)
    tr = solve_trajectory(g, sine(g), StepParams(0, 0, 1e-5), P2, 1e-4, dense=True)
    assert continuity_check(g, tr, 2.0, 1e-4, 0.01).passed
    z = solve_trajectory(g, g.zeros(), StepParams(0, 0, 1e-5), P2, 1e-4, dense=True)
    res = continuity_check(g, z, 2.0, 1e-4, 0.01)
    assert res.passed and all(d == 0 for d in res.differences)


def test_continuity_spike_l2_not_linf():
    g = build_grid(1, [(0, 1)], 256)
    u0 = spike(g)
    tr = solve_trajectory(g, u0, StepParams(0, 0, 1e-10), P3, 1e-9, dense=True)
    res = continuity_check(g, tr, 2.0, 1e-9, 0.05)
    assert res.passed
    assert all(b >= a for a, b in zip(res.differences, res.differences[1:]))
    # the sup norm is an order of magnitude above the L2 norm
    assert lp_norm(g, u0, INF) > 9 * lp_norm(g, u0, 2)
