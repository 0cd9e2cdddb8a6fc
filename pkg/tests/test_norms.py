import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pxlap.dynamics import StepParams, solve_trajectory
from pxlap.exponent import AffineExponent, ConstantExponent, SinusoidExponent
from pxlap.initial import sine
from pxlap.mesh import build_grid
from pxlap.norms import INF, NormRecord, lp_norm, luxemburg_norm, modular, norm_trajectory, records_for


def lux_root_oracle(b):
    """Root of int_0^b lam^-(2+x) dx = lam^-2 (1 - lam^-b) / ln lam = 1, in 40 digits.

    For b = 1 the root is lam = 1 (removable 0/0); it is approached from below.
    The closed form is cross-checked against direct quadrature.
    """
    mpmath.mp.dps = 40
    closed = lambda lam: lam**-2 * (1 - lam**-b) / mpmath.log(lam) - 1  # noqa: E731
    if b == 1:
        root = mpmath.findroot(closed, (mpmath.mpf("0.3"), mpmath.mpf("0.99")), solver="anderson")
    else:
        root = mpmath.findroot(closed, mpmath.mpf("1.2"))
        quad = mpmath.quad(lambda x: root ** -(2 + x), [0, b])
        assert abs(quad - 1) < mpmath.mpf(10) ** -30
    return float(root)


def test_lp_norm_examples():
    g2 = build_grid(2, [(0, 1), (0, 1)], (4, 4))
    assert lp_norm(g2, g2.zeros(), 2) == 0.0
    assert lp_norm(g2, np.ones(g2.field_shape), 2) == pytest.approx(1.0)
    g = build_grid(1, [(0, 1)], 4, 2)
    f = np.tile([3.0, 4.0], (5, 1))
    assert lp_norm(g, f, INF) == 5.0


def test_modular_examples():
    g = build_grid(1, [(0, 1)], 4096)
    assert modular(g, g.zeros(), ConstantExponent(value=3.0)) == 0.0
    assert modular(g, np.ones(g.field_shape), ConstantExponent(value=2.0)) == pytest.approx(1.0)
    q = AffineExponent(base=2.0, coeffs=(1.0,))
    assert modular(g, np.full(g.field_shape, 2.0), q) == pytest.approx(4 / math.log(2), rel=1e-7)


@pytest.mark.parametrize("b", [1, 2])
def test_luxemburg_variable_exponent_oracle(b):
    lam = lux_root_oracle(b)
    g = build_grid(1, [(0, b)], 8192)
    q = AffineExponent(base=2.0, coeffs=(1.0,), extents=((0.0, float(b)),))
    got = luxemburg_norm(g, np.ones(g.field_shape), q, tol=1e-13)
    assert got == pytest.approx(lam, rel=1e-8)


def test_luxemburg_zero():
    g = build_grid(1, [(0, 1)], 8)
    assert luxemburg_norm(g, g.zeros(), ConstantExponent(value=3.0)) == 0.0


def _random_field(seed, n=2, N=1):
    rng = np.random.default_rng(seed)
    g = build_grid(n, [(0, 1), (0, 2)][:n], (6, 5)[:n], N)
    return g, rng.standard_normal(g.field_shape) * rng.uniform(0.01, 100)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.1, 8.0))
def test_constant_exponent_collapse(seed, r):
    g, f = _random_field(seed, N=2)
    lux = luxemburg_norm(g, f, ConstantExponent(value=r, extents=((0, 1), (0, 2))))
    assert abs(lux - lp_norm(g, f, r)) <= 1e-8 * lp_norm(g, f, r)


var_q = SinusoidExponent(base=2.5, amplitude=0.9, freq_x=(1.0, 0.5), extents=((0, 1), (0, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3).filter(lambda a: abs(a) > 1e-3))
def test_luxemburg_homogeneous(seed, alpha):
    g, f = _random_field(seed)
    tol = 1e-10
    a = luxemburg_norm(g, alpha * f, var_q, tol=tol)
    b = abs(alpha) * luxemburg_norm(g, f, var_q, tol=tol)
    assert abs(a - b) <= 2 * tol * max(a, b) * 1.0001


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_luxemburg_unit_ball(seed):
    g, f = _random_field(seed)
    tol = 1e-10
    lam = luxemburg_norm(g, f, var_q, tol=tol)
    q_plus = 2.5 + 0.9
    assert modular(g, f / lam, var_q) == pytest.approx(1.0, abs=2 * q_plus * tol)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.5, INF]))
def test_lp_norm_monotone(seed, r):
    rng = np.random.default_rng(seed)
    g = build_grid(2, [(0, 1), (0, 1)], (5, 5))
    f = rng.standard_normal(g.field_shape)
    bigger = f * (1 + rng.random(g.field_shape))
    assert lp_norm(g, f, r) <= lp_norm(g, bigger, r)


def test_norm_trajectory_ordering_and_heat():
    g = build_grid(1, [(0, 1)], 64)
    p = ConstantExponent(value=2.0)
    traj = solve_trajectory(g, sine(g), StepParams(0, 0, 1e-4), p, 0.02, snapshot_times=(0.01,))
    recs = norm_trajectory(g, traj, [INF, 2.0])
    keys = [(r.t, r.r) for r in recs]
    assert keys == sorted(keys)
    t, v = records_for(recs, 2.0)
    assert np.allclose(v, np.exp(-np.pi**2 * t) * v[0], rtol=5e-3)
    zero = solve_trajectory(g, g.zeros(), StepParams(0, 0, 1e-2), p, 0.02)
    assert all(r.value == 0 for r in norm_trajectory(g, zero, [2.0, INF]))


def test_norm_record_is_ordered():
    assert NormRecord(0.0, 2.0, 1.0) < NormRecord(0.1, 2.0, 0.5)
