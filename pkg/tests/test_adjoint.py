import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_banded

from pxlap.adjoint import (AdjointParams, adjoint_step, coefficient_from, duality_norm_bound,
                           freeze_coefficients, reciprocity_residual)
from pxlap.dynamics import StepParams, solve_trajectory
from pxlap.errors import InsufficientTrajectoryError
from pxlap.exponent import ConstantExponent, SinusoidExponent
from pxlap.initial import random as random_field, sine
from pxlap.mesh import apply_dirichlet, build_grid
from pxlap.norms import INF, lp_norm

P2 = ConstantExponent(value=2.0)
P3 = ConstantExponent(value=3.0)


def _forward(g, u0, p, mu, nu, tau=1e-3, T=0.02):
    return solve_trajectory(g, u0, StepParams(mu, nu, tau, inner_tol=1e-12), p, T, dense=True)


def test_coefficient_examples():
    g = build_grid(2, [(0, 1), (0, 1)], (5, 5))
    p3 = ConstantExponent(value=3.0, extents=g.extents)
    assert np.allclose(coefficient_from(g, g.zeros(), p3, 0.25, 0.0), 0.5)
    v = random_field(g, 1)
    p2 = ConstantExponent(value=2.0, extents=g.extents)
    assert np.all(coefficient_from(g, v, p2, 0.7, 0.0) == 1.0)


def test_slabs_reverse_the_forward_snapshots():
    g = build_grid(1, [(0, 1)], 32)
    p = SinusoidExponent(base=2.6, amplitude=0.4, freq_t=5.0, horizon=0.02)
    fwd = _forward(g, sine(g), p, 0.1, 1e-3)
    fr = freeze_coefficients(g, fwd, p, 0.1, 0.02)
    M = len(fwd.steps)
    assert fr.num_slabs == M and fr.forward_steps == list(range(M, 0, -1))
    for k in range(M):
        want = coefficient_from(g, fwd.fields[M - k], p, 0.1, (M - k) * 1e-3)
        assert np.array_equal(fr.b[k], want)
        assert np.array_equal(fr.qbar[k], np.maximum(2.0, p((M - k) * 1e-3, g.cell_centers)))


def test_adjoint_needs_dense_trajectory():
    g = build_grid(1, [(0, 1)], 16)
    sparse = solve_trajectory(g, sine(g), StepParams(0.1, 0, 1e-2), P3, 0.05)
    with pytest.raises(InsufficientTrajectoryError):
        freeze_coefficients(g, sparse, P3, 0.1, 0.05)


def test_adjoint_step_examples():
    g = build_grid(1, [(0, 1)], 64)
    prm = AdjointParams(epsilon=0.0, nu=0.0, tau=1e-3, inner_tol=1e-13)
    b = np.ones(g.cell_shape)
    q = np.full(g.cell_shape, 2.0)
    phi, _ = adjoint_step(g, g.zeros(), b, prm, q)
    assert np.all(phi == 0)
    u = sine(g)
    phi, _ = adjoint_step(g, u, b, prm, q)
    h, k = g.h[0], g.resolution[0] - 1
    ab = np.zeros((3, k))
    ab[0, 1:] = ab[2, :-1] = -prm.tau / h**2
    ab[1] = 1 + 2 * prm.tau / h**2
    assert np.abs(phi[1:-1, 0] - solve_banded((1, 1), ab, u[1:-1, 0])).max() <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 1e-3, 1e-1]), st.sampled_from([1, 2]))
def test_adjoint_step_contracts(seed, eps, n):
    rng = np.random.default_rng(seed)
    g = build_grid(n, [(0, 1)] * n, (9,) * n)
    b = rng.uniform(0.05, 3.0, g.cell_shape)
    q = rng.uniform(2.0, 4.0, g.cell_shape)
    phi0 = random_field(g, seed)
    phi, _ = adjoint_step(g, phi0, b, AdjointParams(eps, 1e-3, 1e-2, 1e-12), q)
    assert lp_norm(g, phi, 2) <= lp_norm(g, phi0, 2) * (1 + 1e-12)
    assert lp_norm(g, phi, INF) <= lp_norm(g, phi0, INF) + 1e-8


def test_reciprocity_zero_forward():
    g = build_grid(1, [(0, 1)], 16)
    fwd = _forward(g, g.zeros(), P3, 0.1, 1e-3, tau=1e-2, T=0.05)
    rep = reciprocity_residual(g, fwd, sine(g), P3, 0.1, 1e-3, 1e-2)
    assert rep.term_pairing == rep.term_initial == rep.term_defect == rep.residual == 0.0


@pytest.mark.parametrize("n", [1, 2])
def test_reciprocity_exact_for_heat(n):
    g = build_grid(n, [(0, 1)] * n, (24,) * n)
    p = ConstantExponent(value=2.0, extents=g.extents)
    fwd = _forward(g, sine(g), p, 0.0, 0.0)
    rep = reciprocity_residual(g, fwd, random_field(g, 3), p, 0.0, 0.0, 0.0)
    assert rep.residual <= 1e-8 * rep.scale


def test_reciprocity_sweep_and_defect_bound():
    g = build_grid(1, [(0, 1)], 48)
    fwd = _forward(g, sine(g), P3, 0.1, 1e-3, T=0.05)
    reps = [reciprocity_residual(g, fwd, sine(g), P3, 0.1, 1e-3, e) for e in (1e-2, 1e-3, 1e-4)]
    gaps = [r.gap for r in reps]
    assert gaps[0] > gaps[1] > gaps[2]
    for r in reps:
        assert r.gap <= r.defect_abs_sum + 2e-10 * r.scale
        assert r.residual <= 1e-8 * r.scale


def test_duality_examples():
    g = build_grid(1, [(0, 1)], 32)
    fwd = _forward(g, g.zeros(), P3, 0.1, 1e-3, tau=1e-2, T=0.05)
    rep = duality_norm_bound(g, fwd, P3, 0.1, 1e-3, 2.0, probe_count=5)
    assert rep.passed and all(pr["pairing_rhs"] == 0 for pr in rep.probes)

    fwd = _forward(g, sine(g), P2, 0.0, 0.0, tau=1e-3, T=0.05)
    rep = duality_norm_bound(g, fwd, P2, 0.0, 0.0, 2.0, probe_count=20)
    assert rep.passed
    assert rep.max_pairing <= rep.vt_norm * (1 + 1e-9)
    assert rep.vt_norm == pytest.approx(np.exp(-np.pi**2 * 0.05) * rep.u0_norm, rel=0.01)


def test_duality_random_exponent():
    g = build_grid(2, [(0, 1), (0, 1)], (10, 10))
    p = SinusoidExponent(base=2.5, amplitude=0.8, freq_x=(1.0, 2.0), freq_t=4.0, extents=g.extents, horizon=0.02)
    fwd = _forward(g, random_field(g, 9), p, 0.1, 1e-3)
    for r0 in (2.0, 4.0):
        rep = duality_norm_bound(g, fwd, p, 0.1, 1e-3, r0, probe_count=20, epsilon=1e-3)
        assert rep.passed, rep.to_dict()


def test_adjoint_params_validate():
    with pytest.raises(ValueError):
        AdjointParams(epsilon=-1.0)
    with pytest.raises(ValueError):
        AdjointParams(tau=0.0)


def test_adjoint_preserves_dirichlet():
    g = build_grid(2, [(0, 1), (0, 1)], (6, 6))
    phi, _ = adjoint_step(g, np.ones(g.field_shape), np.ones(g.cell_shape), AdjointParams(tau=1e-2),
                          np.full(g.cell_shape, 2.0))
    assert np.all(phi[~g.interior] == 0) and np.array_equal(apply_dirichlet(g, phi), phi)
