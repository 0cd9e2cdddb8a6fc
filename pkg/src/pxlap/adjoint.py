"""Frozen-coefficient adjoint runs and the reciprocity identity.

The forward step ``k`` solves ``(I + tau A_k) v^k = v^{k-1}`` where ``A_k`` is
the symmetric operator ``-nu Lap - div(b_k grad .)`` with the coefficient
``b_k = (mu + |grad v^k|^2)^{(p(t_k)-2)/2}`` of the end-of-step state. Adjoint
slab ``j`` (``j = 0 .. M-1``) reuses ``b_{M-j}``, so with ``epsilon = 0`` the
pairings telescope exactly:

    (v^M, phi^0) = (v^0, phi^M) + epsilon * sum_j tau <|grad phi^{j+1}|^{q-2} grad phi^{j+1}, grad v^{M-j}>
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import Trajectory, cell_exponent, minimize_step
from .errors import InsufficientTrajectoryError
from .mesh import Grid, apply_dirichlet, cell_inner, discrete_gradient, inner
from .norms import lp_norm


@dataclass(frozen=True)
class AdjointParams:
    epsilon: float = 0.0
    nu: float = 0.0
    tau: float = 1e-3
    inner_tol: float = 1e-10
    max_inner_iters: int = 200

    def __post_init__(self):
        if self.epsilon < 0 or self.nu < 0:
            raise ValueError("epsilon and nu must be >= 0")
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass
class FrozenCoefficient:
    """Per-slab cell coefficients ``b`` and adjoint exponents ``qbar``.

    ``forward_steps[k]`` is the forward step (= snapshot index) slab ``k`` was built from.
    """

    b: np.ndarray
    qbar: np.ndarray
    forward_steps: list
    tau: float
    t: float

    @property
    def num_slabs(self):
        return self.b.shape[0]


def _dense_fields(forward: Trajectory, t):
    M = forward.step_index(t)
    if not forward.dense or len(forward.fields) < M + 1:
        raise InsufficientTrajectoryError("adjoint runs need every forward step stored (dense storage)")
    return M, forward.fields[: M + 1]


def coefficient_from(grid, v, p_field, mu, t):
    """``(mu + |grad v|^2)^{(p(t)-2)/2}`` on cells."""
    G = discrete_gradient(grid, v)
    s = mu + np.sum(G * G, axis=(-2, -1))
    p = cell_exponent(grid, p_field, t)
    with np.errstate(divide="ignore"):
        b = np.where(p == 2.0, 1.0, np.power(s, 0.5 * (p - 2.0)))
    return b


def freeze_coefficients(grid: Grid, forward: Trajectory, p_field, mu, t) -> FrozenCoefficient:
    M, fields = _dense_fields(forward, t)
    q = lambda tt, x: np.maximum(2.0, p_field(tt, x))  # noqa: E731
    b = np.empty((M,) + grid.cell_shape)
    qbar = np.empty((M,) + grid.cell_shape)
    steps = []
    for k in range(M):
        m = M - k
        tm = m * forward.params.tau
        b[k] = coefficient_from(grid, fields[m], p_field, mu, tm)
        qbar[k] = q(tm, grid.cell_centers)
        steps.append(m)
    return FrozenCoefficient(b, qbar, steps, forward.params.tau, M * forward.params.tau)


def adjoint_step(grid, phi_prev, b_slab, params: AdjointParams, qbar_slab):
    """One implicit step in adjoint time; returns ``(phi, iterations)``."""
    phi_prev = apply_dirichlet(grid, phi_prev)
    tol = params.inner_tol * (1.0 + lp_norm(grid, phi_prev, 2) / params.tau)
    phi, it, _, _ = minimize_step(grid, phi_prev, params.tau, params.nu + np.asarray(b_slab),
                                  params.epsilon, 0.0, qbar_slab, tol, params.max_inner_iters)
    return phi, it


def eps_flux(G, q):
    """``|G|^{q-2} G`` for ``q >= 2``."""
    gsq = np.sum(G * G, axis=(-2, -1))
    a = np.where(q == 2.0, 1.0, np.power(gsq, 0.5 * (q - 2.0)))
    return a[..., None, None] * G


@dataclass
class AdjointRun:
    phis: list  # phi^0 .. phi^M
    frozen: FrozenCoefficient
    params: AdjointParams


def solve_adjoint(grid, frozen: FrozenCoefficient, phi0, params: AdjointParams) -> AdjointRun:
    if not math.isclose(params.tau, frozen.tau, rel_tol=1e-12):
        raise ValueError("adjoint tau must match the forward trajectory")
    phi = apply_dirichlet(grid, phi0)
    phis = [phi]
    for k in range(frozen.num_slabs):
        phi, _ = adjoint_step(grid, phi, frozen.b[k], params, frozen.qbar[k])
        phis.append(phi)
    return AdjointRun(phis, frozen, params)


@dataclass
class ReciprocityReport:
    t: float
    epsilon: float
    nu: float
    mu: float
    residual: float
    term_pairing: float
    term_initial: float
    term_defect: float
    scale: float
    defect_abs_sum: float = 0.0

    @property
    def gap(self):
        """Departure from the exact (epsilon = 0) relation: ``|pairing - initial|``."""
        return abs(self.term_pairing - self.term_initial)

    def to_dict(self):
        d = asdict(self)
        d["gap"] = self.gap
        return d


def reciprocity_terms(grid, forward: Trajectory, run: AdjointRun):
    """``(pairing, initial, defect, sum of |defect contributions|)``."""
    M, fields = _dense_fields(forward, run.frozen.t)
    eps = run.params.epsilon
    pairing = inner(grid, fields[M], run.phis[0])
    initial = inner(grid, fields[0], run.phis[M])
    defect = 0.0
    defect_abs = 0.0
    if eps != 0.0:
        for j in range(M):
            Gphi = discrete_gradient(grid, run.phis[j + 1])
            Gv = discrete_gradient(grid, fields[M - j])
            val = run.params.tau * cell_inner(grid, eps_flux(Gphi, run.frozen.qbar[j]), Gv)
            defect += val
            defect_abs += abs(val)
    return pairing, initial, eps * defect, eps * defect_abs


def reciprocity_residual(grid, forward: Trajectory, phi0, p_field, mu, nu, epsilon,
                         t=None, inner_tol=1e-12, max_inner_iters=200) -> ReciprocityReport:
    """Solve the adjoint from terminal datum ``phi0`` and close the reciprocity identity.

    ``residual = |pairing - initial - defect|`` with
    ``defect = epsilon * sum tau <|grad phi|^{q-2} grad phi, grad v>``.
    """
    t = forward.times[-1] if t is None else t
    frozen = freeze_coefficients(grid, forward, p_field, mu, t)
    params = AdjointParams(epsilon, nu, forward.params.tau, inner_tol, max_inner_iters)
    run = solve_adjoint(grid, frozen, phi0, params)
    pairing, initial, defect, defect_abs = reciprocity_terms(grid, forward, run)
    M, fields = _dense_fields(forward, t)
    scale = max(lp_norm(grid, fields[0], 2), lp_norm(grid, fields[M], 2)) * lp_norm(grid, run.phis[0], 2)
    return ReciprocityReport(frozen.t, epsilon, nu, mu, abs(pairing - initial - defect),
                             pairing, initial, defect, scale, defect_abs)


@dataclass
class DualityReport:
    t: float
    r0: float
    epsilon: float
    u0_norm: float
    vt_norm: float
    max_pairing: float
    tol: float
    passed: bool
    probes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def duality_norm_bound(grid, forward: Trajectory, p_field, mu, nu, r0, probe_count=20, rng_seed=0,
                       epsilon=0.0, t=None, inner_tol=1e-12, frozen=None) -> DualityReport:
    """Bound ``(v(t), phi)`` over random probes with ``||phi||_{r0'} = 1`` by ``||u_0||_{r0}``.

    Each pairing is evaluated through the adjoint side of the reciprocity
    identity, ``(v(0), phi(t)) + defect``.
    """
    if not 2.0 <= r0 < math.inf:
        raise ValueError("r0 must lie in [2, inf)")
    t = forward.times[-1] if t is None else t
    if frozen is None:
        frozen = freeze_coefficients(grid, forward, p_field, mu, t)
    params = AdjointParams(epsilon, nu, forward.params.tau, inner_tol)
    rc = r0 / (r0 - 1.0)
    rng = np.random.default_rng(rng_seed)
    M, fields = _dense_fields(forward, t)
    u0n = lp_norm(grid, fields[0], r0)
    probes = []
    worst_defect = 0.0
    for i in range(probe_count):
        phi0 = apply_dirichlet(grid, rng.standard_normal(grid.field_shape))
        phi0 /= lp_norm(grid, phi0, rc)
        run = solve_adjoint(grid, frozen, phi0, params)
        pairing, initial, defect, _ = reciprocity_terms(grid, forward, run)
        value = initial + defect
        worst_defect = max(worst_defect, abs(defect))
        probes.append({"probe": i, "pairing_rhs": value, "pairing_direct": pairing,
                       "defect": defect})
    best = max(p["pairing_rhs"] for p in probes) if probes else 0.0
    tol = 1e-6 + (worst_defect / u0n if u0n > 0 else worst_defect)
    passed = best <= u0n * (1.0 + tol) + (0.0 if u0n > 0 else tol)
    return DualityReport(frozen.t, r0, epsilon, u0n, lp_norm(grid, fields[M], r0), best, tol,
                         bool(passed), probes)
