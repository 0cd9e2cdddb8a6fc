"""Regularised flux, per-step convex energy and the implicit Euler stepper.

One time step of ``v_t - nu Lap v - div((mu + |grad v|^2)^{(p-2)/2} grad v) = 0``
is the minimiser of

    J(w) = |w - u_prev|^2 / (2 tau) + nu/2 |grad w|^2 + (mu + |grad w|^2)^{p/2} / p

integrated over the grid, with ``p`` frozen at the end of the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import kernels
from .errors import ConvergenceError, NumericError, SingularFluxError
from .mesh import (Grid, _vals, apply_dirichlet, discrete_divergence, discrete_gradient,
                   gradient_matrix, integrate)
from .norms import INF, NormRecord, lp_norm


@dataclass(frozen=True)
class StepParams:
    mu: float = 0.0
    nu: float = 0.0
    tau: float = 1e-3
    inner_tol: float = 1e-10
    max_inner_iters: int = 200

    def __post_init__(self):
        if not 0.0 <= self.mu < 1.0:
            raise ValueError("mu must lie in [0, 1)")
        if self.nu < 0.0:
            raise ValueError("nu must be >= 0")
        if not self.tau > 0.0 or not self.inner_tol > 0.0:
            raise ValueError("tau and inner_tol must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")

    def check_exponent(self, p_minus):
        if self.mu == 0.0 and p_minus < 2.0:
            raise ValueError(f"mu = 0 requires p_minus >= 2 (got {p_minus}); "
                             "the flux is singular at zero gradient")


class StepStats(NamedTuple):
    step: int
    t: float
    inner_iters: int
    grad_norm: float
    energy: float


def flux(mu, G, p):
    """``(mu + |G|^2)^{(p-2)/2} G`` with ``|G|`` the Frobenius modulus of the last two axes."""
    G = np.asarray(G, dtype=float)
    gsq = np.sum(G * G, axis=(-2, -1))
    p = np.broadcast_to(np.asarray(p, dtype=float), gsq.shape)
    s = mu + gsq
    if np.any((s == 0.0) & (p < 2.0)):
        raise SingularFluxError("flux is singular at zero gradient for p < 2 and mu = 0")
    with np.errstate(divide="ignore"):
        a = np.where(s > 0.0, np.power(np.where(s > 0.0, s, 1.0), 0.5 * (p - 2.0)),
                     np.where(p == 2.0, 1.0, 0.0))
    return a[..., None, None] * G


def cell_exponent(grid: Grid, p_field, t):
    return np.asarray(p_field(t, grid.cell_centers), dtype=float)


class _Energy:
    """Energy ``mass + 1/2 lin |G|^2 + weight (mu + |G|^2)^{p/2}/p`` over cells."""

    def __init__(self, grid, u_prev, tau, lin, weight, mu, p_cells):
        self.grid = grid
        self.u_prev = u_prev
        self.tau = tau
        self.lin = np.broadcast_to(np.asarray(lin, dtype=float), grid.cell_shape)
        self.weight = float(weight)
        self.mu = float(mu)
        self.p = np.ascontiguousarray(np.broadcast_to(p_cells, grid.cell_shape), dtype=float)
        self.inner = grid.interior
        self.fast = grid.n == 1 and grid.N == 1

    def evaluate(self, w):
        """Energy, nodal gradient (zero on the boundary) and the per-cell pieces."""
        grid = self.grid
        G = discrete_gradient(grid, w)
        gsq = np.sum(G * G, axis=(-2, -1))
        if self.weight != 0.0:
            a, c, e = kernels.coefficients(gsq, self.p, self.mu)
            if not np.all(np.isfinite(a)):
                raise SingularFluxError("flux coefficient is singular (mu = 0, p < 2, zero gradient)")
        else:
            a = c = e = np.zeros_like(gsq)
        diff = w - self.u_prev
        mass = integrate(grid, np.sum(diff * diff, axis=-1)) / (2.0 * self.tau)
        vol = grid.cell_volume
        energy = (mass + 0.5 * vol * float(np.sum(self.lin * gsq))
                  + self.weight * vol * float(np.sum(e)))
        if not math.isfinite(energy):
            raise NumericError("step energy is not finite")
        coef = self.lin + self.weight * a
        g = diff / self.tau - discrete_divergence(grid, coef[..., None, None] * G)
        g[~self.inner] = 0.0
        return energy, g, (G, gsq, a, c)

    def grad_norm(self, g):
        return math.sqrt(integrate(self.grid, np.sum(g * g, axis=-1)))

    def newton_direction(self, g, pieces):
        grid = self.grid
        G, gsq, a, c = pieces
        vol = grid.cell_volume
        W = grid.node_weights[self.inner]
        rhs = -(W[..., None] * g[self.inner]).ravel()
        if self.fast:
            (h,) = grid.h
            s = vol * (self.lin + self.weight * (a + c * gsq)) / (h * h)
            diag = W / self.tau + s[:-1] + s[1:]
            off = -s[1:-1]
            x = kernels.thomas(np.ascontiguousarray(off), np.ascontiguousarray(diag),
                               np.ascontiguousarray(off), np.ascontiguousarray(rhs))
        else:
            nN = grid.n * grid.N
            gv = G.reshape(-1, nN)
            blocks = ((self.lin + self.weight * a).ravel()[:, None, None] * np.eye(nN)
                      + (self.weight * c).ravel()[:, None, None] * gv[:, :, None] * gv[:, None, :])
            blocks *= vol
            ncell = grid.num_cells
            S = sp.bsr_matrix((blocks, np.arange(ncell), np.arange(ncell + 1)),
                              shape=(ncell * nN, ncell * nN))
            Gm = gradient_matrix(grid)
            mass = np.repeat(W.ravel() / self.tau, grid.N)
            H = (Gm.T @ (S @ Gm)).tocsc() + sp.diags(mass, format="csc")
            x = spsolve(H, rhs)
        d = np.zeros_like(g)
        d[self.inner] = x.reshape(-1, grid.N)
        return d, float(-(rhs @ x))


def minimize_step(grid, u_prev, tau, lin, weight, mu, p_cells, tol, max_iters):
    """Damped Newton on the strictly convex step energy, started at ``u_prev``.

    Returns ``(w, iterations, grad_norm, energy)``. The Armijo test is relaxed
    only when the energy change is at rounding level and the gradient norm
    still decreases.
    """
    prob = _Energy(grid, u_prev, tau, lin, weight, mu, p_cells)
    w = u_prev.copy()
    J, g, pieces = prob.evaluate(w)
    gn = prob.grad_norm(g)
    it = 0
    while gn > tol:
        if it >= max_iters:
            raise ConvergenceError(f"inner solver: {max_iters} iterations, gradient norm {gn:.3e} > {tol:.3e}",
                                   iterate=w, residual=gn)
        d, slope = prob.newton_direction(g, pieces)
        step = 1.0
        for _ in range(60):
            w_try = w + step * d
            J_try, g_try, pieces_try = prob.evaluate(w_try)
            gn_try = prob.grad_norm(g_try)
            if J_try <= J - 1e-4 * step * slope:
                break
            if abs(J_try - J) <= 64 * np.finfo(float).eps * max(abs(J), 1.0) and gn_try < gn:
                break
            step *= 0.5
        else:
            raise ConvergenceError(f"line search failed, gradient norm {gn:.3e}", iterate=w, residual=gn)
        w, J, g, pieces, gn = w_try, J_try, g_try, pieces_try, gn_try
        it += 1
    return w, it, gn, J


def step_tolerance(grid, u_prev, params: StepParams):
    return params.inner_tol * (1.0 + lp_norm(grid, u_prev, 2) / params.tau)


def step_energy(grid, w, u_prev, params: StepParams, p_field, t_next) -> float:
    prob = _Energy(grid, _vals(grid, u_prev), params.tau, params.nu, 1.0, params.mu,
                   cell_exponent(grid, p_field, t_next))
    return prob.evaluate(_vals(grid, w))[0]


def step_energy_gradient(grid, w, u_prev, params: StepParams, p_field, t_next) -> np.ndarray:
    """Nodal gradient of :func:`step_energy` for the trapezoid pairing; zero on the boundary."""
    prob = _Energy(grid, _vals(grid, u_prev), params.tau, params.nu, 1.0, params.mu,
                   cell_exponent(grid, p_field, t_next))
    return prob.evaluate(_vals(grid, w))[1]


def _step(grid, u_prev, params, p_field, t_next):
    u_prev = apply_dirichlet(grid, u_prev)
    return minimize_step(grid, u_prev, params.tau, params.nu, 1.0, params.mu,
                         cell_exponent(grid, p_field, t_next),
                         step_tolerance(grid, u_prev, params), params.max_inner_iters)


def implicit_step(grid, u_prev, params: StepParams, p_field, t_next) -> np.ndarray:
    params.check_exponent(p_field.p_minus)
    return _step(grid, _vals(grid, u_prev), params, p_field, t_next)[0]


@dataclass
class Trajectory:
    """Stored snapshots plus per-step statistics and norm records.

    ``norms`` holds records for every step (not only stored snapshots) for the
    exponents requested at solve time.
    """

    grid: Grid
    params: StepParams
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    dense: bool = False
    status: str = "complete"
    message: str = ""

    @property
    def final(self):
        return self.fields[-1]

    def step_index(self, t):
        return int(round(t / self.params.tau))

    def at(self, t):
        k = self.step_index(t)
        for tt, u in zip(self.times, self.fields):
            if self.step_index(tt) == k:
                return u
        raise KeyError(f"no snapshot stored at t={t}")


def solve_trajectory(grid, u0, params: StepParams, p_field, T, snapshot_times=(),
                     dense=False, norm_rs=(2.0, INF)) -> Trajectory:
    """Implicit Euler from ``apply_dirichlet(u0)`` up to ``T`` (rounded to whole steps).

    Raises
    ------
    ConvergenceError
        With ``trajectory`` holding everything solved before the failing step.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    params.check_exponent(p_field.p_minus)
    M = max(1, int(round(T / params.tau)))
    keep = {0, M} | {int(round(s / params.tau)) for s in snapshot_times if 0 <= s <= T + 1e-12}
    u = apply_dirichlet(grid, u0)
    traj = Trajectory(grid, params, dense=dense)
    traj.times.append(0.0)
    traj.fields.append(u)
    traj.norms.extend(NormRecord(0.0, float(r), lp_norm(grid, u, r)) for r in norm_rs)
    for k in range(1, M + 1):
        t = k * params.tau
        try:
            u, iters, gn, J = _step(grid, u, params, p_field, t)
        except ConvergenceError as exc:
            traj.status = "aborted"
            traj.message = f"step {k} (t={t}): {exc}"
            exc.trajectory = traj
            raise
        traj.steps.append(StepStats(k, t, iters, gn, J))
        traj.norms.extend(NormRecord(t, float(r), lp_norm(grid, u, r)) for r in norm_rs)
        if dense or k in keep:
            traj.times.append(t)
            traj.fields.append(u)
    return traj


@dataclass
class LadderResult:
    trajectories: list
    rungs: list
    table: list  # (t, k, ||u^(k)(t) - u^(k+1)(t)||_2)


def continuation_ladder(grid, u0, base_params: StepParams, p_field, T, ladder,
                        snapshot_times=()) -> LadderResult:
    """Independent solves for each ``(mu, nu)`` rung plus successive L2 differences."""
    rungs = [(float(m), float(v)) for m, v in ladder]
    for (m0, v0), (m1, v1) in zip(rungs, rungs[1:]):
        if m1 > m0 or v1 > v0:
            raise ValueError("ladder rungs must be non-increasing in mu and nu")
    trajs = [solve_trajectory(grid, u0, replace(base_params, mu=m, nu=v), p_field, T,
                              snapshot_times=snapshot_times)
             for m, v in rungs]
    table = []
    for k in range(len(trajs) - 1):
        for t in trajs[k].times:
            diff = trajs[k].at(t) - trajs[k + 1].at(t)
            table.append((t, k, lp_norm(grid, diff, 2)))
    table.sort(key=lambda row: (row[0], row[1]))
    return LadderResult(trajs, rungs, table)
