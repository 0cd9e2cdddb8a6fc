"""Executable checks: contraction, the energy inequality and smoothing rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .dynamics import Trajectory, cell_exponent
from .errors import HypothesisError, InsufficientTrajectoryError, UnsupportedRegimeError
from .mesh import Grid, cell_average, discrete_gradient, integrate
from .norms import lp_norm, modulus, records_for


def gamma_exponents(n, r0, r, p_minus, p_plus):
    """Smoothing exponents ``(gamma_minus, gamma_plus)`` for ``p_minus >= n``.

    With ``D = r0 p_minus - 2n + n p_minus``::

        gamma_minus = (r - r0) n / (r D),   gamma_plus = gamma_minus * p_minus / p_plus

    and the ``r -> inf`` limits ``n / D`` and ``n p_minus / (p_plus D)``.
    """
    if not 2.0 <= r0 < math.inf:
        raise ValueError("r0 must lie in [2, inf)")
    if r < r0:
        raise ValueError(f"r = {r} must be >= r0 = {r0}")
    if p_plus < p_minus:
        raise ValueError("p_plus < p_minus")
    if p_minus <= 2.0 * n / (n + r0):
        raise HypothesisError(f"p_minus = {p_minus} must exceed 2n/(n+r0) = {2.0 * n / (n + r0)}")
    if math.isinf(r):
        if p_minus <= n:
            raise HypothesisError(f"r = inf needs p_minus > n (p_minus = {p_minus}, n = {n})")
    elif p_minus < n:
        raise UnsupportedRegimeError(f"no closed-form exponents for p_minus = {p_minus} < n = {n}")
    denom = r0 * p_minus - 2.0 * n + n * p_minus
    g_minus = n / denom if math.isinf(r) else (r - r0) * n / (r * denom)
    g_plus = n * p_minus / (p_plus * denom) if math.isinf(r) else (r - r0) * n * p_minus / (r * p_plus * denom)
    return g_minus, g_plus


@dataclass
class ContractionResult:
    passed: bool
    worst_pair: tuple | None  # (s, t, ||u(t)|| / ||u(s)||)
    r: float = 2.0

    def to_dict(self):
        return asdict(self)


def contraction_check(records, tol=1e-8, r=None) -> ContractionResult:
    """``||u(t)|| <= ||u(s)|| (1 + tol)`` for all stored ``t > s``.

    ``records`` is a list of :class:`~pxlap.norms.NormRecord` for a single
    exponent (or pass ``r`` to select one).
    """
    if r is None:
        rs = {rec.r for rec in records}
        if len(rs) > 1:
            raise ValueError("records hold several exponents; pass r")
        r = rs.pop() if rs else 2.0
    times, vals = records_for(records, r)
    if times.size and np.any(np.diff(times) < 0):
        raise ValueError("records must be time ordered")
    worst = None
    worst_ratio = -math.inf
    passed = True
    best_s = None
    for t, v in zip(times, vals):
        if best_s is not None:
            s, vs = best_s
            if v > vs * (1.0 + tol):
                passed = False
            with np.errstate(over="ignore"):
                ratio = math.inf if vs == 0 else v / vs
            if vs == 0 and v == 0:
                ratio = 1.0
            if ratio > worst_ratio:
                worst_ratio, worst = ratio, (float(s), float(t), float(ratio))
        if best_s is None or v < best_s[1]:
            best_s = (t, v)
    return ContractionResult(passed, worst, float(r))


def max_principle_check(records, slack=1e-8) -> ContractionResult:
    """Discrete maximum principle: per step ``||u^{k+1}||_inf <= ||u^k||_inf + slack``."""
    times, vals = records_for(records, math.inf)
    inc = np.diff(vals)
    passed = bool(np.all(inc <= slack)) if inc.size else True
    if inc.size:
        k = int(np.argmax(inc))
        worst = (float(times[k]), float(times[k + 1]), float(inc[k]))
    else:
        worst = None
    return ContractionResult(passed, worst, math.inf)


@dataclass
class LedgerRow:
    step: int
    t: float
    deriv_term: float
    dissipation: float
    residual: float
    threshold: float
    passed: bool


@dataclass
class InequalityLedger:
    r0: float
    tol: float
    rows: list = field(default_factory=list)

    @property
    def passed(self):
        return all(row.passed for row in self.rows)

    @property
    def max_residual(self):
        return max((row.residual for row in self.rows), default=0.0)

    @property
    def max_scaled_residual(self):
        return max((row.residual / (row.threshold / self.tol) for row in self.rows), default=0.0)


def dissipation_integral(grid: Grid, u, p_cells, r0):
    """``integrate(|grad u|^p * |u|^{r0-2})`` on cells with ``|u|`` averaged over cell corners."""
    G = discrete_gradient(grid, u)
    gmod = np.sqrt(np.sum(G * G, axis=(-2, -1)))
    umod = cell_average(grid, modulus(u))
    return integrate(grid, gmod**p_cells * umod ** (r0 - 2.0), where="cells")


def energy_inequality_ledger(grid: Grid, trajectory: Trajectory, p_field, r0, tol=1e-6) -> InequalityLedger:
    """Per-step residual of ``(1/r0) d/dt ||u||_{r0}^{r0} + int |grad u|^p |u|^{r0-2} <= 0``.

    Step ``k`` passes when the residual is at most ``tol * (1 + ||u^k||^{r0} / tau)``.
    """
    if not 2.0 <= r0 < math.inf:
        raise ValueError("the ledger needs r0 in [2, inf)")
    M = len(trajectory.steps)
    if not trajectory.dense or len(trajectory.fields) != M + 1:
        raise InsufficientTrajectoryError("energy ledger needs every step stored")
    tau = trajectory.params.tau
    ledger = InequalityLedger(float(r0), tol)
    prev_pow = lp_norm(grid, trajectory.fields[0], r0) ** r0
    for k in range(M):
        u_next = trajectory.fields[k + 1]
        t = trajectory.times[k + 1]
        next_pow = lp_norm(grid, u_next, r0) ** r0
        deriv = (next_pow - prev_pow) / (r0 * tau)
        diss = dissipation_integral(grid, u_next, cell_exponent(grid, p_field, t), r0)
        res = deriv + diss
        thr = tol * (1.0 + prev_pow / tau)
        ledger.rows.append(LedgerRow(k + 1, t, deriv, diss, res, thr, bool(res <= thr)))
        prev_pow = next_pow
    return ledger


@dataclass
class RateReport:
    n: int
    r0: float
    r: float
    p_minus: float
    p_plus: float
    gamma_minus: float
    gamma_plus: float
    fitted_c: float
    window: tuple
    max_ratio_deviation: float
    decay_slope: float | None = None
    decay_r2: float | None = None

    def to_dict(self):
        return asdict(self)


def smoothing_bound_check(records, r, gammas, window, n=None, r0=None,
                          p_minus=None, p_plus=None) -> RateReport:
    """``fitted_c = max ||u(t)||_r / (t^-gamma_minus + t^-gamma_plus)`` over the window."""
    t_lo, t_hi = window
    if not t_lo > 0:
        raise ValueError("window must start at t > 0")
    times, vals = records_for(records, r)
    sel = (times >= t_lo * (1 - 1e-12)) & (times <= t_hi * (1 + 1e-12))
    if not np.any(sel):
        raise ValueError(f"no records in window {window}")
    t, v = times[sel], vals[sel]
    gm, gp = gammas
    ratio = v / (t**-gm + t**-gp)
    rmin = float(ratio.min())
    dev = math.inf if rmin == 0 else float((ratio.max() - rmin) / rmin)
    return RateReport(n, r0, float(r), p_minus, p_plus, gm, gp, float(ratio.max()),
                      (float(t_lo), float(t_hi)), dev)


def decay_fit(records, window, r=None):
    """Least-squares slope and r^2 of ``log ||u||`` against ``log t`` in the window."""
    if r is not None:
        times, vals = records_for(records, r)
    else:
        times = np.array([rec.t for rec in records])
        vals = np.array([rec.value for rec in records])
    sel = (times >= window[0] * (1 - 1e-12)) & (times <= window[1] * (1 + 1e-12))
    t, v = times[sel], vals[sel]
    if t.size < 5:
        raise ValueError("decay_fit needs at least 5 records in the window")
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("decay_fit needs positive times and norms")
    lv = np.log(v)
    if np.ptp(lv) == 0:
        return 0.0, 1.0
    fit = stats.linregress(np.log(t), lv)
    return float(fit.slope), float(fit.rvalue**2)


@dataclass
class ContinuityResult:
    passed: bool
    times: list
    differences: list
    reference: float


def continuity_check(grid: Grid, trajectory: Trajectory, r, t_star, tol) -> ContinuityResult:
    """``||u(t_k) - u_0||_r <= tol * ||u_0||_r`` for every stored ``0 < t_k <= t_star``."""
    u0 = trajectory.fields[0]
    ref = lp_norm(grid, u0, r)
    ts, ds = [], []
    for t, u in zip(trajectory.times[1:], trajectory.fields[1:]):
        if t <= t_star * (1 + 1e-12):
            ts.append(float(t))
            ds.append(lp_norm(grid, u - u0, r))
    passed = bool(ts) and all(d <= tol * ref for d in ds)
    if ref == 0:
        passed = all(d == 0 for d in ds)
    return ContinuityResult(passed, ts, ds, ref)
