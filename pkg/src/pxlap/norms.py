"""Discrete L^r norms, variable-exponent modular and Luxemburg norm."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .mesh import Grid, _vals, integrate

INF = math.inf


@dataclass(frozen=True, order=True)
class NormRecord:
    t: float
    r: float
    value: float


def modulus(values):
    """Pointwise Euclidean modulus over the trailing component axis (and axis axis for gradients)."""
    v = np.asarray(values, dtype=float)
    return np.sqrt(np.sum(v * v, axis=-1))


def lp_norm(grid: Grid, f, r) -> float:
    m = modulus(_vals(grid, f))
    if math.isinf(r):
        return float(m.max())
    if r < 1:
        raise ValueError("r must be >= 1")
    return integrate(grid, m**r) ** (1.0 / r)


def _field_modulus(grid, f, where):
    f = np.asarray(f, dtype=float)
    if where == "cells":
        if f.shape == grid.cell_shape:
            return np.abs(f)
        # cell gradient: Frobenius modulus over (axis, component)
        return np.sqrt(np.sum(f * f, axis=tuple(range(grid.n, f.ndim))))
    return modulus(_vals(grid, f))


def _exponent_at(grid, q, t, where):
    pts = grid.cell_centers if where == "cells" else grid.nodes
    return q(t, pts)


def modular(grid: Grid, f, q, t=0.0, where="nodes") -> float:
    """``integrate(|f|^q(t, .))``; ``where`` says whether ``f`` lives on nodes or cells."""
    m = _field_modulus(grid, f, where)
    return integrate(grid, m ** _exponent_at(grid, q, t, where), where=where)


def luxemburg_norm(grid: Grid, f, q, t=0.0, tol=1e-10, where="nodes") -> float:
    """Smallest ``lam`` with ``modular(f / lam) <= 1``, to relative tolerance ``tol``.

    ``lam -> modular(f / lam)`` is continuous and strictly decreasing for
    ``f != 0``; the root is bracketed from constant-exponent bounds and then
    bisected.
    """
    m = _field_modulus(grid, f, where)
    if not np.any(m):
        return 0.0
    qv = np.broadcast_to(_exponent_at(grid, q, t, where), m.shape)
    vol = grid.volume

    def rho(lam):
        with np.errstate(over="ignore"):
            val = integrate(grid, (m / lam) ** qv, where=where)
        if math.isnan(val):
            raise NumericError(f"modular is NaN at lambda={lam}")
        return val

    # Start from the sup norm scaled to the domain volume, then expand to a bracket.
    qmin = float(qv.min())
    hi = float(m.max()) * max(1.0, vol) ** (1.0 / qmin)
    for _ in range(2100):
        if rho(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise NumericError("could not bracket the Luxemburg norm from above")
    lo = 0.5 * hi
    for _ in range(2100):
        if rho(lo) > 1.0:
            break
        hi, lo = lo, 0.5 * lo
    else:
        raise NumericError("could not bracket the Luxemburg norm from below")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def norm_trajectory(grid: Grid, trajectory, r_list) -> list[NormRecord]:
    """L^r norm of every stored snapshot for every ``r``; ordered by ``(t, r)``."""
    recs = [NormRecord(float(t), float(r), lp_norm(grid, u, r))
            for t, u in zip(trajectory.times, trajectory.fields) for r in r_list]
    return sorted(recs, key=lambda rec: (rec.t, rec.r))


def records_for(records, r):
    """Time-ordered ``(times, values)`` arrays for one exponent."""
    sel = [rec for rec in records if rec.r == r or (math.isinf(r) and math.isinf(rec.r))]
    sel.sort(key=lambda rec: rec.t)
    return np.array([s.t for s in sel]), np.array([s.value for s in sel])
