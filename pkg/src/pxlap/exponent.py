"""Variable exponent fields p(t, x): evaluation, bounds and log-Hölder probing.

Fields are immutable and evaluate vectorised: ``field(t, x)`` accepts a
scalar or array time and points of shape ``(..., n)`` (a bare array is
read as 1D coordinates) and returns the broadcast array of exponents.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, InvalidExponentError

DEFAULT_RESOLUTION = 33


def _as_points(x, n=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or (n == 1 and x.shape[-1:] != (1,)):
        x = x[..., None]
    return x


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Base class; subclasses implement :meth:`_evaluate`.

    ``extents`` is the spatial box and ``horizon`` the final time over which
    the cached bounds ``p_minus`` / ``p_plus`` are computed.
    """

    extents: tuple = ((0.0, 1.0),)
    horizon: float = 1.0
    resolution: int = DEFAULT_RESOLUTION

    kind = "abstract"
    time_dependent = True

    def __call__(self, t, x):
        return self._evaluate(np.asarray(t, dtype=float), _as_points(x, self.n))

    @property
    def n(self):
        return len(self.extents)

    def _evaluate(self, t, x):
        raise NotImplementedError

    @cached_property
    def bounds(self):
        return exponent_bounds(self, resolution=self.resolution)

    @property
    def p_minus(self):
        return self.bounds[0]

    @property
    def p_plus(self):
        return self.bounds[1]

    def to_config(self) -> dict:
        raise NotImplementedError

    def _sample_nodes(self):
        """Extra points known to carry extrema (table nodes); empty by default."""
        return None


@dataclass(frozen=True, eq=False)
class ConstantExponent(ExponentField):
    value: float = 2.0

    kind = "constant"
    time_dependent = False

    def _evaluate(self, t, x):
        return np.full(np.broadcast_shapes(t.shape, x.shape[:-1]), float(self.value))

    def to_config(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True, eq=False)
class AffineExponent(ExponentField):
    """``p = base + t_coeff * t + sum_i coeffs[i] * x_i``."""

    base: float = 2.0
    coeffs: tuple = (0.0,)
    t_coeff: float = 0.0

    kind = "affine"

    def _evaluate(self, t, x):
        c = np.zeros(x.shape[-1])
        k = min(len(self.coeffs), x.shape[-1])
        c[:k] = self.coeffs[:k]
        return self.base + self.t_coeff * t + x @ c

    @property
    def time_dependent(self):
        return self.t_coeff != 0.0

    def to_config(self):
        return {"kind": "affine", "base": self.base, "coeffs": list(self.coeffs),
                "t_coeff": self.t_coeff}


@dataclass(frozen=True, eq=False)
class SinusoidExponent(ExponentField):
    """``p = base + amplitude * sin(2 pi (freq_t t + freq_x . x) + phase)``."""

    base: float = 2.5
    amplitude: float = 0.0
    freq_x: tuple = (1.0,)
    freq_t: float = 0.0
    phase: float = 0.0

    kind = "sinusoid"

    def _evaluate(self, t, x):
        k = np.zeros(x.shape[-1])
        m = min(len(self.freq_x), x.shape[-1])
        k[:m] = self.freq_x[:m]
        arg = 2.0 * np.pi * (self.freq_t * t + x @ k) + self.phase
        return self.base + self.amplitude * np.sin(arg)

    @property
    def time_dependent(self):
        return self.freq_t != 0.0

    def to_config(self):
        return {"kind": "sinusoid", "base": self.base, "amplitude": self.amplitude,
                "freq_x": list(self.freq_x), "freq_t": self.freq_t, "phase": self.phase}


@dataclass(frozen=True, eq=False)
class StepExponent(ExponentField):
    """Piecewise constant in ``x_1`` with a jump at ``location``.

    Not log-Hölder; exists to exercise rejection by :func:`estimate_log_holder`.
    """

    left: float = 2.0
    right: float = 2.5
    location: float = 0.5

    kind = "step"
    time_dependent = False

    def _evaluate(self, t, x):
        val = np.where(x[..., 0] < self.location, self.left, self.right)
        return np.broadcast_to(val, np.broadcast_shapes(t.shape, val.shape)).astype(float)

    def to_config(self):
        return {"kind": "step", "left": self.left, "right": self.right,
                "location": self.location}


@dataclass(frozen=True, eq=False)
class TableExponent(ExponentField):
    """Multilinear interpolation of samples on a tensor space-time lattice.

    ``times`` may hold a single value, in which case the field is taken as
    time independent. ``values`` has shape ``(len(times), len(x1)[, len(x2)])``.
    """

    times: tuple = (0.0,)
    axes: tuple = ((0.0, 1.0),)
    values: np.ndarray = field(default_factory=lambda: np.full((1, 2), 2.0))
    path: str | None = None

    kind = "table"

    @property
    def time_dependent(self):
        return len(self.times) > 1

    @cached_property
    def _interp(self):
        grid = [np.asarray(a, dtype=float) for a in self.axes]
        vals = np.asarray(self.values, dtype=float)
        if self.time_dependent:
            return RegularGridInterpolator([np.asarray(self.times)] + grid, vals)
        return RegularGridInterpolator(grid, vals[0])

    def _evaluate(self, t, x):
        if x.shape[-1] != len(self.axes):
            raise DomainError(f"table exponent is {len(self.axes)}D, got {x.shape[-1]}D points")
        shape = np.broadcast_shapes(t.shape, x.shape[:-1])
        xb = np.broadcast_to(x, shape + (x.shape[-1],))
        if self.time_dependent:
            tb = np.broadcast_to(t, shape)[..., None]
            pts = np.concatenate([tb, xb], axis=-1)
        else:
            pts = xb
        try:
            return self._interp(pts.reshape(-1, pts.shape[-1])).reshape(shape)
        except ValueError as exc:
            raise DomainError(f"query outside tabulated exponent box: {exc}") from None

    def _sample_nodes(self):
        grids = [np.asarray(a, dtype=float) for a in self.axes]
        mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, len(grids))
        if self.time_dependent:
            return [(tv, mesh) for tv in self.times]
        return [(0.0, mesh)]

    def to_config(self):
        return {"kind": "table", "path": self.path}

    @classmethod
    def from_csv(cls, path, extents=None, horizon=None, resolution=DEFAULT_RESOLUTION):
        """Load a table with header ``t,x1[,x2],p``."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [[float(v) for v in row] for row in reader if row]
        if header[0] != "t" or header[-1] != "p" or not 3 <= len(header) <= 4:
            raise ValueError(f"bad exponent table header {header}; expected t,x1[,x2],p")
        data = np.asarray(rows)
        ncoord = len(header) - 1
        uniq = [np.unique(data[:, j]) for j in range(ncoord)]
        shape = tuple(len(u) for u in uniq)
        if np.prod(shape) != len(data):
            raise ValueError("exponent table is not a full tensor lattice")
        vals = np.full(shape, np.nan)
        idx = tuple(np.searchsorted(uniq[j], data[:, j]) for j in range(ncoord))
        vals[idx] = data[:, -1]
        if np.isnan(vals).any():
            raise ValueError("exponent table has duplicate or missing lattice points")
        axes = tuple(tuple(u) for u in uniq[1:])
        for a in axes:
            if len(a) < 2:
                raise ValueError("each spatial table axis needs at least 2 samples")
        if extents is None:
            extents = tuple((a[0], a[-1]) for a in axes)
        if horizon is None:
            horizon = float(uniq[0][-1])
        return cls(extents=tuple(extents), horizon=horizon, resolution=resolution,
                   times=tuple(uniq[0]), axes=axes, values=vals, path=str(path))


@dataclass(frozen=True, eq=False)
class FloorExponent(ExponentField):
    """Pointwise ``max(floor, base(t, x))``."""

    base_field: ExponentField | None = None
    floor: float = 2.0

    kind = "floor"

    @property
    def time_dependent(self):
        return self.base_field.time_dependent

    def _evaluate(self, t, x):
        return np.maximum(self.floor, self.base_field._evaluate(t, x))

    def _sample_nodes(self):
        return self.base_field._sample_nodes()

    def to_config(self):
        return {"kind": "floor", "floor": self.floor, "base": self.base_field.to_config()}


def eval_exponent(field: ExponentField, t, x):
    return field(t, x)


def _lattice(extents, horizon, resolution, time_dependent):
    axes = [np.linspace(a, b, resolution) for a, b in extents]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(extents))
    times = np.linspace(0.0, horizon, resolution) if time_dependent else np.array([0.0])
    return times, pts


def exponent_bounds(field: ExponentField, extents=None, horizon=None,
                    resolution=DEFAULT_RESOLUTION):
    """Lattice minimum and maximum of ``field`` over the space-time box.

    Raises
    ------
    InvalidExponentError
        If the sampled minimum is not above 1 or a sample is not finite.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2 points per axis")
    extents = field.extents if extents is None else extents
    horizon = field.horizon if horizon is None else horizon
    times, pts = _lattice(extents, horizon, resolution, field.time_dependent)
    vals = field(times[:, None], pts[None, :, :])
    lo, hi = float(vals.min()), float(vals.max())
    extra = field._sample_nodes()
    if extra is not None:
        for tv, nodes in extra:
            if 0.0 <= tv <= horizon:
                inside = np.all([(nodes[:, j] >= a) & (nodes[:, j] <= b)
                                 for j, (a, b) in enumerate(extents)], axis=0)
                if inside.any():
                    v = field(tv, nodes[inside])
                    lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidExponentError("exponent is not finite on the sample lattice")
    if lo <= 1.0:
        raise InvalidExponentError(f"p_minus = {lo} violates p_minus > 1")
    return lo, hi


def q_field(field: ExponentField) -> ExponentField:
    """The field ``max(2, p)`` over the same box."""
    return FloorExponent(extents=field.extents, horizon=field.horizon,
                         resolution=field.resolution, base_field=field, floor=2.0)


@dataclass(frozen=True)
class LogHolderReport:
    c1_hat: float
    sample_count: int
    max_violation_pair: tuple
    ceiling: float = math.inf

    @property
    def accepted(self):
        return self.c1_hat <= self.ceiling

    def to_dict(self):
        (t1, x1), (t2, x2) = self.max_violation_pair
        return {"c1_hat": self.c1_hat, "sample_count": self.sample_count,
                "ceiling": self.ceiling, "accepted": self.accepted,
                "max_violation_pair": [[t1, list(x1)], [t2, list(x2)]]}


def log_holder_ratio(field, t1, x1, t2, x2):
    """``|p(t1,x1) - p(t2,x2)| * log(e + 1/(|t1-t2| + |x1-x2|))``, elementwise."""
    x1 = _as_points(x1, field.n)
    x2 = _as_points(x2, field.n)
    d = np.abs(np.asarray(t1) - np.asarray(t2)) + np.linalg.norm(x1 - x2, axis=-1)
    dp = np.abs(field(t1, x1) - field(t2, x2))
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(np.e + 1.0 / d)
        return np.where(dp == 0.0, 0.0, dp * logs)


_BLOCK = 256


def _random_pairs(rng, lo, hi, count):
    """Pairs drawn in fixed blocks so a smaller count is a prefix of a larger one."""
    dim = lo.size
    diam = float(np.linalg.norm(hi - lo, ord=1))
    a_all, b_all = [], []
    drawn = 0
    while drawn < count:
        a = lo + (hi - lo) * rng.random((_BLOCK, dim))
        b_far = lo + (hi - lo) * rng.random((_BLOCK, dim))
        direction = rng.standard_normal((_BLOCK, dim))
        direction /= np.maximum(np.abs(direction).sum(axis=1, keepdims=True), 1e-300)
        dist = 10.0 ** rng.uniform(-12.0, math.log10(max(diam, 1e-12)), _BLOCK)
        near = rng.random(_BLOCK) < 0.5
        b_near = np.clip(a + dist[:, None] * direction, lo, hi)
        a_all.append(a)
        b_all.append(np.where(near[:, None], b_near, b_far))
        drawn += _BLOCK
    return np.concatenate(a_all)[:count], np.concatenate(b_all)[:count]


def _zoom_pairs(field, extents, horizon, resolution, levels=40):
    """Bisect toward the steepest lattice jump; a continuous field loses ratio, a jump keeps it."""
    times, pts = _lattice(extents, horizon, resolution, field.time_dependent)
    z = np.array([[tv, *x] for tv in times for x in pts])
    axes_len = [len(times)] + [resolution] * len(extents)
    zg = z.reshape(*axes_len, -1)
    best = None
    for ax in range(zg.ndim - 1):
        if zg.shape[ax] < 2:
            continue
        a = np.moveaxis(zg, ax, 0)[:-1].reshape(-1, z.shape[1])
        b = np.moveaxis(zg, ax, 0)[1:].reshape(-1, z.shape[1])
        dp = np.abs(field(a[:, 0], a[:, 1:]) - field(b[:, 0], b[:, 1:]))
        k = int(np.argmax(dp))
        if best is None or dp[k] > best[0]:
            best = (dp[k], a[k].copy(), b[k].copy())
    a, b = best[1], best[2]
    out_a, out_b = [a.copy()], [b.copy()]
    for _ in range(levels):
        m = 0.5 * (a + b)
        pa, pm, pb = (float(field(v[0], v[1:])) for v in (a, m, b))
        if abs(pm - pa) >= abs(pb - pm):
            b = m
        else:
            a = m
        out_a.append(a.copy())
        out_b.append(b.copy())
    return np.array(out_a), np.array(out_b)


def estimate_log_holder(field: ExponentField, pair_sample_count=4096, rng_seed=0,
                        extents=None, horizon=None, ceiling=math.inf,
                        resolution=DEFAULT_RESOLUTION) -> LogHolderReport:
    """Sampled lower bound for the log-Hölder constant of ``field``.

    Combines seeded random pairs (half uniform, half at log-uniform small
    separations) with a bisection zoom that starts from the steepest
    lattice-neighbour jump. The estimate is the maximum sampled ratio and
    never exceeds the true constant.
    """
    if pair_sample_count < 1:
        raise ValueError("pair_sample_count must be >= 1")
    extents = field.extents if extents is None else extents
    horizon = field.horizon if horizon is None else horizon
    lo = np.array([0.0] + [a for a, _ in extents])
    hi = np.array([horizon if field.time_dependent else 0.0] + [b for _, b in extents])
    rng = np.random.default_rng(rng_seed)
    za, zb = _random_pairs(rng, lo, hi, pair_sample_count)
    ya, yb = _zoom_pairs(field, extents, horizon, resolution)
    za = np.concatenate([za, ya])
    zb = np.concatenate([zb, yb])
    ratio = log_holder_ratio(field, za[:, 0], za[:, 1:], zb[:, 0], zb[:, 1:])
    k = int(np.argmax(ratio))
    pair = ((float(za[k, 0]), tuple(map(float, za[k, 1:]))),
            (float(zb[k, 0]), tuple(map(float, zb[k, 1:]))))
    return LogHolderReport(float(ratio[k]), len(za), pair, ceiling)


def make_exponent(spec: dict, extents, horizon, resolution=DEFAULT_RESOLUTION,
                  base_dir: str | Path | None = None) -> ExponentField:
    """Build a field from a ``kind`` plus kind-specific keys."""
    kind = spec.get("kind", "constant")
    common = dict(extents=tuple(tuple(map(float, e)) for e in extents),
                  horizon=float(horizon), resolution=int(resolution))
    n = len(common["extents"])

    def vec(key, default):
        v = spec.get(key, default)
        v = (v,) if np.isscalar(v) else tuple(v)
        return tuple(float(a) for a in v) + (0.0,) * (n - len(v))

    if kind == "constant":
        return ConstantExponent(value=float(spec.get("value", 2.0)), **common)
    if kind == "affine":
        return AffineExponent(base=float(spec.get("base", 2.0)), coeffs=vec("coeffs", 0.0),
                              t_coeff=float(spec.get("t_coeff", 0.0)), **common)
    if kind == "sinusoid":
        return SinusoidExponent(base=float(spec.get("base", 2.5)),
                                amplitude=float(spec.get("amplitude", 0.0)),
                                freq_x=vec("freq_x", 1.0), freq_t=float(spec.get("freq_t", 0.0)),
                                phase=float(spec.get("phase", 0.0)), **common)
    if kind == "step":
        return StepExponent(left=float(spec.get("left", 2.0)), right=float(spec.get("right", 2.5)),
                            location=float(spec.get("location", 0.5)), **common)
    if kind == "table":
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return TableExponent.from_csv(path, extents=common["extents"], horizon=horizon,
                                      resolution=resolution)
    raise ValueError(f"unknown exponent kind {kind!r}")

