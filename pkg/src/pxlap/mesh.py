"""Uniform box grids with cell-centred gradients and their adjoint divergence.

Nodal arrays have shape ``node_shape + (N,)``; cell gradients have shape
``cell_shape + (n, N)``. In 2D the gradient of a cell is the average of the
two edge differences along each axis (the bilinear gradient at the cell
centre), and the divergence is defined as minus the adjoint of the gradient
for the cell (volume) and node (trapezoid) inner products.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import NumericError


@dataclass(frozen=True)
class Grid:
    n: int
    extents: tuple
    resolution: tuple
    N: int = 1

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n = 1 or n = 2 is supported")
        if len(self.extents) != self.n or len(self.resolution) != self.n:
            raise ValueError("extents and resolution must have one entry per axis")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        for (a, b), m in zip(self.extents, self.resolution):
            if not b > a:
                raise ValueError(f"degenerate extent [{a}, {b}]")
            if int(m) < 2:
                raise ValueError("need at least 2 cells per axis")

    @property
    def h(self):
        return tuple((b - a) / m for (a, b), m in zip(self.extents, self.resolution))

    @property
    def node_shape(self):
        return tuple(m + 1 for m in self.resolution)

    @property
    def cell_shape(self):
        return tuple(self.resolution)

    @property
    def field_shape(self):
        return self.node_shape + (self.N,)

    @property
    def num_nodes(self):
        return int(np.prod(self.node_shape))

    @property
    def num_cells(self):
        return int(np.prod(self.cell_shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in self.extents]))

    @cached_property
    def axes(self):
        return [np.linspace(a, b, m + 1) for (a, b), m in zip(self.extents, self.resolution)]

    @cached_property
    def nodes(self):
        """Node coordinates, shape ``node_shape + (n,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @cached_property
    def cell_centers(self):
        mids = [0.5 * (ax[1:] + ax[:-1]) for ax in self.axes]
        return np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)

    @cached_property
    def node_weights(self):
        """Trapezoid weights, shape ``node_shape``."""
        ws = []
        for h, m in zip(self.h, self.resolution):
            w = np.full(m + 1, h)
            w[0] = w[-1] = 0.5 * h
            ws.append(w)
        return ws[0] if self.n == 1 else np.multiply.outer(ws[0], ws[1])

    @cached_property
    def interior(self):
        """Boolean mask of interior nodes, shape ``node_shape``."""
        mask = np.zeros(self.node_shape, dtype=bool)
        mask[(slice(1, -1),) * self.n] = True
        return mask

    def zeros(self):
        return np.zeros(self.field_shape)


def build_grid(n, extents, resolution, N=1) -> Grid:
    """Grid over ``extents`` (one ``(a, b)`` per axis) with ``resolution`` cells per axis."""
    if np.isscalar(resolution):
        resolution = (int(resolution),) * n
    arr = np.asarray(extents, dtype=float)
    if arr.ndim == 1:
        arr = np.tile(arr, (n, 1))
    ext = tuple((float(a), float(b)) for a, b in arr)
    return Grid(n, ext, tuple(int(m) for m in resolution), int(N))


@dataclass
class GridField:
    """Nodal values on a grid at a time stamp."""

    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape == self.grid.node_shape and self.grid.N == 1:
            v = v[..., None]
        if v.shape != self.grid.field_shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.field_shape}")
        if not np.all(np.isfinite(v)):
            raise NumericError("grid field holds non-finite values")
        self.values = v


def _vals(grid, f):
    v = f.values if isinstance(f, GridField) else np.asarray(f, dtype=float)
    if v.shape == grid.node_shape and grid.N == 1:
        v = v[..., None]
    return np.ascontiguousarray(v)


def discrete_gradient(grid: Grid, f) -> np.ndarray:
    u = _vals(grid, f)
    if grid.n == 1:
        return kernels.grad_1d(u, grid.h[0])
    return kernels.grad_2d(u, grid.h[0], grid.h[1])


def gradient_transpose(grid: Grid, F) -> np.ndarray:
    """Plain transpose ``G^T F`` of the gradient matrix (no volume or weights)."""
    F = np.ascontiguousarray(F, dtype=float)
    if grid.n == 1:
        return kernels.grad_t_1d(F, grid.h[0])
    return kernels.grad_t_2d(F, grid.h[0], grid.h[1])


def discrete_divergence(grid: Grid, F) -> np.ndarray:
    """Nodal field with ``<grad u, F>_cells = -<u, div F>_nodes`` for ``u`` zero on the boundary."""
    T = gradient_transpose(grid, grid.cell_volume * np.asarray(F, dtype=float))
    return -T / grid.node_weights[..., None]


def integrate(grid: Grid, f, where="nodes") -> float:
    """Integral of a scalar field: trapezoid on nodes, midpoint on cells."""
    f = np.asarray(f, dtype=float)
    if where == "cells":
        if f.shape != grid.cell_shape:
            raise ValueError("cell field has wrong shape")
        return float(grid.cell_volume * f.sum())
    if f.shape != grid.node_shape:
        raise ValueError("nodal field has wrong shape")
    return float((grid.node_weights * f).sum())


def inner(grid: Grid, f, g) -> float:
    """Discrete L2 pairing of two nodal fields (componentwise dot, trapezoid weights)."""
    return integrate(grid, np.sum(_vals(grid, f) * _vals(grid, g), axis=-1))


def cell_inner(grid: Grid, F, G) -> float:
    return float(grid.cell_volume * np.sum(np.asarray(F) * np.asarray(G)))


def apply_dirichlet(grid: Grid, f) -> np.ndarray:
    u = _vals(grid, f).copy()
    u[~grid.interior] = 0.0
    return u


def refine(grid: Grid, f):
    """Multilinear interpolation onto the grid with doubled resolution."""
    u = _vals(grid, f)
    fine = Grid(grid.n, grid.extents, tuple(2 * m for m in grid.resolution), grid.N)
    out = np.empty(fine.field_shape)
    if grid.n == 1:
        out[::2] = u
        out[1::2] = 0.5 * (u[1:] + u[:-1])
        return fine, out
    out[::2, ::2] = u
    out[1::2, ::2] = 0.5 * (u[1:, :] + u[:-1, :])
    out[::2, 1::2] = 0.5 * (u[:, 1:] + u[:, :-1])
    out[1::2, 1::2] = 0.25 * (u[1:, 1:] + u[1:, :-1] + u[:-1, 1:] + u[:-1, :-1])
    return fine, out


def cell_average(grid: Grid, s) -> np.ndarray:
    """Average of a nodal scalar over the corners of each cell."""
    s = np.asarray(s, dtype=float)
    if grid.n == 1:
        return 0.5 * (s[1:] + s[:-1])
    return 0.25 * (s[1:, 1:] + s[1:, :-1] + s[:-1, 1:] + s[:-1, :-1])


@lru_cache(maxsize=32)
def gradient_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse gradient acting on interior unknowns.

    Columns index interior nodes (C order) times components; rows index
    ``(cell, axis, component)`` in C order, matching the flattened gradient.
    """
    nn = grid.num_nodes
    idx = np.arange(nn).reshape(grid.node_shape)
    rows, cols, vals = [], [], []
    if grid.n == 1:
        (h,) = grid.h
        c = np.arange(grid.num_cells)
        rows += [c, c]
        cols += [idx[1:], idx[:-1]]
        vals += [np.full(c.size, 1.0 / h), np.full(c.size, -1.0 / h)]
    else:
        hx, hy = grid.h
        c = np.arange(grid.num_cells).reshape(grid.cell_shape)
        sw, se = idx[:-1, :-1], idx[1:, :-1]
        nw, ne = idx[:-1, 1:], idx[1:, 1:]
        for node, sx, sy in ((sw, -1, -1), (se, 1, -1), (nw, -1, 1), (ne, 1, 1)):
            rows += [2 * c.ravel(), 2 * c.ravel() + 1]
            cols += [node.ravel(), node.ravel()]
            vals += [np.full(c.size, sx / (2 * hx)), np.full(c.size, sy / (2 * hy))]
    G = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(grid.num_cells * grid.n, nn))
    G = G[:, np.flatnonzero(grid.interior.ravel())]
    if grid.N > 1:
        G = sp.kron(G, sp.identity(grid.N), format="csr")
    return G.tocsr()


def write_field_csv(path, grid: Grid, f, fmt=repr):
    """Write ``x1[,x2],comp_1..comp_N`` rows in C order (last axis fastest)."""
    u = _vals(grid, f)
    header = [f"x{i + 1}" for i in range(grid.n)] + [f"comp_{k + 1}" for k in range(grid.N)]
    coords = grid.nodes.reshape(-1, grid.n)
    vals = u.reshape(-1, grid.N)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, v in zip(coords, vals):
            w.writerow([fmt(float(a)) for a in x] + [fmt(float(b)) for b in v])


def read_field_csv(path, grid: Grid) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in r] for r in reader if r])
    if len(header) != grid.n + grid.N or rows.shape[0] != grid.num_nodes:
        raise ValueError(f"{path}: field does not match grid (header {header}, {rows.shape[0]} rows)")
    if not np.allclose(rows[:, : grid.n], grid.nodes.reshape(-1, grid.n), atol=1e-9):
        raise ValueError(f"{path}: node coordinates do not match the grid")
    return rows[:, grid.n:].reshape(grid.field_shape)
