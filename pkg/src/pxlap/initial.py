"""Initial data families."""

from __future__ import annotations

import numpy as np

from .mesh import Grid, apply_dirichlet, read_field_csv
from .norms import lp_norm


def sine(grid: Grid, amplitude=1.0):
    """``amplitude * prod_i sin(pi (x_i - a_i) / L_i)`` in every component."""
    s = np.ones(grid.node_shape)
    for i, (a, b) in enumerate(grid.extents):
        s = s * np.sin(np.pi * (grid.nodes[..., i] - a) / (b - a))
    return apply_dirichlet(grid, amplitude * np.repeat(s[..., None], grid.N, axis=-1))


def spike(grid: Grid, width=None, center=None, normalize_r0=2.0):
    """Hat ``A max(0, 1 - |x - x0| / w)`` scaled so the discrete ``||u||_{r0}`` is 1.

    ``width`` defaults to four times the finest spacing and ``center`` to the
    middle of the box.
    """
    w = 4.0 * min(grid.h) if width is None else float(width)
    if center is None:
        center = [0.5 * (a + b) for a, b in grid.extents]
    x0 = np.asarray(center, dtype=float).reshape(grid.n)
    d = np.linalg.norm(grid.nodes - x0, axis=-1)
    u = np.maximum(0.0, 1.0 - d / w)
    u = apply_dirichlet(grid, np.repeat(u[..., None], grid.N, axis=-1))
    norm = lp_norm(grid, u, normalize_r0)
    if norm == 0:
        raise ValueError("spike vanishes on the grid; increase width")
    return u / norm


def random(grid: Grid, seed=0, normalize_r0=None):
    rng = np.random.default_rng(seed)
    u = apply_dirichlet(grid, rng.standard_normal(grid.field_shape))
    if normalize_r0 is not None:
        u /= lp_norm(grid, u, normalize_r0)
    return u


def from_file(grid: Grid, path):
    return apply_dirichlet(grid, read_field_csv(path, grid))


def make_initial(grid: Grid, spec: dict, base_dir=None):
    kind = spec.get("kind", "sine")
    if kind == "sine":
        return sine(grid, float(spec.get("amplitude", 1.0)))
    if kind == "zero":
        return grid.zeros()
    if kind == "spike":
        center = spec.get("center")
        return spike(grid, spec.get("width"), center, float(spec.get("normalize_r0", 2.0)))
    if kind == "random":
        r0 = spec.get("normalize_r0")
        return random(grid, int(spec.get("seed", 0)), None if r0 is None else float(r0))
    if kind == "file":
        from pathlib import Path

        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return from_file(grid, path)
    raise ValueError(f"unknown initial-data kind {kind!r}")
