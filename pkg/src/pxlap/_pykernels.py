"""Pure-NumPy implementations of the per-cell kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
Arrays are float64; nodal arrays carry a trailing component axis.
"""

import numpy as np
from scipy.linalg import solve_banded


def grad_1d(u, h):
    return ((u[1:] - u[:-1]) / h)[:, None, :]


def grad_2d(u, hx, hy):
    m1, m2 = u.shape[0] - 1, u.shape[1] - 1
    out = np.empty((m1, m2, 2, u.shape[2]))
    dx = u[1:, :, :] - u[:-1, :, :]
    dy = u[:, 1:, :] - u[:, :-1, :]
    out[:, :, 0, :] = (dx[:, :-1] + dx[:, 1:]) / (2.0 * hx)
    out[:, :, 1, :] = (dy[:-1, :] + dy[1:, :]) / (2.0 * hy)
    return out


def grad_t_1d(F, h):
    """Transpose of ``grad_1d`` applied to a cell array."""
    f = F[:, 0, :] / h
    out = np.zeros((F.shape[0] + 1, F.shape[2]))
    out[1:] += f
    out[:-1] -= f
    return out


def grad_t_2d(F, hx, hy):
    m1, m2, _, N = F.shape
    fx = F[:, :, 0, :] / (2.0 * hx)
    fy = F[:, :, 1, :] / (2.0 * hy)
    out = np.zeros((m1 + 1, m2 + 1, N))
    out[1:, :-1] += fx - fy
    out[1:, 1:] += fx + fy
    out[:-1, :-1] -= fx + fy
    out[:-1, 1:] -= fx - fy
    return out


def coefficients(gsq, p, mu):
    """Scalar flux coefficient, Hessian rank-one weight and energy density.

    With ``s = mu + gsq``: ``a = s**((p-2)/2)``, ``c = (p-2) * s**((p-4)/2)``
    and ``e = s**(p/2) / p``. Where ``s == 0`` the rank-one weight multiplies
    a zero gradient and is set to 0.
    """
    s = mu + gsq
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.power(s, 0.5 * (p - 2.0))
        c = np.where(s > 0.0, (p - 2.0) * a / s, 0.0)
    e = a * s / p
    return a, c, e


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[i]`` couples rows i+1 and i."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[: n - 1]
    ab[1] = diag
    ab[2, :-1] = lower[: n - 1]
    return solve_banded((1, 1), ab, rhs)
