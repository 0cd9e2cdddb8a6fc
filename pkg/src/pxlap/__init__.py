"""Finite-difference solver and diagnostics for the parabolic p(t,x)-Laplacian.

Submodules: ``exponent`` (variable exponents), ``mesh`` (grids and discrete
operators), ``norms`` (Lebesgue and Luxemburg norms), ``dynamics`` (implicit
Euler stepping), ``adjoint`` (frozen-coefficient duality checks),
``diagnostics`` (contraction, energy ledger, smoothing rates) and ``cli``.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
