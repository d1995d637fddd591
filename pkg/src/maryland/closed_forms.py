"""Closed-form Lyapunov exponent, IDS, its inverse, and the zeta Fourier data.

All evaluators accept scalars or numpy arrays in ``e`` and are vectorised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import TargetOutOfRange


def _check_lambda(lam):
    if not lam > 0:
        raise ValueError(f"coupling must be positive, got {lam!r}")


def lyapunov(lam, e):
    """gamma_lambda(e), from 4 cosh(gamma) = |e + 2 + i lam| + |e - 2 + i lam|."""
    _check_lambda(lam)
    e = np.asarray(e, dtype=float)
    c = (np.hypot(2.0 + e, lam) + np.hypot(2.0 - e, lam)) / 4.0
    # arccosh written out to keep (c - 1)(c + 1) free of cancellation near c = 1
    g = np.log(c + np.sqrt((c - 1.0) * (c + 1.0)))
    return g[()] if g.ndim == 0 else g


def ids(lam, e):
    """k_lambda(e) = 1/2 + arctan(e tanh(gamma)/lam)/pi."""
    _check_lambda(lam)
    e = np.asarray(e, dtype=float)
    k = 0.5 + np.arctan(e * np.tanh(lyapunov(lam, e)) / lam) / np.pi
    return k[()] if np.ndim(k) == 0 else k


def ids_inverse(lam, k_target, tol: float = 1e-12) -> float:
    """Energy e with |ids(lam, e) - k_target| <= tol.

    Brent's method on the strictly increasing IDS; the bracket starts at
    [-2 - lam, 2 + lam] and doubles until it straddles the target.
    """
    _check_lambda(lam)
    if not (0.0 < k_target < 1.0):
        raise TargetOutOfRange(f"IDS target {k_target!r} is outside (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    f = lambda e: float(ids(lam, e)) - k_target
    lo, hi = -2.0 - lam, 2.0 + lam
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    root = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(root)) > tol:
        raise ArithmeticError(f"IDS inversion reached |residual| = {abs(f(root)):.3e} > tol = {tol:.1e}")
    return root


@dataclass(frozen=True)
class ZetaCoefficients:
    """Fourier data of zeta(x), where q(x) = exp(-2 pi i zeta(x))."""

    zeta0: float
    coeffs: np.ndarray  # coeffs[n - 1] = zeta_n for n = 1..n_max; zeta_{-n} = zeta_n
    gamma: float
    k: float

    @property
    def n_max(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, n: int) -> float:
        if n == 0:
            return self.zeta0
        if abs(n) > self.n_max:
            raise IndexError(n)
        return float(self.coeffs[abs(n) - 1])

    def envelope(self) -> np.ndarray:
        n = np.arange(1, self.n_max + 1)
        return np.exp(-self.gamma * n) / (np.pi * n)


def zeta_coeffs(lam, e, n_max: int) -> ZetaCoefficients:
    """zeta_0 = k - 1/2 and zeta_n = (-1)^n exp(-gamma |n|) sin(pi n k)/(n pi)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    g = float(lyapunov(lam, e))
    k = float(ids(lam, e))
    n = np.arange(1, n_max + 1)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    coeffs = sign * np.exp(-g * n) * np.sin(np.pi * n * k) / (n * np.pi)
    return ZetaCoefficients(k - 0.5, coeffs, g, k)


def q_function(lam, e, x):
    """q(x) = -(2 cos 2 pi x - e - i lam)/(2 cos 2 pi x - e + i lam)."""
    w = 2.0 * np.cos(2.0 * np.pi * np.asarray(x, dtype=float)) - e
    return -(w - 1j * lam) / (w + 1j * lam)


def zeta_function(lam, e, x):
    """The branch zeta(x) in (-1/2, 1/2) with q(x) = exp(-2 pi i zeta(x))."""
    _check_lambda(lam)
    z = -np.angle(q_function(lam, e, x)) / (2.0 * np.pi)
    if np.any(np.abs(z) >= 0.5):
        raise AssertionError("zeta left the principal branch (-1/2, 1/2)")
    return z[()] if np.ndim(z) == 0 else z


def zeta_quadrature(lam, e, n_max: int, points: int = 4096) -> np.ndarray:
    """Trapezoidal Fourier coefficients int_0^1 zeta(x) e^{2 pi i n x} dx, n = -n_max..n_max."""
    x = np.arange(points) / points
    z = zeta_function(lam, e, x)
    n = np.arange(-n_max, n_max + 1)
    return np.exp(2j * np.pi * np.outer(n, x)) @ z / points


def curves_table(lam, e_min: float, e_max: float, steps: int) -> np.ndarray:
    """Rows (e, gamma, k) on a uniform grid, for the ``curves`` subcommand."""
    e = np.linspace(e_min, e_max, steps)
    return np.column_stack([e, lyapunov(lam, e), ids(lam, e)])


def gamma_inverse(lam, target: float, tol: float = 1e-12) -> float:
    """The positive energy with gamma_lambda(e) = target (requires target > gamma(0))."""
    g0 = float(lyapunov(lam, 0.0))
    if not target > g0:
        raise ValueError(f"target {target} not above gamma(0) = {g0}")
    hi = 1.0
    while float(lyapunov(lam, hi)) < target:
        hi *= 2.0
    f = lambda e: float(lyapunov(lam, e)) - target
    root = brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(root)) > tol:
        raise ArithmeticError("boundary-energy root did not meet tolerance")
    return root


LN_GOLDEN = math.log((1 + math.sqrt(5)) / 2)
