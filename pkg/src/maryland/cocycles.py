"""Transfer-matrix cocycles of the Maryland model.

The one-step matrix is A(x) = [[e - lam tan(pi x), -1], [1, 0]] and its
regular part is D(x) = cos(pi x) A(x).  Products are accumulated in
renormalised form (entries scaled to max-abs 1, log of the scale carried
separately) so that 10^5-step products neither overflow nor underflow.
Complexified cocycles use x + i*epsilon.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numba
import numpy as np

from .arithmetics import FrequencyCF, as_fraction, delta_index, orbit_phases
from .closed_forms import lyapunov
from .errors import SingularityHit

GUARD = 1e-12
KIND_A, KIND_D = 0, 1
_KINDS = {"A": KIND_A, "D": KIND_D}


def _kind(kind) -> int:
    if isinstance(kind, str):
        try:
            return _KINDS[kind.upper()]
        except KeyError:
            raise ValueError(f"unknown cocycle kind {kind!r}") from None
    return int(kind)


@dataclass(frozen=True)
class CocycleMatrix:
    """exp(log_scale) * entries, with entries of max-abs size in [1/2, 2]."""

    entries: np.ndarray
    log_scale: float = 0.0

    def matrix(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.entries

    def log_norm(self) -> float:
        """Natural log of the operator 2-norm."""
        nrm = np.linalg.norm(self.entries, 2)
        return self.log_scale + (math.log(nrm) if nrm > 0 else float("-inf"))

    def log_abs_det(self) -> float:
        d = abs(np.linalg.det(self.entries))
        return 2 * self.log_scale + (math.log(d) if d > 0 else float("-inf"))

    def renormalized(self) -> "CocycleMatrix":
        s = float(np.max(np.abs(self.entries)))
        if s == 0:
            return self
        return CocycleMatrix(self.entries / s, self.log_scale + math.log(s))

    def inverse(self) -> "CocycleMatrix":
        (a, b), (c, d) = self.entries
        det = a * d - b * c
        if det == 0:
            raise SingularityHit(-1, message="cannot invert a singular cocycle product")
        inv = np.array([[d, -b], [-c, a]]) / det
        return CocycleMatrix(inv, -self.log_scale).renormalized()

    def __matmul__(self, other: "CocycleMatrix") -> "CocycleMatrix":
        return CocycleMatrix(self.entries @ other.entries,
                             self.log_scale + other.log_scale).renormalized()


def step_A(lam, e, theta_point, guard: float = GUARD) -> CocycleMatrix:
    """One-step transfer matrix [[e - lam tan(pi theta), -1], [1, 0]]."""
    c = math.cos(math.pi * theta_point)
    if abs(c) <= guard or math.fmod(theta_point, 1.0) in (0.5, -0.5):
        raise SingularityHit(0, theta_point)
    t = math.sin(math.pi * theta_point) / c
    return CocycleMatrix(np.array([[e - lam * t, -1.0], [1.0, 0.0]]))


def step_D(lam, e, theta_point, epsilon: float = 0.0) -> CocycleMatrix:
    """Regular part [[e cos(pi z) - lam sin(pi z), -cos(pi z)], [cos(pi z), 0]], z = theta + i eps."""
    z = math.pi * complex(theta_point, epsilon)
    c, s = cmath.cos(z), cmath.sin(z)
    m = np.array([[e * c - lam * s, -c], [c, 0.0]], dtype=complex)
    if epsilon == 0.0:
        m = m.real.copy()
    return CocycleMatrix(m)


@numba.njit(cache=True, nogil=True)
def _product_kernel(kind, lam, e, xs, eps, guard):
    m00 = 1.0 + 0.0j
    m01 = 0.0j
    m10 = 0.0j
    m11 = 1.0 + 0.0j
    log_scale = 0.0
    for j in range(xs.size):
        x = xs[j]
        z = math.pi * complex(x, eps)
        c = cmath.cos(z)
        s = cmath.sin(z)
        if kind == 0:
            if eps == 0.0 and (abs(c) <= guard or x == 0.5):
                return j, m00, m01, m10, m11, log_scale
            a = e - lam * s / c
            b = -1.0 + 0.0j
            cc = 1.0 + 0.0j
        else:
            a = e * c - lam * s
            b = -c
            cc = c
        n00 = a * m00 + b * m10
        n01 = a * m01 + b * m11
        n10 = cc * m00
        n11 = cc * m01
        big = max(max(abs(n00), abs(n01)), max(abs(n10), abs(n11)))
        if big > 0.0:
            inv = 1.0 / big
            m00 = n00 * inv
            m01 = n01 * inv
            m10 = n10 * inv
            m11 = n11 * inv
            log_scale += math.log(big)
        else:
            m00, m01, m10, m11 = n00, n01, n10, n11
    return -1, m00, m01, m10, m11, log_scale


def product_on_phases(kind, lam, e, xs: np.ndarray, epsilon: float = 0.0,
                      guard: float = GUARD) -> CocycleMatrix:
    """Ordered product B(xs[-1]) ... B(xs[0]) over explicit orbit points."""
    k = _kind(kind)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    hit, m00, m01, m10, m11, log_scale = _product_kernel(k, float(lam), float(e), xs,
                                                          float(epsilon), float(guard))
    if hit >= 0:
        raise SingularityHit(hit, float(xs[hit]))
    entries = np.array([[m00, m01], [m10, m11]])
    if epsilon == 0.0:
        entries = entries.real.copy()
    return CocycleMatrix(entries, log_scale)


def product(kind, lam, e, alpha: FrequencyCF, theta0, epsilon: float = 0.0, n: int = 1,
            guard: float = GUARD) -> CocycleMatrix:
    """B_n(theta0) = B(theta0 + (n-1) alpha) ... B(theta0); B_{-n}(theta) = B_n(theta - n alpha)^{-1}."""
    if n == 0:
        return CocycleMatrix(np.eye(2))
    th = as_fraction(theta0)
    if n > 0:
        xs = orbit_phases(alpha, th, 0, n)
        return product_on_phases(kind, lam, e, xs, epsilon, guard)
    xs = orbit_phases(alpha, th, n, -n)
    try:
        return product_on_phases(kind, lam, e, xs, epsilon, guard).inverse()
    except SingularityHit as exc:
        raise SingularityHit(exc.index + n if exc.index >= 0 else exc.index, exc.theta) from None


@dataclass(frozen=True)
class LEEstimate:
    value: float
    steps: int
    phase_samples: int
    stderr: float
    samples: tuple[float, ...] = ()


def le_numeric(kind, lam, e, alpha: FrequencyCF, epsilon: float = 0.0, n: int = 100_000,
               phase_samples: int = 8, seed: int = 0, guard: float = GUARD,
               max_resample: int = 100) -> LEEstimate:
    """Phase-averaged (1/n) ln ||B_n(theta)|| over uniformly drawn theta."""
    if n < 1000:
        raise ValueError("n must be at least 1000")
    rng = np.random.default_rng(seed)
    vals = []
    tries = 0
    while len(vals) < phase_samples:
        theta = float(rng.random())
        try:
            m = product(kind, lam, e, alpha, theta, epsilon, n, guard)
        except SingularityHit:
            tries += 1
            if tries > max_resample:
                raise
            continue
        vals.append(m.log_norm() / n)
    vals_a = np.array(vals)
    stderr = float(vals_a.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return LEEstimate(float(vals_a.mean()), n, phase_samples, stderr, tuple(vals))


def le_running(kind, lam, e, alpha: FrequencyCF, theta, epsilon: float = 0.0, n: int = 100_000,
               checkpoints: int = 20, guard: float = GUARD) -> list[tuple[int, float]]:
    """(m, ln ||B_m(theta)|| / m) at ``checkpoints`` evenly spaced m <= n."""
    marks = np.unique(np.linspace(n / checkpoints, n, checkpoints).astype(int))
    xs = orbit_phases(alpha, as_fraction(theta), 0, n)
    out = []
    acc = CocycleMatrix(np.eye(2, dtype=complex if epsilon else float))
    start = 0
    for m in marks:
        acc = product_on_phases(kind, lam, e, xs[start:m], epsilon, guard) @ acc
        start = m
        out.append((int(m), acc.log_norm() / m))
    return out


def i_epsilon(epsilon: float, quad_points: int = 64) -> float:
    """int_0^1 ln|cos(pi (x + i eps))| dx by graded composite Gauss-Legendre.

    Uses |cos pi(x + i eps)|^2 = sin^2(pi t) + sinh^2(pi eps), t = 1/2 - x, and the
    symmetry about x = 1/2; panels halve toward the logarithmic point t = 0.
    """
    if quad_points < 64:
        raise ValueError("quad_points must be >= 64")
    s2 = math.sinh(math.pi * epsilon) ** 2
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    total = 0.0
    hi = 0.5
    tiny = 1e-15
    while hi > tiny:
        lo = hi / 2
        t = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * float(np.dot(weights, np.log(np.sin(np.pi * t) ** 2 + s2)))
        hi = lo
    # [0, hi]: sin(pi t) ~ pi t; int ln(pi^2 t^2 + s^2) in closed form
    h = hi
    s = math.sqrt(s2)
    tail = h * math.log(math.pi**2 * h * h + s2) - 2 * h
    if s > 0:
        tail += 2 * s / math.pi * math.atan(math.pi * h / s)
    return total + tail


def a_infinity_exponent(lam, e) -> float:
    """ln |dominant eigenvalue| of A_inf = [[e - i lam, -1], [1, 0]]."""
    ev = np.linalg.eigvals(np.array([[e - 1j * lam, -1.0], [1.0, 0.0]]))
    return float(np.log(np.max(np.abs(ev))))


@dataclass(frozen=True)
class AccelerationReport:
    epsilons: tuple[float, ...]
    exponents: tuple[float, ...]
    stderrs: tuple[float, ...]
    slopes: tuple[float, ...]          # per interval, already divided by 2 pi
    nearest_half_integer: tuple[float, ...]
    residuals: tuple[float, ...]


def acceleration(kind, lam, e, alpha: FrequencyCF, epsilon_grid: Sequence[float],
                 n: int = 100_000, phase_samples: int = 8, seed: int = 0) -> AccelerationReport:
    """Per-interval slopes (1/2 pi) dL/d eps of the complexified exponent."""
    grid = [float(x) for x in epsilon_grid]
    if len(grid) < 3 or any(x < 0 for x in grid) or grid != sorted(grid):
        raise ValueError("epsilon grid needs >= 3 sorted nonnegative points")
    ests = [le_numeric(kind, lam, e, alpha, eps, n, phase_samples, seed) for eps in grid]
    L = [est.value for est in ests]
    slopes = [(L[i + 1] - L[i]) / (grid[i + 1] - grid[i]) / (2 * math.pi)
              for i in range(len(grid) - 1)]
    nearest = [round(2 * s) / 2 for s in slopes]
    return AccelerationReport(tuple(grid), tuple(L), tuple(x.stderr for x in ests),
                              tuple(slopes), tuple(nearest),
                              tuple(abs(s - h) for s, h in zip(slopes, nearest)))


# ---------------------------------------------------------------------------
# Gordon-type inequalities
# ---------------------------------------------------------------------------


def gordon_three_point(B: np.ndarray, x: np.ndarray) -> float:
    """max(||B^2 x||, ||B x||, ||B^{-1} x||) for unimodular B and unit x."""
    B = np.asarray(B, dtype=float)
    x = np.asarray(x)
    if abs(np.linalg.det(B) - 1) > 1e-9:
        raise ValueError("B must have determinant 1")
    if abs(np.linalg.norm(x) - 1) > 1e-9:
        raise ValueError("x must be a unit vector")
    Bx = B @ x
    Binv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]])
    return float(max(np.linalg.norm(B @ Bx), np.linalg.norm(Bx), np.linalg.norm(Binv @ x)))


def random_unimodular(rng: np.random.Generator, count: int) -> np.ndarray:
    """Gaussian 2x2 matrices, orientation fixed by a column flip, scaled to det 1."""
    G = rng.standard_normal((count, 2, 2))
    det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0]
    G[det < 0, :, 0] *= -1
    return G / np.sqrt(np.abs(det))[:, None, None]


def gordon_sample_min(count: int = 100_000, seed: int = 0) -> float:
    """Smallest three-point maximum over random unimodular B and unit complex x."""
    rng = np.random.default_rng(seed)
    B = random_unimodular(rng, count)
    x = rng.standard_normal((count, 2)) + 1j * rng.standard_normal((count, 2))
    x /= np.linalg.norm(x, axis=1)[:, None]
    Bx = np.einsum("nij,nj->ni", B, x)
    B2x = np.einsum("nij,nj->ni", B, Bx)
    Binv = np.empty_like(B)
    Binv[:, 0, 0], Binv[:, 1, 1] = B[:, 1, 1], B[:, 0, 0]
    Binv[:, 0, 1], Binv[:, 1, 0] = -B[:, 0, 1], -B[:, 1, 0]
    Bix = np.einsum("nij,nj->ni", Binv, x)
    norms = np.stack([np.linalg.norm(v, axis=1) for v in (B2x, Bx, Bix)])
    return float(norms.max(axis=0).min())


def perturbation_bound_check(A_seq: Sequence[np.ndarray], B_seq: Sequence[np.ndarray],
                             C: float, d: float) -> bool:
    """Check ||prod(A+B) - prod A|| <= C e^{dn} (prod(1 + C e^{-d} ||B^j||) - 1).

    Raises ValueError if the window hypothesis ||A^{j+l-1} ... A^j|| <= C e^{d l}
    fails for some window.
    """
    n = len(A_seq)
    if len(B_seq) != n:
        raise ValueError("sequences differ in length")
    A = [np.asarray(a) for a in A_seq]
    B = [np.asarray(b) for b in B_seq]
    tol = 1e-12
    for j in range(n):
        P = np.eye(2)
        for ell in range(1, n - j + 1):
            P = A[j + ell - 1] @ P
            if np.linalg.norm(P, 2) > C * math.exp(d * ell) * (1 + tol):
                raise ValueError(f"window hypothesis fails at j={j}, length={ell}")
    PA = np.eye(2)
    PAB = np.eye(2)
    for a, b in zip(A, B):
        PA = a @ PA
        PAB = (a + b) @ PAB
    lhs = np.linalg.norm(PAB - PA, 2)
    rhs = C * math.exp(d * n) * (np.prod([1 + C * math.exp(-d) * np.linalg.norm(b, 2) for b in B]) - 1)
    return bool(lhs <= rhs * (1 + tol) + tol)


@dataclass(frozen=True)
class CosProductReport:
    q: int
    q_next: int
    min_index: int
    sum_without_min: float     # sum_{l != l0} ln|cos| + (q - 1) ln 2
    empirical_constant: float  # |sum_without_min| / ln q
    log_product: float         # sum_j ln|c_j|, j < q
    log_lower_bound: float     # (delta - ln 2 - eps) q - ln q_next
    delta_hat: float
    product_bound_holds: bool


def cos_product_bound(alpha: FrequencyCF, theta, level_index: int, epsilon: float = 0.2,
                      delta_hat: float | None = None) -> CosProductReport:
    """Cosine-product statistics at the level q = q_{level_index}."""
    q = alpha.q(level_index)
    q_next = alpha.q(level_index + 1)
    if q > 10**6:
        raise ValueError("level too deep for direct summation")
    if delta_hat is None:
        delta_hat = delta_index(alpha, theta).value
    xs = orbit_phases(alpha, as_fraction(theta), 0, q)
    logs = np.log(np.abs(np.cos(np.pi * xs)))
    l0 = int(np.argmin(logs))
    s = float(logs.sum() - logs[l0] + (q - 1) * math.log(2))
    const = abs(s) / math.log(q) if q > 1 else 0.0
    log_prod = float(logs.sum())
    bound = (delta_hat - math.log(2) - epsilon) * q - math.log(q_next)
    return CosProductReport(q, q_next, l0, s, const, log_prod, bound, delta_hat, log_prod >= bound)


def realizing_levels(alpha: FrequencyCF, theta, epsilon: float) -> list[int]:
    """Levels in the tail window whose delta-trace entry is within epsilon of the estimate."""
    est = delta_index(alpha, theta)
    start = est.depth - est.window
    return [n for n in range(start, est.depth) if est.trace[n] >= est.value - epsilon]


@dataclass(frozen=True)
class PartialInverseReport:
    q: int
    j0: int
    log_norm: float
    log_bound: float      # q (gamma + eps)
    fitted_constant: float
    holds: bool


def partial_inverse_norm_check(lam, e, alpha: FrequencyCF, theta, level_index: int,
                               epsilon_margin: float = 0.1, c_max: float = 1e3,
                               guard: float = GUARD) -> PartialInverseReport:
    """||A_{j0}(theta - q alpha)|| against C exp(q (gamma + eps)), j0 = argmin |cos pi(theta + j alpha)|."""
    q = alpha.q(level_index)
    if q > 10**5:
        raise ValueError("level too deep for direct products")
    th = as_fraction(theta)
    xs = orbit_phases(alpha, th, 0, q)
    j0 = int(np.argmin(np.abs(np.cos(np.pi * xs))))
    if j0 == 0:
        log_norm = 0.0
    else:
        shifted = orbit_phases(alpha, th, -q, j0)
        log_norm = product_on_phases("A", lam, e, shifted, 0.0, guard).log_norm()
    log_bound = q * (float(lyapunov(lam, e)) + epsilon_margin)
    fitted = math.exp(min(log_norm - log_bound, 700.0))
    return PartialInverseReport(q, j0, log_norm, log_bound, fitted, fitted <= c_max)
