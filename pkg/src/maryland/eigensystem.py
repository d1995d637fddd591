"""Point-spectrum construction for the Maryland model.

Eigenvalues come from the quantization lattice k(e) = theta - 1/2 + m alpha mod 1.
An eigenfunction is synthesized through the Cayley transform: with
q(x) = exp(-2 pi i zeta(x)), solve psi(x) - psi(x - alpha) = zeta(x - alpha) - zeta_0
by Fourier coefficients, set c_hat(x) = exp(-2 pi i (m x + psi(x))), and recover
u from (1 + i B) u = c where B = (e - Delta)/lam.

Fourier convention throughout: f(x) = sum_n f_n exp(-2 pi i n x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import numpy as np

from .arithmetics import FrequencyCF, as_fraction, delta_index, orbit_phases, tk_blocks
from .closed_forms import ZetaCoefficients, ids, ids_inverse, lyapunov, zeta_coeffs
from .errors import DegeneratePhase, IllConditionedSolve, SmallDivisorBreakdown

DEFAULT_GROWTH_BOUND = 1e8
CAUCHY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class EigenRecord:
    e: float
    m: int
    k_target: mpmath.mpf          # theta - 1/2 + m alpha mod 1, at the frequency's working precision
    gamma: float
    delta_hat: float
    lam: float
    theta: Fraction
    alpha: FrequencyCF = field(repr=False, compare=False)
    residual: float = math.nan
    decay_rate: float = math.nan

    @property
    def predicted_pp(self) -> bool:
        """gamma > delta_hat: the energy is expected to carry an eigenvector."""
        return self.gamma > self.delta_hat


def quantization_target(alpha: FrequencyCF, theta, m: int) -> mpmath.mpf:
    """frac(theta - 1/2 + m alpha), computed from the exact reduction of m alpha."""
    th = as_fraction(theta)
    prec = alpha.default_precision()
    with mpmath.workprec(prec):
        r = alpha.residual(m, prec) if m else mpmath.mpf(0)
        base = th - Fraction(1, 2)
        t = mpmath.mpf(base.numerator) / base.denominator + r
        t = t - mpmath.floor(t)
    if t == 0:
        raise DegeneratePhase(f"quantization target vanishes for m={m}")
    return t


def quantized_eigenvalues(lam, alpha: FrequencyCF, theta, m_range, tol: float = 1e-12,
                          delta_hat: float | None = None) -> list[EigenRecord]:
    """Eigenvalue candidates e_m = k^{-1}(frac(theta - 1/2 + m alpha)) for m in m_range."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    th = as_fraction(theta)
    if delta_hat is None:
        delta_hat = delta_index(alpha, th).value
    out = []
    for m in m_range:
        t = quantization_target(alpha, th, int(m))
        e = ids_inverse(lam, float(t), tol)
        out.append(EigenRecord(e, int(m), t, float(lyapunov(lam, e)), delta_hat, float(lam), th, alpha))
    return out


def default_decay_target(gamma: float, delta_hat: float) -> float:
    """rho = min(gamma/2, gamma - delta)/2, or gamma/4 when gamma <= delta."""
    if gamma > delta_hat:
        return min(gamma / 2, gamma - delta_hat) / 2
    return gamma / 4


def default_truncation(rho: float) -> int:
    return math.ceil(12 / rho)


def default_halfwidth(K: int) -> int:
    return max(4 * K, 256)


@dataclass(frozen=True)
class PsiSeries:
    """psi_k for k = 1..K; psi_{-k} = conj(psi_k), psi_0 = 0."""

    coeffs: np.ndarray
    truncation: int
    min_divisor: float
    rho: float
    zero_mode: float = 0.0     # the zeta_0 removed from the right-hand side

    def __getitem__(self, k: int) -> complex:
        if k == 0:
            return 0j
        if abs(k) > self.truncation:
            raise IndexError(k)
        c = complex(self.coeffs[abs(k) - 1])
        return c if k > 0 else c.conjugate()

    def as_dict(self) -> dict[int, complex]:
        d = {}
        for k in range(1, self.truncation + 1):
            d[k] = self[k]
            d[-k] = self[-k]
        return d

    def evaluate(self, x) -> np.ndarray:
        """psi(x) = 2 Re sum_k psi_k exp(-2 pi i k x)."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.truncation + 1)
        return 2 * np.real(np.exp(-2j * np.pi * np.multiply.outer(x, k)) @ self.coeffs)


def divisors(alpha: FrequencyCF, K: int) -> np.ndarray:
    """exp(-2 pi i k alpha) - 1 for k = 1..K, accurate even when ||k alpha|| is tiny."""
    r = np.array([float(alpha.residual(k)) for k in range(1, K + 1)])
    # exp(-i x) - 1 = -2 i sin(x/2) exp(-i x/2), with x = 2 pi r
    return -2j * np.sin(np.pi * r) * np.exp(-1j * np.pi * r)


def solve_cohomological(zeta: ZetaCoefficients, alpha: FrequencyCF, K: int,
                        divisor_floor: float = 0.0, drop_zero_mode: bool = False,
                        rho: float | None = None) -> PsiSeries:
    """psi_k = zeta_k/(exp(-2 pi i k alpha) - 1), 0 < k <= K, with a decay audit.

    Raises SmallDivisorBreakdown at the first k with |psi_k| > exp(-rho k), or
    with a divisor below divisor_floor that zeta_k does not compensate.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if zeta.n_max < K:
        raise ValueError(f"zeta data has {zeta.n_max} modes, need {K}")
    if rho is None:
        rho = zeta.gamma / 4
    d = divisors(alpha, K)
    z = zeta.coeffs[:K]
    absd = np.abs(d)
    psi = np.zeros(K, dtype=complex)
    nz = z != 0
    if np.any(nz & (absd == 0)):
        k = int(np.flatnonzero(nz & (absd == 0))[0]) + 1
        raise SmallDivisorBreakdown(k, math.inf, math.exp(-rho * k))
    psi[nz] = z[nz] / d[nz]
    ks = np.arange(1, K + 1)
    bound = np.exp(-rho * ks)
    bad = np.abs(psi) > bound
    if divisor_floor > 0:
        bad |= nz & (absd < divisor_floor) & (np.abs(z) > divisor_floor * bound)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SmallDivisorBreakdown(i + 1, float(abs(psi[i])), float(bound[i]))
    return PsiSeries(psi, K, float(absd.min()), float(rho), zeta.zeta0 if drop_zero_mode else 0.0)


@dataclass(frozen=True)
class EigenfunctionDiagnostics:
    record: EigenRecord
    halfwidth: int
    grid_points: int
    chat_modulus_error: float
    growth_factor: float
    residual: float
    decay_rate: float
    fit_window: tuple[int, int]


def _thomas(diag: complex, off: complex, rhs: np.ndarray, growth_bound: float) -> tuple[np.ndarray, float]:
    """Solve the constant-coefficient tridiagonal system by LU without pivoting."""
    n = rhs.size
    piv = np.empty(n, dtype=complex)
    y = np.empty(n, dtype=complex)
    piv[0] = diag
    y[0] = rhs[0]
    for i in range(1, n):
        l = off / piv[i - 1]
        piv[i] = diag - l * off
        y[i] = rhs[i] - l * y[i - 1]
    scale = max(abs(diag), abs(off))
    growth = float(max(np.abs(piv).max(), abs(off)) / scale)
    if not np.isfinite(growth) or growth > growth_bound or np.abs(piv).min() < scale / growth_bound:
        raise IllConditionedSolve(f"tridiagonal growth factor {growth:.3e} exceeds {growth_bound:.1e}")
    u = np.empty(n, dtype=complex)
    u[-1] = y[-1] / piv[-1]
    for i in range(n - 2, -1, -1):
        u[i] = (y[i] - off * u[i + 1]) / piv[i]
    return u, growth


def apply_operator(lam, alpha: FrequencyCF, theta, u: np.ndarray, N: int, e: float) -> np.ndarray:
    """(h - e) u on sites -N..N, zero outside."""
    x = orbit_phases(alpha, as_fraction(theta), -N, 2 * N + 1)
    pot = lam * np.tan(np.pi * x)
    out = (pot - e) * u
    out[:-1] += u[1:]
    out[1:] += u[:-1]
    return out


def fit_decay(u: np.ndarray, N: int, floor: float = 1e-12, core: int = 4) -> tuple[float, tuple[int, int]]:
    """Least-squares slope of ln|u_n| against |n - n_peak|.

    Only sites with |u_n| > floor * max|u| and at least ``core`` sites from the
    peak enter, so the fit avoids both the localization centre and the
    double-precision floor.
    """
    a = np.abs(u)
    peak = int(np.argmax(a))
    dist = np.abs(np.arange(a.size) - peak)
    keep = (a > floor * a[peak]) & (dist >= core)
    if keep.sum() < 4:
        return math.nan, (0, 0)
    slope = np.polyfit(dist[keep], np.log(a[keep]), 1)[0]
    return float(slope), (int(dist[keep].min()), int(dist[keep].max()))


def build_eigenfunction(record: EigenRecord, psi: PsiSeries, N: int | None = None,
                        grid_factor: int = 8,
                        growth_bound: float = DEFAULT_GROWTH_BOUND) -> tuple[np.ndarray, EigenfunctionDiagnostics]:
    """Eigenvector candidate u on -N..N for a quantized energy."""
    if N is None:
        N = default_halfwidth(psi.truncation)
    if N < 4 * psi.truncation:
        raise ValueError(f"half-width {N} below 4K = {4 * psi.truncation}")
    lam, e, m = record.lam, record.e, record.m
    M = 1 << max(int(math.ceil(math.log2(grid_factor * (2 * N + 1)))), int(math.ceil(math.log2(2 * psi.truncation + 1))))
    x = np.arange(M) / M
    P = np.zeros(M, dtype=complex)
    P[1:psi.truncation + 1] = psi.coeffs
    psi_x = 2 * np.real(np.fft.fft(P))             # sum_k psi_k e^{-2 pi i k j/M}, real by symmetry
    chat = np.exp(-2j * np.pi * (m * x + psi_x))
    cn = np.fft.ifft(chat)                         # c_n = int chat(x) e^{2 pi i n x} dx
    n = np.arange(-N, N + 1)
    c = cn[n % M]
    u, growth = _thomas(lam + 1j * e, -1j, lam * c, growth_bound)
    r = apply_operator(lam, record.alpha, record.theta, u, N, e)
    inner = slice(N - N // 2, N + N // 2 + 1)
    residual = float(np.linalg.norm(r[inner]) / np.linalg.norm(u[inner]))
    slope, window = fit_decay(u, N)
    rec = replace(record, residual=residual, decay_rate=slope)
    diag = EigenfunctionDiagnostics(rec, N, M, float(np.abs(np.abs(chat) - 1).max()), growth,
                                    residual, slope, window)
    return u, diag


def eigenfunction(record: EigenRecord, rho: float | None = None, K: int | None = None,
                  N: int | None = None) -> tuple[np.ndarray, EigenfunctionDiagnostics]:
    """Default pipeline: zeta data, cohomological solve, synthesis."""
    if rho is None:
        rho = default_decay_target(record.gamma, record.delta_hat)
    if K is None:
        K = default_truncation(rho)
    psi = solve_cohomological(zeta_coeffs(record.lam, record.e, K), record.alpha, K, rho=rho)
    return build_eigenfunction(record, psi, N)


@dataclass(frozen=True)
class TkReport:
    partial_sums: np.ndarray
    increments: np.ndarray
    cauchy: bool
    max_tk_residual: tuple[float, ...]   # max_k ||t_k alpha|| per level
    tk: tuple[int, ...]


def check_tk_condition(lam, e, alpha: FrequencyCF, theta, t_decay: float, K: int,
                       levels: int, zeta: ZetaCoefficients | None = None) -> TkReport:
    """Partial sums of sum_{0<|j|<=K} sup_k |(1 - e^{-2 pi i j t_k alpha})/(1 - e^{-2 pi i j alpha}) zeta_j| e^{t|j|}."""
    g = float(lyapunov(lam, e))
    if not 0 < t_decay <= g / 2 * (1 + 1e-12):
        raise ValueError("t_decay must lie in (0, gamma/2]")
    k = ids(lam, e)
    blocks = tk_blocks(alpha, float(k), levels)
    tk = [t for b in blocks for t in b]
    if zeta is None:
        zeta = zeta_coeffs(lam, e, K)
    res = {t: float(alpha.residual(t)) for t in set(tk)}
    per_level = tuple(max(abs(res[t]) for t in b) for b in blocks)
    j = np.arange(1, K + 1)
    rj = np.array([float(alpha.residual(int(i))) for i in j])
    den = 2 * np.abs(np.sin(np.pi * rj))
    r_t = np.array([res[t] for t in tk])
    num = 2 * np.abs(np.sin(np.pi * np.multiply.outer(j, r_t)))      # j * r_t reduced by sin's period
    ratio = num.max(axis=1) / den
    terms = 2 * ratio * np.abs(zeta.coeffs[:K]) * np.exp(t_decay * j)   # +-j contribute equally
    sums = np.cumsum(terms)
    tail = terms[-max(1, K // 10):]
    return TkReport(sums, terms, bool(np.all(tail < CAUCHY_THRESHOLD)), per_level, tuple(tk))


@dataclass(frozen=True)
class SupportTrace:
    trace: tuple[float, ...]
    in_support: bool


def support_membership(lam, alpha: FrequencyCF, theta, e: float, levels: int,
                       k=None) -> SupportTrace:
    """||q_n (k(e) - theta - 1/2)|| for n < levels; k may be supplied at high precision."""
    if levels > alpha.depth + 1:
        raise ValueError("not enough convergents")
    prec = alpha.default_precision()
    th = as_fraction(theta)
    with mpmath.workprec(prec):
        kk = mpmath.mpf(float(ids(lam, e))) if k is None else (
            mpmath.mpf(k.numerator) / k.denominator if isinstance(k, Fraction) else mpmath.mpf(k))
        base = th + Fraction(1, 2)
        x = kk - mpmath.mpf(base.numerator) / base.denominator
        tr = []
        for n in range(levels):
            y = alpha.q(n) * x
            tr.append(float(abs(y - mpmath.nint(y))))
    tail = tr[len(tr) // 2:]
    ok = all(b <= a for a, b in zip(tail, tail[1:])) and tail[-1] < 1e-3
    return SupportTrace(tuple(tr), ok)
