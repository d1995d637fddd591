"""Continued fractions, distances to the integers and the arithmetic indices.

Frequencies are held exactly as continued-fraction terms with big-integer
convergents.  Phases are exact rationals (``fractions.Fraction``); every
reduction ``q * x mod 1`` that feeds an index is done in exact or
high-precision arithmetic, never in doubles.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import DegeneratePhase, PrecisionExhausted, RationalInput

NEG_INF = float("-inf")
POS_INF = float("inf")

# Largest continued-fraction term (in bits) that ``cfgen:exp`` will materialise.
TERM_BIT_BUDGET = 1 << 20


# ---------------------------------------------------------------------------
# Frequencies
# ---------------------------------------------------------------------------


def _convergents(terms: Sequence[int]) -> tuple[tuple[int, int], ...]:
    """(p_n, q_n) for n = 0..len(terms), seeded with p_0/q_0 = 0/1."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = [(p, q)]
    for a in terms:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return tuple(out)


@dataclass(frozen=True)
class FrequencyCF:
    """An irrational frequency in (0, 1) given by its continued fraction.

    ``terms[i]`` is a_{i+1}; ``convergents[n]`` is (p_n, q_n) for
    n = 0..depth.  The exact value beyond the stored terms is determined by
    the source: a periodic continuation, a decimal, or the Liouville
    recipe a_{n+1} = ceil(exp(b q_n)).
    """

    terms: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    source: str
    spec: str = ""
    period: tuple[int, ...] | None = None
    liouville_rate: Fraction | None = None
    decimal: Fraction | None = None
    requested_depth: int | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def depth(self) -> int:
        return len(self.terms)

    def q(self, n: int) -> int:
        return self.convergents[n][1]

    def p(self, n: int) -> int:
        return self.convergents[n][0]

    @property
    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]

    def default_precision(self) -> int:
        """Working precision in bits for phase reductions at full depth."""
        return 64 + 4 * self.q(self.depth).bit_length()

    def _correction(self, prec: int) -> mpmath.mpf:
        """alpha - p_N/q_N at ``prec`` bits, N = depth."""
        key = ("corr", prec)
        if key in self._cache:
            return self._cache[key]
        N = self.depth
        pN, qN = self.convergents[N]
        pM, qM = self.convergents[N - 1] if N >= 1 else (1, 0)
        with mpmath.workprec(prec + 32):
            if self.decimal is not None:
                diff = self.decimal - Fraction(pN, qN)
                corr = mpmath.mpf(diff.numerator) / diff.denominator
            else:
                t = self._next_complete_quotient(prec + 32)
                # alpha = (pN t + pM)/(qN t + qM)  =>  alpha - pN/qN = (-1)^N / (qN (qN t + qM))
                corr = mpmath.mpf((-1) ** N) / (qN * (qN * t + qM))
        self._cache[key] = corr
        return corr

    def _next_complete_quotient(self, prec: int) -> mpmath.mpf:
        N = self.depth
        if self.period is not None:
            # tail [a_{N+1}; a_{N+2}, ...] of a purely periodic expansion
            P = len(self.period)
            shift = N % P
            rot = self.period[shift:] + self.period[:shift]
            return 1 / _periodic_value(rot, prec)
        if self.liouville_rate is not None:
            b = self.liouville_rate
            qN = self.q(N)
            return mpmath.exp(mpmath.mpf(b.numerator) / b.denominator * qN)
        raise ValueError("frequency has no tail model")

    def value(self, prec: int | None = None) -> mpmath.mpf:
        """alpha as an mpf at ``prec`` bits."""
        prec = prec or self.default_precision()
        pN, qN = self.convergents[self.depth]
        with mpmath.workprec(prec):
            return mpmath.mpf(pN) / qN + self._correction(prec)

    def __float__(self) -> float:
        return float(self.value(128))

    def residual(self, k: int, prec: int | None = None) -> mpmath.mpf:
        """Signed representative of k*alpha mod 1 in [-1/2, 1/2).

        The rational part k p_N / q_N is reduced exactly, so the result keeps
        full relative precision even when |k alpha| mod 1 is astronomically
        small.
        """
        prec = prec or self.default_precision()
        pN, qN = self.convergents[self.depth]
        r = Fraction((k * pN) % qN, qN)
        with mpmath.workprec(prec + 32):
            x = mpmath.mpf(r.numerator) / r.denominator + k * self._correction(prec)
            x = x - mpmath.floor(x + mpmath.mpf(0.5))
        return x

    def float_split(self) -> tuple[float, float, float]:
        """alpha = a1 + a2 + a3 with a1 on 26 bits, so j*a1 is exact for |j| < 2**27."""
        if "split" not in self._cache:
            with mpmath.workprec(200):
                v = self.value(200)
                a1 = math.floor(float(v) * 2**26) / 2**26
                rem = v - a1
                a2 = float(rem)
                a3 = float(rem - a2)
            self._cache["split"] = (a1, a2, a3)
        return self._cache["split"]


def _periodic_value(period: Sequence[int], prec: int) -> mpmath.mpf:
    """[0; a_1, ..., a_P, a_1, ...] as the positive root of a quadratic."""
    conv = _convergents(period)
    pP, qP = conv[-1]
    pM, qM = conv[-2]
    # alpha = (pP + pM alpha)/(qP + qM alpha)  <=>  qM a^2 + (qP - pM) a - pP = 0
    with mpmath.workprec(prec + 16):
        if qM == 0:
            # period of length one: q_0 = 1 so qM is never zero; kept for safety
            return mpmath.mpf(pP) / qP
        b = qP - pM
        disc = mpmath.sqrt(mpmath.mpf(b) ** 2 + 4 * qM * pP)
        return (2 * pP) / (b + disc)


def _cf_terms_of_fraction(x: Fraction, limit: int | None = None) -> list[int]:
    """Terms a_1, a_2, ... of x in [0, 1); finite since x is rational."""
    out = []
    x = x - math.floor(x)
    while x and (limit is None or len(out) < limit):
        y = 1 / x
        a = math.floor(y)
        out.append(a)
        x = y - a
    return out


_PAT_CFGEN = re.compile(r"^cfgen:exp:([^:]+):(\d+)$")
_PAT_CF = re.compile(r"^cf:\[([0-9,\s]+)\]$")
_PAT_DEC = re.compile(r"^dec:([-+]?[0-9]*\.?[0-9]+)@(\d+)$")
_PAT_RAT = re.compile(r"^\s*[-+]?\d+\s*/\s*\d+\s*$")

NAMED = {"golden": (1,), "sqrt2m1": (2,)}


def cf_expand(alpha_spec, depth: int, *, term_bit_budget: int = TERM_BIT_BUDGET) -> FrequencyCF:
    """Expand a frequency descriptor into ``depth`` certified terms.

    Accepted forms: ``golden``, ``sqrt2m1``, ``cf:[a1,...]`` (periodic
    continuation of the listed block), ``cfgen:exp:<b>:<levels>``,
    ``dec:<digits>@<bits>``, a bare decimal, or an existing FrequencyCF.
    ``cfgen`` stops early once a term would exceed ``term_bit_budget`` bits;
    the returned depth is then smaller than requested.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if isinstance(alpha_spec, FrequencyCF):
        alpha_spec = alpha_spec.spec
    if not isinstance(alpha_spec, str):
        raise TypeError(f"unsupported frequency descriptor {alpha_spec!r}")
    s = alpha_spec.strip()

    if s in NAMED:
        period = NAMED[s]
        terms = tuple(period[i % len(period)] for i in range(depth))
        return FrequencyCF(terms, _convergents(terms), "named-constant", s, period=period,
                           requested_depth=depth)

    m = _PAT_CF.match(s)
    if m:
        period = tuple(int(t) for t in m.group(1).split(",") if t.strip())
        if not period or any(a < 1 for a in period):
            raise ValueError(f"continued-fraction terms must be positive: {s}")
        terms = tuple(period[i % len(period)] for i in range(depth))
        return FrequencyCF(terms, _convergents(terms), "explicit-CF-terms", s, period=period,
                           requested_depth=depth)

    m = _PAT_CFGEN.match(s)
    if m:
        b = Fraction(m.group(1))
        if b <= 0:
            raise ValueError("cfgen rate must be positive")
        levels = min(int(m.group(2)), depth)
        terms: list[int] = []
        q_prev, q = 0, 1
        for _ in range(levels):
            nats = b * q
            bits = int(float(nats) / math.log(2)) + 2
            if bits > term_bit_budget:
                break
            with mpmath.workprec(bits + 64):
                a = int(mpmath.ceil(mpmath.exp(mpmath.mpf(nats.numerator) / nats.denominator)))
            terms.append(a)
            q, q_prev = a * q + q_prev, q
        terms_t = tuple(terms)
        return FrequencyCF(terms_t, _convergents(terms_t), "explicit-CF-terms", s,
                           liouville_rate=b, requested_depth=depth)

    if _PAT_RAT.match(s):
        raise RationalInput(f"{s} is rational")

    m = _PAT_DEC.match(s)
    if m:
        digits, bits = m.group(1), int(m.group(2))
    elif re.match(r"^[-+]?[0-9]*\.[0-9]+$", s):
        digits = s
        bits = int(len(s.split(".")[1]) * math.log2(10))
    else:
        raise ValueError(f"unrecognised frequency descriptor {s!r}")
    x = Fraction(digits)
    x -= math.floor(x)
    if x == 0:
        raise RationalInput(f"{s} is an integer")
    eps = Fraction(1, 2**bits)
    lo = _cf_terms_of_fraction(max(x - eps, Fraction(0)), depth + 2)
    hi = _cf_terms_of_fraction(min(x + eps, Fraction(1) - Fraction(1, 2**(bits + 8))), depth + 2)
    certified = 0
    while certified < min(len(lo), len(hi)) and lo[certified] == hi[certified]:
        certified += 1
    own = _cf_terms_of_fraction(x, certified + 3)
    if len(own) <= certified + 1:
        raise RationalInput(f"{s} has a terminating continued fraction within {bits} bits")
    if certified < depth:
        raise PrecisionExhausted(f"{s} certifies only {certified} terms, {depth} requested")
    terms_t = tuple(lo[:depth])
    return FrequencyCF(terms_t, _convergents(terms_t), "decimal-with-precision", s,
                       decimal=x, requested_depth=depth)


# ---------------------------------------------------------------------------
# Distances and phases
# ---------------------------------------------------------------------------


def dist_to_Z(x):
    """||x||_{R/Z}: distance from x to the nearest integer.

    Exact for ints and Fractions, high precision for mpf, double for floats.
    """
    if isinstance(x, (int, Fraction)):
        r = Fraction(x) - math.floor(x)
        return min(r, 1 - r)
    if isinstance(x, mpmath.mpf):
        return abs(x - mpmath.nint(x))
    if isinstance(x, np.ndarray):
        return np.abs(x - np.round(x))
    x = float(x)
    return abs(x - round(x))


def as_fraction(x) -> Fraction:
    """Exact rational value of a phase-like input (floats are taken bit-exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, mpmath.mpf):
        sign, man, exp, _ = x._mpf_
        if not man and exp:
            raise ValueError(f"non-finite phase {x!r}")
        return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** exp
    return Fraction(float(x))


@dataclass(frozen=True)
class Phase:
    """A phase theta in [0, 1) held exactly."""

    theta: Fraction
    exclusion_margin: float

    def __float__(self) -> float:
        return float(self.theta)

    def split(self) -> tuple[float, float]:
        hi = float(self.theta)
        return hi, float(self.theta - Fraction(hi))


def orbit_phases(alpha: FrequencyCF, theta, start: int, count: int) -> np.ndarray:
    """frac(theta + j alpha) for j = start..start+count-1, accurate to a few ulps."""
    th = theta.theta if isinstance(theta, Phase) else as_fraction(theta)
    j = np.arange(start, start + count, dtype=np.float64)
    if count and max(abs(start), abs(start + count)) >= 2**27:
        raise ValueError("orbit index beyond the exact-split range 2**27")
    a1, a2, a3 = alpha.float_split()
    t_hi = float(th)
    t_lo = float(th - Fraction(t_hi))
    x = np.mod(j * a1, 1.0)          # exact
    x = x + np.mod(t_hi, 1.0)
    x = x + (j * a2 + (j * a3 + t_lo))
    return np.mod(x, 1.0)


def as_phase(theta, alpha: FrequencyCF | None = None, window: int = 1000) -> Phase:
    """Validate a phase; reject theta on the singular lattice 1/2 + alpha Z + Z."""
    if isinstance(theta, Phase):
        return theta
    th = as_fraction(theta)
    th -= math.floor(th)
    if th == Fraction(1, 2):
        raise DegeneratePhase("theta = 1/2 puts the n = 0 site on a pole")
    margin = float(dist_to_Z(th - Fraction(1, 2)))
    if alpha is not None:
        xs = orbit_phases(alpha, th, -window, 2 * window + 1)
        gaps = np.abs(xs - 0.5)
        margin = float(np.min(gaps))
        near = np.flatnonzero(gaps < 1e-9)
        if near.size:
            # double resolution is not enough here; redo the near hits exactly
            prec = alpha.default_precision()
            base = th - Fraction(1, 2)
            with mpmath.workprec(prec):
                b = mpmath.mpf(base.numerator) / base.denominator
                margin = min(float(dist_to_Z(b + alpha.residual(int(j) - window, prec))) for j in near)
        if margin == 0.0:
            raise DegeneratePhase("theta lies on 1/2 + alpha Z + Z")
    return Phase(th, margin)


# ---------------------------------------------------------------------------
# Indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexEstimate:
    """Tail-window maximum of an index trace (a finite-depth limsup proxy)."""

    value: float
    depth: int
    trace: tuple[float, ...]
    window: int
    diverging: bool = False

    def finite_trace(self) -> list[float]:
        return [t for t in self.trace if t != NEG_INF]


def tail_value(trace: Sequence[float], window: int | None = None,
               ceiling: float | None = None) -> tuple[float, int, bool]:
    """(value, window, diverging) for a trace.

    Diverging means two consecutive entries above ``ceiling``; the value is
    then the +inf sentinel. -inf entries are ignored by the maximum.
    """
    n = len(trace)
    if window is None:
        window = max(1, n // 2)
    window = max(1, min(window, n)) if n else 0
    if ceiling is not None:
        for a, b in zip(trace, trace[1:]):
            if a > ceiling and b > ceiling:
                return POS_INF, window, True
    tail = [t for t in trace[n - window:] if t != NEG_INF]
    return (max(tail) if tail else NEG_INF), window, False


def _ln(x: Fraction | mpmath.mpf, prec: int) -> float:
    with mpmath.workprec(prec):
        if isinstance(x, Fraction):
            x = mpmath.mpf(x.numerator) / x.denominator
        return float(mpmath.log(x))


def delta_trace_entry(q_n: int, q_next: int, x: Fraction, prec: int) -> float:
    """(ln||q_n x|| + ln q_{n+1}) / q_n, with x = theta - 1/2 exact."""
    d = dist_to_Z(q_n * x)
    if d == 0:
        return NEG_INF
    return (_ln(d, prec) + math.log(q_next)) / q_n


def delta_index(alpha: FrequencyCF, theta, depth: int | None = None,
                window: int | None = None, ceiling: float = 1e3) -> IndexEstimate:
    """Finite-depth estimate of the phase index delta(alpha, theta)."""
    ph = as_phase(theta)
    x = ph.theta - Fraction(1, 2)
    levels = alpha.depth if depth is None else min(depth, alpha.depth)
    prec = 64 + 4 * alpha.q(levels).bit_length()
    trace = tuple(delta_trace_entry(alpha.q(n), alpha.q(n + 1), x, prec) for n in range(levels))
    value, window, div = tail_value(trace, window, ceiling)
    return IndexEstimate(value, levels, trace, window, div)


def beta_index(alpha: FrequencyCF, depth: int | None = None,
               window: int | None = None) -> IndexEstimate:
    """Finite-depth estimate of beta(alpha) = limsup ln q_{n+1} / q_n."""
    levels = alpha.depth if depth is None else min(depth, alpha.depth)
    trace = tuple(math.log(alpha.q(n + 1)) / alpha.q(n) for n in range(levels))
    value, window, div = tail_value(trace, window)
    return IndexEstimate(value, levels, trace, window, div)


# ---------------------------------------------------------------------------
# t_k sequence and localized phases
# ---------------------------------------------------------------------------


def tk_multiplicity(q_n: int, q_next: int, dist) -> int:
    """l_n = min(floor(q_n^2/||q_n k||), floor(2 q_{n+1}/q_n)), clamped to >= 1."""
    second = (2 * q_next) // q_n
    dist = as_fraction(dist)
    if dist == 0:
        ell = second
    else:
        ell = min(math.floor(q_n * q_n / dist), second)
    return max(1, ell)


def tk_blocks(alpha: FrequencyCF, k_of_e, depth: int | None = None) -> list[list[int]]:
    """Per-level blocks [q_n, 2 q_n, ..., l_n q_n] of the t_k sequence."""
    levels = alpha.depth if depth is None else min(depth, alpha.depth)
    k = as_fraction(k_of_e)
    blocks = []
    for n in range(levels):
        q_n, q_next = alpha.q(n), alpha.q(n + 1)
        ell = tk_multiplicity(q_n, q_next, dist_to_Z(q_n * k))
        blocks.append([j * q_n for j in range(1, ell + 1)])
    return blocks


def build_tk(alpha: FrequencyCF, k_of_e, depth: int | None = None) -> list[int]:
    """Concatenated t_k sequence used by the quantization argument."""
    return [t for block in tk_blocks(alpha, k_of_e, depth) for t in block]


def localized_phase(alpha: FrequencyCF, depth: int | None = None, seed: int = 0,
                    start_level: int = 0, factor: int = 10) -> Phase:
    """A phase with ||q_n(theta - 1/2)|| < factor * q_n/q_{n+1} at every level.

    Nested intervals: at each constrained level the point x = theta - 1/2 is
    confined to a half-radius neighbourhood of some j/q_n inside the current
    interval, the seed choosing j.  Levels where the bound exceeds 1/2 are
    vacuous and skipped.  The final point is drawn from the last interval.
    """
    levels = alpha.depth if depth is None else min(depth, alpha.depth)
    rng = random.Random(seed)
    lo, hi = Fraction(0), Fraction(1)
    for n in range(start_level, levels):
        q_n, q_next = alpha.q(n), alpha.q(n + 1)
        r = Fraction(factor * q_n, q_next)
        if r >= Fraction(1, 2):
            continue
        rad = r / (2 * q_n)
        j_min = math.ceil((lo + rad) * q_n)
        j_max = math.floor((hi - rad) * q_n)
        if j_max < j_min:
            raise RuntimeError(f"nested-interval construction failed at level {n}")
        j = rng.randint(j_min, j_max)
        c = Fraction(j, q_n)
        lo, hi = c - rad, c + rad
    # a seeded point strictly inside the final interval, on a fine dyadic grid
    grid = 2**64
    u = Fraction(rng.randrange(1, grid), grid)
    x = lo + (hi - lo) * u
    th = (x + Fraction(1, 2)) % 1
    return as_phase(th, alpha)


def random_phase(seed: int, bits: int = 256) -> Fraction:
    """A uniformly drawn dyadic phase in (0, 1)."""
    rng = random.Random(seed)
    return Fraction(rng.getrandbits(bits) | 1, 2**bits)
