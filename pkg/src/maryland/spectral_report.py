"""Spectral-type verdicts and finite-volume cross-checks.

The verdict compares the phase index delta(alpha, theta) with the Lyapunov
exponent: point spectrum where gamma(e) >= delta, singular continuous where
gamma(e) < delta. gamma is even and increasing in |e|, so the singular
continuous part is an interval [-e*, e*] around the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arithmetics import FrequencyCF, IndexEstimate, as_fraction, delta_index, orbit_phases
from .closed_forms import gamma_inverse, lyapunov
from .errors import SingularityHit

SCHEMA = "maryland.verdict/1"
SC_EVERYWHERE, MIXED, PP_EVERYWHERE = "SC_everywhere", "mixed", "PP_everywhere"
CASE_NUMBER = {SC_EVERYWHERE: 1, MIXED: 2, PP_EVERYWHERE: 3}
ROOT_TOL = 1e-9


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


@dataclass(frozen=True)
class SpectralVerdict:
    case_id: str
    delta_hat: IndexEstimate
    gamma_at_zero: float
    boundary_energies: tuple[float, float] | None
    sc_interval: tuple[float, float] | None
    pp_region: str
    ac_set: tuple = ()

    @property
    def case_number(self) -> int:
        return CASE_NUMBER[self.case_id]

    def to_dict(self) -> dict:
        d = self.delta_hat
        return {
            "schema": SCHEMA,
            "case": self.case_number,
            "case_id": self.case_id,
            "delta_hat": _finite_or_none(d.value),
            "delta_diverging": d.diverging,
            "gamma0": self.gamma_at_zero,
            "boundary": list(self.boundary_energies) if self.boundary_energies else None,
            "sc_interval": [_finite_or_none(x) for x in self.sc_interval] if self.sc_interval else None,
            "pp_region": self.pp_region,
            "ac": [],
            "depth": d.depth,
            "window": d.window,
            "trace": [_finite_or_none(t) for t in d.trace],
        }


def classify(lam, alpha: FrequencyCF, theta, depth: int | None = None, window: int | None = None,
             ceiling: float = 1e3, root_tol: float = ROOT_TOL) -> SpectralVerdict:
    est = delta_index(alpha, theta, depth, window, ceiling)
    g0 = float(lyapunov(lam, 0.0))
    if est.diverging:
        return SpectralVerdict(SC_EVERYWHERE, est, g0, None, (-math.inf, math.inf), "empty")
    if est.value <= g0:
        return SpectralVerdict(PP_EVERYWHERE, est, g0, None, None, "R")
    e_star = gamma_inverse(lam, est.value, root_tol)
    return SpectralVerdict(MIXED, est, g0, (-e_star, e_star), (-e_star, e_star), f"|e| >= {e_star!r}")


def _potential(lam, alpha: FrequencyCF, theta, N: int, guard: float) -> np.ndarray:
    x = orbit_phases(alpha, as_fraction(theta), -N, 2 * N + 1)
    c = np.cos(np.pi * x)
    bad = np.flatnonzero((np.abs(c) <= guard) | (x == 0.5))
    if bad.size:
        j = int(bad[0]) - N
        raise SingularityHit(j, float(x[bad[0]]),
                             f"orbit site {j} hits the pole; shift theta by a small jitter and retry")
    return lam * np.sin(np.pi * x) / c


def sturm_count(diag: np.ndarray, energies) -> np.ndarray:
    """Number of eigenvalues below each energy of tridiag(1, diag, 1).

    Uses the LDL^T pivot recurrence r_n = d_n - e - 1/r_{n-1}; the count of
    negative pivots equals the count of eigenvalues below e.  Zero pivots are
    nudged to a tiny positive value.
    """
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    count = np.zeros(e.shape, dtype=np.int64)
    tiny = 1e-300
    r = np.ones_like(e)
    prev_inv = np.zeros_like(e)
    for d in diag:
        r = d - e - prev_inv
        r[r == 0] = tiny
        count += r < 0
        prev_inv = 1.0 / r
    return count


def finite_volume_ids(lam, alpha: FrequencyCF, theta, e, N: int, guard: float = 1e-12):
    """Fraction of eigenvalues below e for the truncation to [-N, N]."""
    if N < 100:
        raise ValueError("N must be >= 100")
    diag = _potential(lam, alpha, theta, N, guard)
    out = sturm_count(diag, e) / (2 * N + 1)
    return float(out[0]) if np.ndim(e) == 0 else out


def theta_constancy_check(lam, alpha: FrequencyCF, theta_pair: Sequence, e_grid, N: int,
                          guard: float = 1e-12) -> float:
    """max_e |N_theta1(e) - N_theta2(e)| for the finite-volume counting functions."""
    t1, t2 = theta_pair
    a = finite_volume_ids(lam, alpha, t1, np.asarray(e_grid, dtype=float), N, guard)
    b = finite_volume_ids(lam, alpha, t2, np.asarray(e_grid, dtype=float), N, guard)
    return float(np.max(np.abs(a - b)))
