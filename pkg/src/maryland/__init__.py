"""Spectral numerics for the Maryland model h = Delta + lam tan(pi (theta + n alpha))."""

from .arithmetics import (FrequencyCF, IndexEstimate, Phase, as_phase, beta_index, build_tk,
                          cf_expand, delta_index, dist_to_Z, localized_phase, orbit_phases,
                          random_phase)
from .closed_forms import ids, ids_inverse, lyapunov, zeta_coeffs, zeta_function
from .cocycles import CocycleMatrix, LEEstimate, i_epsilon, le_numeric, product
from .eigensystem import (EigenRecord, PsiSeries, build_eigenfunction, eigenfunction,
                          quantized_eigenvalues, solve_cohomological)
from .errors import (DegeneratePhase, IllConditionedSolve, MarylandError, PrecisionExhausted,
                     RationalInput, SingularityHit, SmallDivisorBreakdown, TargetOutOfRange)
from .spectral_report import SpectralVerdict, classify, finite_volume_ids, theta_constancy_check

__version__ = "0.1.0"
