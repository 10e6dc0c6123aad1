"""Quantization-region update laws and their boundedness conditions.

Both schemes move the region center with the free dynamics, ``C+ = Lambda P_d``
with ``Lambda = exp(A T)``. They differ in how the range grows:

* set-based: ``L+ = |Lambda| (L / N) + beta_ue`` per axis, the interval hull
  of the flowed cell plus the input cube;
* norm-based: ``L+ = exp(|A| T) L / N + beta_ue``, a single cube radius.

The set-based range stays bounded iff ``|Lambda| / N`` is Schur, the norm-based
one iff ``exp(|A| T) / N < 1``. The former is always implied by the latter.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, induced_inf_norm, mat_exp, spectral_radius_nonneg
from .quantizer import DecodedPacket, QuantizerState, abs_matrix
from .sets import (
    Hyperrectangle,
    hypercube,
    hyperrect_to_zonotope,
    interval_hull,
    linear_map,
    minkowski_sum,
)

__all__ = [
    "SchemeKind",
    "FeasibilityReport",
    "FEASIBILITY_MARGIN",
    "set_based_update",
    "set_based_region_via_zonotopes",
    "norm_based_update",
    "feasibility_set",
    "feasibility_norm",
    "compare_schemes",
    "min_feasible_N",
    "set_eqbar_fixed_point",
    "norm_range_fixed_point",
    "norm_proof_ratio",
]

# strict inequality: an lhs of exactly 1 counts as infeasible
FEASIBILITY_MARGIN = 1e-10


class SchemeKind(enum.Enum):
    SET_BASED = "set"
    NORM_BASED = "norm"

    @classmethod
    def parse(cls, text: str) -> "SchemeKind":
        key = text.strip().lower().replace("-", "_")
        aliases = {"set": cls.SET_BASED, "set_based": cls.SET_BASED, "setbased": cls.SET_BASED,
                   "norm": cls.NORM_BASED, "norm_based": cls.NORM_BASED, "normbased": cls.NORM_BASED}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown scheme {text!r}") from None


@dataclass(frozen=True)
class FeasibilityReport:
    scheme: SchemeKind
    lhs: float
    feasible: bool
    margin: float  # 1 - lhs

    def __str__(self):
        verdict = "feasible" if self.feasible else "infeasible"
        return f"{self.scheme.value}: lhs={self.lhs:.6g} ({verdict}, margin {self.margin:.3g})"


def _report(kind, lhs):
    return FeasibilityReport(kind, lhs, lhs < 1.0 - FEASIBILITY_MARGIN, 1.0 - lhs)


def set_based_update(qs: QuantizerState, Pd: DecodedPacket, Lambda, Lambda_bar,
                     beta_ue_k: float, N: int) -> QuantizerState:
    C = np.asarray(Lambda) @ Pd.value
    L = np.asarray(Lambda_bar) @ (qs.L / N) + beta_ue_k
    return QuantizerState(C, L, qs.k + 1)


def set_based_region_via_zonotopes(qs: QuantizerState, Pd: DecodedPacket, Lambda,
                                   beta_ue_k: float, N: int) -> Hyperrectangle:
    """Same region as :func:`set_based_update`, built from set operations.

    Hull of ``Lambda * H(P_d, L/N)  (+)  B(0, beta_ue)``.
    """
    cell = hyperrect_to_zonotope(Hyperrectangle(Pd.value, qs.L / N), drop_zero=False)
    inflation = hyperrect_to_zonotope(hypercube(np.zeros(qs.C.size), beta_ue_k), drop_zero=False)
    return interval_hull(minkowski_sum(linear_map(Lambda, cell), inflation))


def norm_based_update(qs: QuantizerState, Pd: DecodedPacket, Lambda, A_norm: float,
                      T: float, beta_ue_k: float, N: int) -> QuantizerState:
    """Cube update. The center ODE ``dC/dt = A C`` is solved exactly as ``Lambda P_d``."""
    if np.ptp(qs.L) > 1e-12 * max(1.0, float(np.max(qs.L))):
        raise ValueError("norm-based scheme needs a cube region (all L entries equal)")
    C = np.asarray(Lambda) @ Pd.value
    radius = math.exp(A_norm * T) / N * float(qs.L[0]) + beta_ue_k
    return QuantizerState(C, np.full(qs.C.size, radius), qs.k + 1)


def _check(T, N):
    if not T > 0:
        raise ValueError("T must be positive")
    if N < 2:
        raise ValueError("N must be at least 2")


def feasibility_set(A, T: float, N: int) -> FeasibilityReport:
    _check(T, N)
    lam_bar = abs_matrix(mat_exp(as_matrix(A, "A", square=True), T))
    return _report(SchemeKind.SET_BASED, spectral_radius_nonneg(lam_bar / N))


def feasibility_norm(A, T: float, N: int) -> FeasibilityReport:
    _check(T, N)
    return _report(SchemeKind.NORM_BASED, math.exp(induced_inf_norm(A) * T) / N)


def compare_schemes(A, T: float, N: int) -> tuple[FeasibilityReport, FeasibilityReport]:
    """``(set_report, norm_report)``; the set lhs never exceeds the norm lhs."""
    return feasibility_set(A, T, N), feasibility_norm(A, T, N)


def min_feasible_N(A, T: float, scheme: SchemeKind, N_max: int = 1 << 20) -> int | None:
    """Smallest ``N >= 2`` meeting the scheme's condition, by increasing ``N``.

    Both conditions are ``lhs(1) / N < 1``, so the scan starts at the
    closed-form lower limit rather than 2.
    """
    check = feasibility_set if scheme is SchemeKind.SET_BASED else feasibility_norm
    base = check(A, T, 2).lhs * 2  # lhs with N = 1
    N = max(2, int(math.floor(base)))
    while N <= N_max:
        if check(A, T, N).feasible:
            return N
        N += 1
    return None


def set_eqbar_fixed_point(Lambda_bar, beta_ue_inf: float, N: int) -> np.ndarray:
    """Limit of the max-quantization-error recursion, ``(I - |Lambda|/N)^-1 (beta/N) 1``."""
    Lb = as_matrix(Lambda_bar, square=True)
    n = Lb.shape[0]
    return np.linalg.solve(np.eye(n) - Lb / N, beta_ue_inf / N * np.ones(n))


def norm_range_fixed_point(A_norm: float, T: float, beta_ue_inf: float, N: int) -> float:
    ratio = math.exp(A_norm * T) / N
    if ratio >= 1:
        raise ValueError("no fixed point: exp(|A| T) / N >= 1")
    return beta_ue_inf / (1.0 - ratio)


def norm_proof_ratio(A_norm: float, T: float, N: int) -> float:
    """``|A| T / N``, the contraction factor in the norm scheme's convergence
    argument (differs from the update law's ``exp(|A| T) / N``); diagnostic."""
    return A_norm * T / N
