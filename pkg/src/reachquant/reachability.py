"""Terminal reachable-set over-approximation for ``dx/dt = A x + w``, ``|w| <= mu``.

Over one inter-transmission interval ``T`` the terminal set from ``X0`` is
contained in ``exp(A T) X0 (+) B(0, beta)`` with
``beta = exp(|A| T) mu / |A|`` (``|.|`` the induced infinity norm).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, induced_inf_norm, mat_exp
from .observer import BoundFunctions
from .sets import Zonotope, hypercube, hyperrect_to_zonotope, linear_map, minkowski_sum

__all__ = [
    "ReachParams",
    "DegenerateDynamicsError",
    "beta_inflation",
    "terminal_reach_overapprox",
    "beta_ue",
    "beta_ue_bar",
    "beta_d",
]


class DegenerateDynamicsError(ZeroDivisionError):
    """``|A| = 0``: the inflation formula divides by the norm of ``A``."""


@dataclass(frozen=True, eq=False)
class ReachParams:
    A: np.ndarray
    T: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "A", as_matrix(self.A, "A", square=True))
        if not float(self.T) > 0:
            raise ValueError("T must be positive")
        if not float(self.mu) >= 0:
            raise ValueError("mu must be nonnegative")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "mu", float(self.mu))


def _inflation(A_norm: float, T: float, w: float, allow_degenerate: bool) -> float:
    if A_norm == 0.0:
        if not allow_degenerate:
            raise DegenerateDynamicsError("|A| = 0; pass allow_degenerate=True for the T*mu limit")
        return T * w
    return math.exp(A_norm * T) * w / A_norm


def beta_inflation(params: ReachParams, allow_degenerate: bool = False) -> float:
    """Radius of the cube absorbing the input contribution over ``[0, T]``.

    With ``allow_degenerate`` the ``|A| -> 0`` limit ``T * mu`` is returned
    instead of raising.
    """
    return _inflation(induced_inf_norm(params.A), params.T, params.mu, allow_degenerate)


def terminal_reach_overapprox(params: ReachParams, X0: Zonotope,
                              allow_degenerate: bool = False) -> Zonotope:
    if X0.dim != params.A.shape[0]:
        raise ValueError(f"X0 has dimension {X0.dim}, A is {params.A.shape}")
    beta = beta_inflation(params, allow_degenerate)
    flowed = linear_map(mat_exp(params.A, params.T), X0)
    ball = hyperrect_to_zonotope(hypercube(np.zeros(X0.dim), beta))
    return minkowski_sum(flowed, ball)


def beta_ue(A_norm: float, T: float, u_b: float, KH_norm: float, beta_d_tk: float,
            allow_degenerate: bool = False) -> float:
    """Inflation radius for the observer driven by ``Bu - KH ehat`` over ``[t_k, t_k + T]``.

    ``|Bu| <= u_b`` and ``|ehat(t)| <= beta_d(t) <= beta_d(t_k)`` on the interval.
    """
    for name, v in (("u_b", u_b), ("KH_norm", KH_norm), ("beta_d_tk", beta_d_tk)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative")
    return _inflation(A_norm, T, u_b + KH_norm * beta_d_tk, allow_degenerate)


def beta_ue_bar(A_norm: float, T: float, u_b: float, KH_norm: float, beta_d_0: float) -> float:
    """Tighter ``(exp(|A|T) - 1) / |A|`` constant, the exact integral of
    ``exp(|A| s)`` over ``[0, T]``. Bounds the inflation at the end of the
    interval only; the update laws default to :func:`beta_ue`."""
    w = u_b + KH_norm * beta_d_0
    if A_norm == 0.0:
        return T * w
    return math.expm1(A_norm * T) * w / A_norm


def beta_d(fns: BoundFunctions, t):
    """Radius of the cube holding the local estimation error at time ``t``."""
    return fns.local_error_envelope(t)
