"""Plant description ``dx/dt = A x + B u + E d``, ``y = H x`` and its a-priori bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, as_vector

__all__ = ["PlantModel", "BoundsConfig", "observability_rank"]


@dataclass(frozen=True, eq=False)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A", square=True)
        B = as_matrix(self.B, "B")
        E = as_matrix(self.E, "E")
        H = as_matrix(self.H, "H")
        n = A.shape[0]
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        if E.shape[0] != n:
            raise ValueError(f"E must have {n} rows, got {E.shape}")
        if H.shape[1] != n:
            raise ValueError(f"H must have {n} columns, got {H.shape}")
        for name, M in zip("ABEH", (A, B, E, H)):
            object.__setattr__(self, name, M)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def o(self) -> int:
        return self.E.shape[1]

    @property
    def ny(self) -> int:
        return self.H.shape[0]


def observability_rank(plant: PlantModel) -> int:
    """Rank of ``[H; HA; ...; HA^(n-1)]``. Diagnostic only; nothing gates on it."""
    blocks = [plant.H]
    for _ in range(plant.n - 1):
        blocks.append(blocks[-1] @ plant.A)
    return int(np.linalg.matrix_rank(np.vstack(blocks)))


@dataclass(frozen=True, eq=False)
class BoundsConfig:
    """Initial state box ``B(x_c, x_b)`` and sup-norm bounds on ``Bu`` and ``Ed``."""

    x_c: np.ndarray
    x_b: float
    u_b: float
    d_b: float

    def __post_init__(self):
        object.__setattr__(self, "x_c", as_vector(self.x_c, "x_c"))
        for name in ("x_b", "u_b", "d_b"):
            v = float(getattr(self, name))
            if not v >= 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)
