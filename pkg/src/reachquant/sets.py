"""Zonotopes and axis-aligned boxes.

A zonotope is stored as a center vector plus an ``n x p`` generator matrix
whose columns are the generators; ``p == 0`` is a single point. Generators
are never reduced: the quantization schemes only hull one-step images, so
the generator count stays at ``2n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, as_vector

__all__ = [
    "Zonotope",
    "Hyperrectangle",
    "hypercube",
    "minkowski_sum",
    "linear_map",
    "interval_hull",
    "hyperrect_to_zonotope",
    "contains_point",
    "CONTAINMENT_SLACK",
]

# absorbs integration round-off on the closed boundary
CONTAINMENT_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Zonotope:
    """``{c + G @ eps : eps in [-1, 1]^p}``."""

    center: np.ndarray
    generators: np.ndarray

    __array_ufunc__ = None  # lets ``ndarray @ Zonotope`` reach __rmatmul__

    def __post_init__(self):
        c = as_vector(self.center, "center")
        G = np.asarray(self.generators, dtype=float)
        if G.size == 0:
            G = np.zeros((c.size, 0))
        if G.ndim != 2 or G.shape[0] != c.size:
            raise ValueError(
                f"generators must have shape ({c.size}, p), got {G.shape}")
        if not np.all(np.isfinite(G)):
            raise ValueError("generators have non-finite entries")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def order(self) -> int:
        """Number of generators."""
        return self.generators.shape[1]

    def point(self, eps) -> np.ndarray:
        """The member ``c + G @ eps`` for a coefficient vector ``eps``."""
        eps = np.asarray(eps, dtype=float)
        if eps.shape != (self.order,):
            raise ValueError(f"expected {self.order} coefficients, got {eps.shape}")
        return self.center + self.generators @ eps

    def __add__(self, other):
        return minkowski_sum(self, other)

    def __rmatmul__(self, K):
        return linear_map(K, self)

    def __repr__(self):
        return f"Zonotope(center={self.center.tolist()}, generators={self.generators.tolist()})"


@dataclass(frozen=True, eq=False)
class Hyperrectangle:
    """Box ``{x : |x_i - c_i| <= h_i}``; a hypercube when all ``h_i`` agree."""

    center: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        c = as_vector(self.center, "center")
        h = as_vector(self.half_widths, "half_widths")
        if h.size != c.size:
            raise ValueError(f"dimension mismatch: center {c.size}, half_widths {h.size}")
        if np.any(h < 0):
            raise ValueError("half_widths must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", h)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_widths

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_widths

    def __contains__(self, x):
        return contains_point(self, x)

    def __eq__(self, other):
        if not isinstance(other, Hyperrectangle):
            return NotImplemented
        return (np.array_equal(self.center, other.center)
                and np.array_equal(self.half_widths, other.half_widths))

    def __repr__(self):
        return (f"Hyperrectangle(center={self.center.tolist()}, "
                f"half_widths={self.half_widths.tolist()})")


def hypercube(center, radius: float) -> Hyperrectangle:
    """Cube of half-width ``radius`` around ``center``."""
    c = as_vector(center, "center")
    return Hyperrectangle(c, np.full(c.size, float(radius)))


def minkowski_sum(Za: Zonotope, Zb: Zonotope) -> Zonotope:
    if Za.dim != Zb.dim:
        raise ValueError(f"dimension mismatch: {Za.dim} vs {Zb.dim}")
    return Zonotope(Za.center + Zb.center, np.hstack((Za.generators, Zb.generators)))


def linear_map(K, Z: Zonotope) -> Zonotope:
    K = as_matrix(K, "K")
    if K.shape[1] != Z.dim:
        raise ValueError(f"cannot apply a {K.shape} matrix to a {Z.dim}-dimensional zonotope")
    return Zonotope(K @ Z.center, K @ Z.generators)


def interval_hull(Z: Zonotope) -> Hyperrectangle:
    """Tightest axis-aligned box containing ``Z``."""
    return Hyperrectangle(Z.center.copy(), np.sum(np.abs(Z.generators), axis=1))


def hyperrect_to_zonotope(H: Hyperrectangle, drop_zero=True) -> Zonotope:
    """Axis-aligned generators ``h_i * e_i``; zero-width axes are dropped by default."""
    G = np.diag(H.half_widths)
    if drop_zero:
        G = G[:, H.half_widths > 0]
    return Zonotope(H.center.copy(), G)


def contains_point(H: Hyperrectangle, x, slack: float = CONTAINMENT_SLACK) -> bool:
    x = as_vector(x, "x")
    if x.size != H.dim:
        raise ValueError(f"dimension mismatch: box {H.dim}, point {x.size}")
    return bool(np.all(np.abs(x - H.center) <= H.half_widths + slack))
