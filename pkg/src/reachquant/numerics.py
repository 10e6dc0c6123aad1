"""Dense linear-algebra kernels used throughout the package.

Everything here works on plain numpy arrays. Vectors are 1-D, matrices 2-D.
The matrix norm used by every bound in the package is the norm induced by
the vector infinity norm (max absolute row sum); the column-sum variant is
kept as :func:`column_sum_norm` for comparison only.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = [
    "as_vector",
    "as_matrix",
    "inf_norm_vec",
    "induced_inf_norm",
    "column_sum_norm",
    "mat_exp",
    "spectral_radius_nonneg",
    "max_eig_symmetric",
    "min_eig_symmetric",
    "eig_symmetric",
    "rk4_step",
    "DivergenceError",
]


class DivergenceError(ArithmeticError):
    """Raised when an integration stage produces a non-finite value."""


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(M, name="matrix", square=False):
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def inf_norm_vec(v) -> float:
    """Max absolute component of ``v``."""
    return float(np.max(np.abs(as_vector(v))))


def induced_inf_norm(M) -> float:
    """Operator norm induced by the vector infinity norm: max absolute row sum.

    Accepts rectangular matrices (e.g. an n-by-1 input matrix).
    """
    M = as_matrix(M)
    return float(np.max(np.sum(np.abs(M), axis=1)))


def column_sum_norm(M) -> float:
    """Max absolute column sum of a square matrix.

    This is *not* compatible with the vector infinity norm, so nothing in the
    bound computations uses it.
    """
    M = as_matrix(M, square=True)
    return float(np.max(np.sum(np.abs(M), axis=0)))


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(M t)`` by scaling and squaring.

    The argument is scaled by ``2**-s`` so its induced infinity norm is at
    most 0.5, a Taylor series is summed until the terms stop contributing at
    machine precision, and the result is squared ``s`` times.

    Raises
    ------
    OverflowError
        If the result is not representable in double precision.
    """
    M = as_matrix(M, "M", square=True)
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    n = M.shape[0]
    X = M * t
    norm = induced_inf_norm(X)
    if norm == 0.0:
        return np.eye(n)
    s = max(0, int(math.ceil(math.log2(norm / 0.5))))
    if s > 1000:
        raise OverflowError(f"matrix exponential out of range (norm {norm:g})")
    X = X / (2.0 ** s)

    result = np.eye(n)
    term = np.eye(n)
    for j in range(1, 40):
        term = term @ X / j
        result = result + term
        if induced_inf_norm(term) <= 1e-18 * induced_inf_norm(result):
            break

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            result = result @ result
    if not np.all(np.isfinite(result)):
        raise OverflowError(f"matrix exponential out of range (norm {norm:g})")
    return result


def spectral_radius_nonneg(M, tol: float = 1e-9, max_doublings: int = 48) -> float:
    """Spectral radius of an entrywise nonnegative matrix.

    Uses Gelfand's formula on repeated squares, ``||M^(2^j)||^(1/2^j)``,
    keeping the powers normalised and tracking the scale in log space.
    """
    M = as_matrix(M, "M", square=True)
    if np.any(M < 0):
        raise ValueError("spectral_radius_nonneg requires a nonnegative matrix")
    nrm = induced_inf_norm(M)
    if nrm == 0.0:
        return 0.0
    B = M / nrm
    log_scale = math.log(nrm)  # log ||M^(2^j)|| before normalisation
    estimate = nrm
    for j in range(1, max_doublings + 1):
        B = B @ B
        log_scale *= 2.0
        nb = induced_inf_norm(B)
        if nb == 0.0:
            return 0.0
        B /= nb
        log_scale += math.log(nb)
        new = math.exp(log_scale / 2.0 ** j)
        # a nilpotent M has M^n = 0, so do not stop before 2^j >= n
        if 2 ** j >= M.shape[0] and abs(new - estimate) < tol:
            return new
        estimate = new
    return estimate


def eig_symmetric(S, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a symmetric matrix (ascending), cyclic Jacobi.

    ``S`` is symmetrised as ``(S + S.T) / 2``; inputs further than 1e-9 from
    symmetric are rejected.
    """
    S = as_matrix(S, "S", square=True)
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(S))):
        raise ValueError("matrix is not symmetric")
    a = (S + S.T) / 2.0
    n = a.shape[0]
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300 * scale:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff  # theta huge: t ~ 1 / (2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
    return np.sort(np.diag(a))


def max_eig_symmetric(S) -> float:
    return float(eig_symmetric(S)[-1])


def min_eig_symmetric(S) -> float:
    return float(eig_symmetric(S)[0])


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, z, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``dz/dt = f(t, z)``."""
    if not h > 0:
        raise ValueError("step size must be positive")
    z = np.asarray(z, dtype=float)
    k1 = np.asarray(f(t, z))
    k2 = np.asarray(f(t + 0.5 * h, z + 0.5 * h * k1))
    k3 = np.asarray(f(t + 0.5 * h, z + 0.5 * h * k2))
    k4 = np.asarray(f(t + h, z + h * k3))
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise DivergenceError(f"non-finite RK4 stage at t={t:g}")
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
