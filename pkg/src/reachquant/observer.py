"""Luenberger observer certificates and the ISS-type error envelopes they imply.

A certificate ``(P, Q, nu1, nu2)`` is produced offline by an LMI solver; this
module only checks it, derives ``K = P^{-1} Q`` and builds the closed-form
bound functions for the local estimation error and the reconstruction error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    as_matrix,
    induced_inf_norm,
    max_eig_symmetric,
    min_eig_symmetric,
)
from .plant import BoundsConfig, PlantModel

__all__ = [
    "ObserverCertificate",
    "ObserverGains",
    "VerificationReport",
    "BoundFunctions",
    "CertificateError",
    "LMI_TOLERANCE",
    "LMI_FORM",
    "lmi_matrix",
    "verify_certificate",
    "derive_gains",
    "make_bound_functions",
    "local_error_envelope",
    "reconstruction_error_envelope",
]

# slack for certificates printed to a few decimals
LMI_TOLERANCE = 1e-7
LMI_FORM = "[[A'P + PA + H'Q' + QH + nu1*I, P], [P, -nu2*I]] <= 0"


class CertificateError(ValueError):
    """Malformed certificate: wrong shapes, asymmetric or indefinite ``P``."""


@dataclass(frozen=True, eq=False)
class ObserverCertificate:
    P: np.ndarray
    Q: np.ndarray
    nu1: float
    nu2: float

    def __post_init__(self):
        P = as_matrix(self.P, "P", square=True)
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim == 1:
            Q = Q.reshape(-1, 1)
        Q = as_matrix(Q, "Q")
        if Q.shape[0] != P.shape[0]:
            raise CertificateError(f"Q must have {P.shape[0]} rows, got {Q.shape}")
        if np.max(np.abs(P - P.T)) > 1e-9:
            raise CertificateError("P is not symmetric")
        if min_eig_symmetric(P) <= 0:
            raise CertificateError("P is not positive definite")
        nu1, nu2 = float(self.nu1), float(self.nu2)
        if not (nu1 > 0 and nu2 > 0):
            raise CertificateError("nu1 and nu2 must be positive")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "nu1", nu1)
        object.__setattr__(self, "nu2", nu2)


@dataclass(frozen=True, eq=False)
class ObserverGains:
    K: np.ndarray
    Kr: np.ndarray
    lambda_e: float


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    max_eigenvalue: float
    tolerance: float = LMI_TOLERANCE
    form: str = LMI_FORM

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} (max LMI eigenvalue {self.max_eigenvalue:.6g}, tolerance {self.tolerance:g})"


def _check_dims(plant: PlantModel, cert: ObserverCertificate):
    n = plant.n
    if cert.P.shape != (n, n):
        raise CertificateError(f"P must be {n}x{n}, got {cert.P.shape}")
    if cert.Q.shape != (n, plant.ny):
        raise CertificateError(f"Q must be {n}x{plant.ny}, got {cert.Q.shape}")


def lmi_matrix(plant: PlantModel, cert: ObserverCertificate) -> np.ndarray:
    """The symmetric ``2n x 2n`` block matrix that must be negative semidefinite."""
    _check_dims(plant, cert)
    A, H, P, Q = plant.A, plant.H, cert.P, cert.Q
    n = plant.n
    top_left = A.T @ P + P @ A + H.T @ Q.T + Q @ H + cert.nu1 * np.eye(n)
    M = np.block([[top_left, P], [P, -cert.nu2 * np.eye(n)]])
    return (M + M.T) / 2.0


def verify_certificate(plant: PlantModel, cert: ObserverCertificate,
                       tol: float = LMI_TOLERANCE) -> VerificationReport:
    lam = max_eig_symmetric(lmi_matrix(plant, cert))
    return VerificationReport(passed=lam <= tol, max_eigenvalue=lam, tolerance=tol)


def derive_gains(cert: ObserverCertificate, plant: PlantModel) -> ObserverGains:
    """``K = K_r = P^{-1} Q`` and the Lyapunov decay rate ``nu1 / (n lambda_max(P))``."""
    _check_dims(plant, cert)
    K = np.linalg.solve(cert.P, cert.Q)
    lambda_e = cert.nu1 / (plant.n * max_eig_symmetric(cert.P))
    return ObserverGains(K=K, Kr=K.copy(), lambda_e=lambda_e)


@dataclass(frozen=True)
class BoundFunctions:
    """Closed-form envelopes of the estimation and reconstruction errors.

    ``beta_hat``/``beta_r`` are class-KL (linear in ``r``, decaying in ``s``);
    ``gamma_hat``/``gamma_r`` are linear gains. ``x_b`` and ``d_b`` are kept so
    the local envelope can be evaluated from time alone.
    """

    kl_coeff: float          # sqrt(n lambda_max / lambda_min)
    gain_coeff: float        # sqrt(n nu2 / (lambda_min lambda_e))
    lambda_e: float
    recon_input_gain: float  # |E| + |B| + |K_r H|
    x_b: float = 0.0
    d_b: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)

    def beta_hat(self, r, s):
        return self.kl_coeff * np.exp(-0.5 * self.lambda_e * np.asarray(s)) * np.asarray(r)

    def gamma_hat(self, r):
        return self.gain_coeff * np.asarray(r)

    def beta_r(self, r, s):
        return self.kl_coeff * np.exp(-0.5 * self.lambda_e * np.asarray(s)) * np.asarray(r)

    def beta_r_as_printed(self, r, s):
        """Growing-exponent variant, not class-KL; diagnostics only."""
        return self.kl_coeff * np.exp(0.5 * self.lambda_e * np.asarray(s)) * np.asarray(r)

    def gamma_r(self, s):
        return self.gain_coeff * self.recon_input_gain * np.asarray(s)

    def local_error_envelope(self, t):
        """Bound on ``|x(t) - xhat(t)|`` given ``|x(0) - x_c| <= x_b``."""
        return self.beta_hat(self.x_b, t) + self.gamma_hat(self.d_b)

    beta_d = local_error_envelope


def make_bound_functions(cert: ObserverCertificate, gains: ObserverGains,
                         plant: PlantModel, bounds: BoundsConfig) -> BoundFunctions:
    n = plant.n
    lmax = max_eig_symmetric(cert.P)
    lmin = min_eig_symmetric(cert.P)
    le = gains.lambda_e
    kl = math.sqrt(n * lmax / lmin)
    gain = math.sqrt(n * cert.nu2 / (lmin * le))
    recon = (induced_inf_norm(plant.E) + induced_inf_norm(plant.B)
             + induced_inf_norm(gains.Kr @ plant.H))
    return BoundFunctions(
        kl_coeff=kl, gain_coeff=gain, lambda_e=le, recon_input_gain=recon,
        x_b=bounds.x_b, d_b=bounds.d_b,
        extras={"lambda_max_P": lmax, "lambda_min_P": lmin},
    )


def local_error_envelope(fns: BoundFunctions, t):
    return fns.local_error_envelope(t)


def reconstruction_error_envelope(fns: BoundFunctions, er_tk, t_minus_tk,
                                  sup_u, sup_d, sup_ehat, sup_eq):
    """Reconstruction-error bound on ``[t_k, t)`` from the error at ``t_k`` and
    the suprema of ``|u|, |d|, |ehat|, |e_q|`` over ``[t_k, t]``."""
    worst = np.maximum(np.maximum(sup_u, sup_d), np.maximum(sup_ehat, sup_eq))
    return fns.beta_r(er_tk, t_minus_tk) + fns.gamma_r(worst)
