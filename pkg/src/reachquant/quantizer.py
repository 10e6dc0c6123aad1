"""Uniform per-axis quantizer over a box ``H(C, L) = [C - L, C + L]``.

Each axis is cut into ``N`` cells of width ``2 L_i / N``. The encoder sends the
cell index, the decoder returns the cell centroid, so the per-axis error is at
most ``L_i / N``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, as_vector
from .sets import CONTAINMENT_SLACK

__all__ = [
    "QuantizerConfig",
    "QuantizerState",
    "EncodedPacket",
    "DecodedPacket",
    "QuantizerOverflow",
    "encode",
    "decode",
    "max_qerror_step",
    "abs_matrix",
    "pack_packet",
    "unpack_packet",
    "packet_bits",
    "packet_from_bits",
]


class QuantizerOverflow(RuntimeError):
    """The value to encode lies outside the quantization region."""

    def __init__(self, axis, value, lower, upper, k=None):
        self.axis, self.value, self.lower, self.upper, self.k = axis, value, lower, upper, k
        where = "" if k is None else f" at step {k}"
        super().__init__(
            f"quantizer overflow{where} on axis {axis}: {value!r} outside [{lower!r}, {upper!r}]")


@dataclass(frozen=True)
class QuantizerConfig:
    N: int
    n: int
    Br: int | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.Br is not None and self.Br != self.n * math.log2(self.N):
            raise ValueError(f"Br={self.Br} bits cannot give N={self.N} levels on {self.n} axes")

    @classmethod
    def from_bits(cls, Br: int, n: int) -> "QuantizerConfig":
        if Br < 1 or Br % n:
            raise ValueError(f"Br={Br} must be a positive multiple of n={n}")
        return cls(N=2 ** (Br // n), n=n, Br=Br)

    @property
    def bits(self) -> float:
        """Channel bits per transmission, ``n log2 N``."""
        return self.n * math.log2(self.N)


@dataclass(frozen=True, eq=False)
class QuantizerState:
    C: np.ndarray
    L: np.ndarray
    k: int = 0

    def __post_init__(self):
        C = as_vector(self.C, "C")
        L = as_vector(self.L, "L")
        if L.size != C.size:
            raise ValueError("C and L must have the same dimension")
        if np.any(L <= 0):
            raise ValueError("L entries must be positive")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "L", L)


@dataclass(frozen=True, eq=False)
class EncodedPacket:
    indices: np.ndarray
    k: int = 0


@dataclass(frozen=True, eq=False)
class DecodedPacket:
    value: np.ndarray
    k: int = 0


def encode(xhat, qs: QuantizerState, N: int) -> EncodedPacket:
    """Cell index ``floor((xhat_i + L_i - C_i) N / (2 L_i))`` per axis.

    The closed upper edge maps to ``N - 1``. Values beyond the box (past the
    boundary slack) raise :class:`QuantizerOverflow`.
    """
    x = as_vector(xhat, "xhat")
    if x.size != qs.C.size:
        raise ValueError("dimension mismatch between xhat and quantizer state")
    lower = qs.C - qs.L
    upper = qs.C + qs.L
    bad = np.flatnonzero((x < lower - CONTAINMENT_SLACK) | (x > upper + CONTAINMENT_SLACK))
    if bad.size:
        i = int(bad[0])
        raise QuantizerOverflow(i, float(x[i]), float(lower[i]), float(upper[i]), qs.k)
    raw = np.floor((x + qs.L - qs.C) * N / (2.0 * qs.L)).astype(np.int64)
    return EncodedPacket(np.clip(raw, 0, N - 1), qs.k)


def decode(pkt: EncodedPacket, qs: QuantizerState, N: int, halfwidth: bool = False) -> DecodedPacket:
    """Centroid ``C_i - L_i + (L_i / N)(2 P_i + 1)`` of the received cell.

    ``halfwidth`` switches to ``C_i - L_i/2 + (L_i / 2N)(2 P_i + 1)``,
    which assumes a region half as wide as the encoder's; kept for auditing.
    """
    idx = np.asarray(pkt.indices)
    if idx.shape != qs.C.shape:
        raise ValueError("packet dimension does not match quantizer state")
    if np.any(idx < 0) or np.any(idx >= N):
        raise ValueError(f"packet index out of range 0..{N - 1}: {idx.tolist()}")
    if halfwidth:
        value = qs.C - qs.L / 2.0 + qs.L / (2.0 * N) * (2 * idx + 1)
    else:
        value = qs.C - qs.L + qs.L / N * (2 * idx + 1)
    return DecodedPacket(value, pkt.k)


def abs_matrix(M) -> np.ndarray:
    return np.abs(as_matrix(M))


def max_qerror_step(eq_bar, Lambda_bar, beta_ue_k: float, N: int) -> np.ndarray:
    """Worst-case quantization error at the next transmission, per axis."""
    eq_bar = as_vector(eq_bar, "eq_bar")
    Lambda_bar = as_matrix(Lambda_bar, "Lambda_bar", square=True)
    return Lambda_bar @ eq_bar / N + beta_ue_k / N * np.ones(eq_bar.size)


# wire format: little-endian u32 step index, then one u16 per axis
def pack_packet(pkt: EncodedPacket) -> bytes:
    idx = [int(i) for i in pkt.indices]
    return struct.pack(f"<I{len(idx)}H", int(pkt.k), *idx)


def unpack_packet(data: bytes, n: int) -> EncodedPacket:
    fmt = f"<I{n}H"
    if len(data) != struct.calcsize(fmt):
        raise ValueError(f"expected {struct.calcsize(fmt)} bytes for n={n}, got {len(data)}")
    k, *idx = struct.unpack(fmt, data)
    return EncodedPacket(np.array(idx, dtype=np.int64), k)


def packet_bits(pkt: EncodedPacket, N: int) -> str:
    """Channel payload as a bit string of exactly ``n log2 N`` characters."""
    width = int(math.log2(N))
    if 2 ** width != N:
        raise ValueError("bit packing needs N to be a power of two")
    return "".join(format(int(i), f"0{width}b") for i in pkt.indices)


def packet_from_bits(bits: str, N: int, k: int = 0) -> EncodedPacket:
    width = int(math.log2(N))
    if 2 ** width != N or len(bits) % width:
        raise ValueError("bit string length is not a multiple of log2 N")
    idx = [int(bits[j:j + width], 2) for j in range(0, len(bits), width)]
    return EncodedPacket(np.array(idx, dtype=np.int64), k)
