"""Experiment configuration files.

Format: one ``key = value`` per line, ``#`` starts a comment. Matrices are
bracketed row-major lists (``[[1, 0], [0, 1]]``), vectors flat lists, signals
``name(arg, ...)``. Example::

    A = [[-1, -4], [4, -1]]
    T = 0.1
    input = sinusoid(0.5, 1.0, 0.0)
    seeds = [0, 1, 2]
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import MISSING, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .observer import ObserverCertificate
from .plant import BoundsConfig, PlantModel
from .quantizer import QuantizerConfig
from .schemes import SchemeKind
from .sim import SignalSpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config",
           "emit_config", "example_config", "EXAMPLE_CONFIG_NAME"]

EXAMPLE_CONFIG_NAME = "two_state.cfg"


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        self.line, self.key = line, key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field '{key}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


Matrix = tuple  # tuple of row tuples


@dataclass(frozen=True)
class ExperimentConfig:
    A: Matrix
    B: Matrix
    E: Matrix
    H: Matrix
    P: Matrix
    Q: Matrix
    nu1: float
    nu2: float
    x_c: tuple
    x_b: float
    u_b: float
    d_b: float
    N: int
    T: float
    x0: tuple | None = None
    Br: int | None = None
    scheme: str = "both"
    input: str = "zero"
    disturbance: str = "zero"
    horizon: float = 20.0
    dt: float = 1e-3
    seeds: tuple = (0,)
    out: str = "runs"
    halfwidth_decoder: bool = False
    inflation: str = "conservative"
    workers: int = 1

    # builders -------------------------------------------------------------
    def plant(self) -> PlantModel:
        return PlantModel(np.array(self.A), np.array(self.B), np.array(self.E), np.array(self.H))

    def bounds(self) -> BoundsConfig:
        return BoundsConfig(np.array(self.x_c), self.x_b, self.u_b, self.d_b)

    def certificate(self) -> ObserverCertificate:
        return ObserverCertificate(np.array(self.P), np.array(self.Q), self.nu1, self.nu2)

    def quantizer(self) -> QuantizerConfig:
        return QuantizerConfig(N=self.N, n=len(self.A), Br=self.Br)

    def schemes(self) -> list[SchemeKind]:
        if self.scheme == "both":
            return [SchemeKind.SET_BASED, SchemeKind.NORM_BASED]
        return [SchemeKind.parse(self.scheme)]

    def signals(self) -> SignalSpec:
        ik, ip = _parse_signal(self.input)
        dk, dp = _parse_signal(self.disturbance)
        return SignalSpec(ik, ip, dk, dp)

    def initial_state(self) -> np.ndarray:
        return np.array(self.x_c if self.x0 is None else self.x0, dtype=float)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        _validate(cfg)
        return cfg


_KINDS = {
    "A": "matrix", "B": "matrix", "E": "matrix", "H": "matrix", "P": "matrix", "Q": "matrix",
    "nu1": "float", "nu2": "float", "x_c": "vector", "x_b": "float", "u_b": "float",
    "d_b": "float", "N": "int", "T": "float", "x0": "vector", "Br": "int", "scheme": "str",
    "input": "signal", "disturbance": "signal", "horizon": "float", "dt": "float",
    "seeds": "intlist", "out": "str", "halfwidth_decoder": "bool", "inflation": "str",
    "workers": "int",
}
_REQUIRED = [f.name for f in fields(ExperimentConfig) if f.default is MISSING]
_SIGNAL_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$", re.S)
_SIGNAL_ARITY = {"zero": (0,), "sinusoid": (3,), "uniform": (1, 2), "table": (2,)}


def _parse_signal(text: str):
    m = _SIGNAL_RE.match(text)
    if not m or m.group(1) not in _SIGNAL_ARITY:
        raise ValueError(f"unrecognised signal {text!r}")
    name, body = m.group(1), m.group(2)
    args = () if not body or not body.strip() else ast.literal_eval(f"({body},)")
    if len(args) not in _SIGNAL_ARITY[name]:
        raise ValueError(f"{name} takes {_SIGNAL_ARITY[name]} arguments, got {len(args)}")
    return name, tuple(args)


def _number(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return float(v)


def _convert(key, text):
    kind = _KINDS[key]
    if kind in ("str",):
        return text.strip().strip('"').strip("'")
    if kind == "signal":
        _parse_signal(text)
        return " ".join(text.split())
    if kind == "bool":
        low = text.strip().lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {text.strip()!r}")
    try:
        value = ast.literal_eval(text.strip())
    except (ValueError, SyntaxError):
        raise ValueError(f"cannot parse {text.strip()!r}") from None
    if kind == "float":
        return _number(value, key)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if kind == "vector":
        if not isinstance(value, (list, tuple)) or not value:
            raise ValueError("expected a non-empty [a, b, ...] list")
        return tuple(_number(v, key) for v in value)
    if kind == "intlist":
        if isinstance(value, int):
            value = [value]
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ValueError("expected a list of integers")
        return tuple(value)
    # matrix
    if not isinstance(value, (list, tuple)) or not value or not all(
            isinstance(r, (list, tuple)) for r in value):
        raise ValueError("expected a bracketed row-major matrix [[...], [...]]")
    width = len(value[0])
    for i, row in enumerate(value):
        if len(row) != width or width == 0:
            raise ValueError(f"row {i + 1} has {len(row)} entries, expected {width}")
    return tuple(tuple(_number(v, key) for v in row) for row in value)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values, lines_of = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rhs = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError("expected 'key = value'", lineno)
        if key not in _KINDS:
            raise ConfigError("unknown key", lineno, key)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines_of[key]})", lineno, key)
        try:
            values[key] = _convert(key, rhs)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno, key) from None
        lines_of[key] = lineno
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    cfg = ExperimentConfig(**values)
    _validate(cfg, lines_of)
    return cfg


def _validate(cfg: ExperimentConfig, lines_of=None):
    lines_of = lines_of or {}

    def fail(key, msg):
        raise ConfigError(msg, lines_of.get(key), key)

    n = len(cfg.A)
    if len(cfg.A[0]) != n:
        fail("A", f"must be square, got {n}x{len(cfg.A[0])}")
    for key in ("B", "E"):
        if len(getattr(cfg, key)) != n:
            fail(key, f"must have {n} rows")
    if len(cfg.H[0]) != n:
        fail("H", f"must have {n} columns")
    if len(cfg.P) != n or len(cfg.P[0]) != n:
        fail("P", f"must be {n}x{n}")
    if len(cfg.Q) != n or len(cfg.Q[0]) != len(cfg.H):
        fail("Q", f"must be {n}x{len(cfg.H)}")
    if len(cfg.x_c) != n:
        fail("x_c", f"must have {n} entries")
    if cfg.x0 is not None and len(cfg.x0) != n:
        fail("x0", f"must have {n} entries")
    for key in ("x_b", "u_b", "d_b"):
        if getattr(cfg, key) < 0:
            fail(key, "must be nonnegative")
    for key in ("nu1", "nu2", "T", "horizon", "dt"):
        if not getattr(cfg, key) > 0:
            fail(key, "must be positive")
    if cfg.N < 2:
        fail("N", "must be at least 2")
    if cfg.Br is not None and cfg.Br != n * math.log2(cfg.N):
        fail("Br", f"inconsistent with N={cfg.N} on {n} axes")
    if cfg.inflation not in ("conservative", "integral"):
        fail("inflation", "must be conservative or integral")
    if cfg.scheme not in ("set", "norm", "both"):
        fail("scheme", "must be set, norm or both")
    if not cfg.seeds:
        fail("seeds", "must list at least one seed")
    if cfg.workers < 1:
        fail("workers", "must be at least 1")
    for key in ("input", "disturbance"):
        try:
            _parse_signal(getattr(cfg, key))
        except ValueError as exc:
            fail(key, str(exc))


def _emit_value(key, value):
    kind = _KINDS[key]
    if kind == "matrix":
        return "[" + ", ".join("[" + ", ".join(repr(v) for v in row) + "]" for row in value) + "]"
    if kind in ("vector", "intlist"):
        return "[" + ", ".join(repr(v) for v in value) + "]"
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    return str(value)


def emit_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {_emit_value(f.name, value)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def example_config() -> ExperimentConfig:
    """The bundled two-state example (rotating stable plant, N = 4, T = 0.1)."""
    text = resources.files("reachquant").joinpath("data", EXAMPLE_CONFIG_NAME).read_text()
    return parse_config(text, EXAMPLE_CONFIG_NAME)
