"""Closed-loop simulation of plant, local observer, channel and reconstructor.

The three continuous states are integrated together with fixed-step RK4 on a
grid of step ``dt`` that has every transmission instant ``t_k = k T`` as a grid
point. At ``t_k`` (``k >= 1``) the observer estimate is encoded with the current
region, decoded, the reconstructor is reset to the decoded value and the
region is advanced by the chosen scheme. At ``k = 0`` nothing is sent: the
decoded value is taken to be ``x_c`` on both sides.

The disturbance is piecewise constant over each ``dt`` step and drawn
uniformly from a seeded PCG64 generator, so a (config, seed) pair gives a
bit-identical trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import as_vector, induced_inf_norm, mat_exp, rk4_step
from .observer import (
    BoundFunctions,
    CertificateError,
    ObserverCertificate,
    derive_gains,
    make_bound_functions,
    verify_certificate,
)
from .plant import BoundsConfig, PlantModel
from .quantizer import (
    DecodedPacket,
    QuantizerConfig,
    QuantizerState,
    abs_matrix,
    decode,
    encode,
    max_qerror_step,
)
from .reachability import beta_ue, beta_ue_bar
from .schemes import (
    SchemeKind,
    feasibility_norm,
    feasibility_set,
    norm_based_update,
    set_based_update,
)
from .sets import CONTAINMENT_SLACK

__all__ = [
    "SignalSpec",
    "TransmissionRecord",
    "SimTrace",
    "SteadyState",
    "InfeasibleConfigError",
    "SignalBoundError",
    "RNG_ALGORITHM",
    "run_closed_loop",
    "steady_state_metrics",
    "trace_columns",
    "write_trace_csv",
    "read_trace_csv",
]

RNG_ALGORITHM = "numpy.random.PCG64"


class InfeasibleConfigError(ValueError):
    """The scheme's boundedness condition fails for the requested (T, N)."""


class SignalBoundError(ValueError):
    """An input or disturbance sample exceeds its declared bound."""


@dataclass(frozen=True)
class SignalSpec:
    """Input and disturbance generators.

    ``input_kind`` is ``"zero"``, ``"sinusoid"`` (``input_params`` =
    amplitude, angular frequency in rad/s, phase) or ``"table"``
    (``input_params`` = ``(times, values)``, piecewise constant from each time).
    ``disturbance_kind`` is ``"zero"``, ``"uniform"`` (``disturbance_params`` =
    bound, hold interval in seconds; 0 holds for one step) or ``"table"``.
    """

    input_kind: str = "zero"
    input_params: tuple = ()
    disturbance_kind: str = "zero"
    disturbance_params: tuple = ()

    def __post_init__(self):
        if self.input_kind not in ("zero", "sinusoid", "table"):
            raise ValueError(f"unknown input kind {self.input_kind!r}")
        if self.disturbance_kind not in ("zero", "uniform", "table"):
            raise ValueError(f"unknown disturbance kind {self.disturbance_kind!r}")
        if self.input_kind == "sinusoid" and len(self.input_params) != 3:
            raise ValueError("sinusoid input takes (amplitude, frequency, phase)")
        if self.disturbance_kind == "uniform" and len(self.disturbance_params) not in (1, 2):
            raise ValueError("uniform disturbance takes (bound[, hold])")

    def input_fn(self, m: int):
        if self.input_kind == "zero":
            zero = np.zeros(m)
            return lambda t: zero
        if self.input_kind == "sinusoid":
            amp, freq, phase = (float(p) for p in self.input_params)
            ones = np.ones(m)
            return lambda t: amp * math.sin(freq * t + phase) * ones
        times, values = _table(self.input_params, m, "input")
        return lambda t: values[max(0, int(np.searchsorted(times, t, side="right")) - 1)]

    def disturbance_samples(self, o: int, n_steps: int, dt: float, seed: int) -> np.ndarray:
        """One disturbance value per integration step, shape ``(n_steps, o)``."""
        if self.disturbance_kind == "zero":
            return np.zeros((n_steps, o))
        if self.disturbance_kind == "uniform":
            bound = float(self.disturbance_params[0])
            hold = float(self.disturbance_params[1]) if len(self.disturbance_params) > 1 else 0.0
            per = max(1, int(round(hold / dt))) if hold > 0 else 1
            rng = np.random.Generator(np.random.PCG64(seed))
            draws = rng.uniform(-bound, bound, size=(-(-n_steps // per), o))
            return np.repeat(draws, per, axis=0)[:n_steps]
        times, values = _table(self.disturbance_params, o, "disturbance")
        idx = np.searchsorted(times, np.arange(n_steps) * dt, side="right") - 1
        return values[np.maximum(idx, 0)]


def _table(params, width, what):
    times, values = params
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float).reshape(len(times), -1)
    if values.shape[1] != width:
        raise ValueError(f"{what} table has {values.shape[1]} columns, expected {width}")
    if np.any(np.diff(times) <= 0):
        raise ValueError(f"{what} table times must be increasing")
    return times, values


@dataclass(frozen=True, eq=False)
class TransmissionRecord:
    k: int
    t: float
    indices: np.ndarray | None  # None at k = 0 (no packet is sent)
    Pd: np.ndarray
    C: np.ndarray               # region used to encode at t_k
    L: np.ndarray
    eq: np.ndarray              # xhat(t_k) - Pd
    eqbar: np.ndarray           # L / N
    eqbar_recursion: np.ndarray
    beta_ue: float


@dataclass(eq=False)
class SimTrace:
    meta: dict
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    xr: np.ndarray
    C: np.ndarray          # region S^{k+1}, the one xhat must stay in on [t_k, t_{k+1}]
    L: np.ndarray
    eq: np.ndarray
    eqbar: np.ndarray
    ehat_norm: np.ndarray
    er_norm: np.ndarray
    beta_d: np.ndarray
    thm1_envelope: np.ndarray
    is_tx: np.ndarray
    k: np.ndarray
    u: np.ndarray
    d: np.ndarray
    records: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def transmissions(self) -> list:
        """Records of packets actually sent (``k >= 1``)."""
        return [r for r in self.records if r.k >= 1]

    @property
    def ehat(self) -> np.ndarray:
        return self.x - self.xhat

    @property
    def er(self) -> np.ndarray:
        return self.x - self.xr

    def containment_mask(self, slack: float = CONTAINMENT_SLACK) -> np.ndarray:
        """Per-sample flag: is ``xhat(t)`` inside the logged active region."""
        return np.all(np.abs(self.xhat - self.C) <= self.L + slack, axis=1)


def _grid_count(span, dt, what):
    count = span / dt
    r = int(round(count))
    if r < 1 or abs(count - r) > 1e-9 * max(1.0, count):
        raise ValueError(f"{what}={span!r} is not an integer multiple of dt={dt!r}")
    return r


def run_closed_loop(plant: PlantModel, bounds: BoundsConfig, cert: ObserverCertificate,
                    qcfg: QuantizerConfig, scheme: SchemeKind, signals: SignalSpec,
                    horizon: float, dt: float = 1e-3, seed: int = 0, *, T: float,
                    x0=None, halfwidth_decoder: bool = False, inflation: str = "conservative",
                    fns: BoundFunctions | None = None) -> SimTrace:
    """Simulate the remote estimation loop over ``[0, horizon]``.

    ``inflation`` picks the range-inflation constant: ``"conservative"`` uses
    ``exp(|A|T)/|A|``, ``"integral"`` the tighter ``(exp(|A|T) - 1)/|A|``.
    The tighter one still bounds ``xhat(t_{k+1})`` but not every intermediate
    ``xhat(t)``, so inter-sample containment is only guaranteed by the former.

    Raises
    ------
    CertificateError
        The observer certificate fails verification.
    InfeasibleConfigError
        The scheme's boundedness condition fails at ``(T, N)``.
    QuantizerOverflow
        The estimate left the quantization region (never expected when feasible).
    SignalBoundError
        A generated input/disturbance breaks its declared bound.
    """
    n, N = plant.n, qcfg.N
    inflate = {"conservative": beta_ue, "integral": beta_ue_bar}.get(inflation)
    if inflate is None:
        raise ValueError(f"unknown inflation {inflation!r}; use 'conservative' or 'integral'")
    if qcfg.n != n or bounds.x_c.size != n:
        raise ValueError("dimension mismatch between plant, bounds and quantizer")
    if bounds.x_b <= 0:
        raise ValueError("x_b must be positive for a nondegenerate initial region")
    report = verify_certificate(plant, cert)
    if not report.passed:
        raise CertificateError(f"observer certificate rejected: {report}")
    feas = (feasibility_set if scheme is SchemeKind.SET_BASED else feasibility_norm)(plant.A, T, N)
    if not feas.feasible:
        raise InfeasibleConfigError(f"{feas}")

    gains = derive_gains(cert, plant)
    if fns is None:
        fns = make_bound_functions(cert, gains, plant, bounds)
    K, Kr = gains.K, gains.Kr
    A, B, E, H = plant.A, plant.B, plant.E, plant.H
    Lam = mat_exp(A, T)
    Lam_bar = abs_matrix(Lam)
    A_norm = induced_inf_norm(A)
    KH_norm = induced_inf_norm(K @ H)
    # per-step growth of the worst-case quantization error
    growth = Lam_bar if scheme is SchemeKind.SET_BASED else math.exp(A_norm * T) * np.eye(n)

    steps_per_T = _grid_count(T, dt, "T")
    n_steps = _grid_count(horizon, dt, "horizon")
    n_samples = n_steps + 1

    u_fn = signals.input_fn(plant.m)
    d_all = signals.disturbance_samples(plant.o, n_samples, dt, seed)

    # z = [x, xhat, xr]; dz/dt = M z + forcing
    Z = np.zeros((n, n))
    M = np.block([
        [A, Z, Z],
        [-K @ H, A + K @ H, Z],
        [Z, Z, A + Kr @ H],
    ])

    x0_arr = as_vector(bounds.x_c if x0 is None else x0, "x0")
    if x0_arr.size != n:
        raise ValueError("x0 has the wrong dimension")
    z = np.concatenate([x0_arr, bounds.x_c, bounds.x_c])

    out = {name: np.zeros((n_samples, n)) for name in ("x", "xhat", "xr", "C", "L", "eq", "eqbar")}
    scal = {name: np.zeros(n_samples) for name in ("ehat_norm", "er_norm", "beta_d", "thm1")}
    is_tx = np.zeros(n_samples, dtype=bool)
    k_col = np.zeros(n_samples, dtype=np.int64)
    u_log = np.zeros((n_samples, plant.m))
    t_log = np.zeros(n_samples)
    records = []

    qs = QuantizerState(bounds.x_c, np.full(n, bounds.x_b), 0)
    eqbar_rec = qs.L / N
    Pd = bounds.x_c.copy()
    er_tk = t_k = 0.0
    sup_u = sup_d = sup_ehat = sup_eq = 0.0
    tol_u = bounds.u_b + 1e-12
    tol_d = bounds.d_b + 1e-12

    for j in range(n_samples):
        t = j * dt
        if j % steps_per_T == 0:
            k = j // steps_per_T
            t = t_k = k * T
            xh = z[n:2 * n]
            if k == 0:
                indices = None
                Pd = bounds.x_c.copy()
            else:
                pkt = encode(xh, qs, N)
                indices = pkt.indices
                Pd = decode(pkt, qs, N, halfwidth=halfwidth_decoder).value
            z[2 * n:] = Pd
            bue = inflate(A_norm, T, bounds.u_b, KH_norm, float(fns.beta_d(t_k)))
            rec = TransmissionRecord(
                k=k, t=t_k, indices=indices, Pd=Pd.copy(), C=qs.C, L=qs.L,
                eq=xh - Pd, eqbar=qs.L / N, eqbar_recursion=eqbar_rec, beta_ue=bue)
            records.append(rec)
            dp = DecodedPacket(Pd, k)
            if scheme is SchemeKind.SET_BASED:
                qs = set_based_update(qs, dp, Lam, Lam_bar, bue, N)
            else:
                qs = norm_based_update(qs, dp, Lam, A_norm, T, bue, N)
            eqbar_rec = max_qerror_step(eqbar_rec, growth, bue, N)
            er_tk = float(np.max(np.abs(z[:n] - Pd)))
            sup_u = sup_d = sup_ehat = sup_eq = 0.0
            is_tx[j] = True

        x, xh, xr = z[:n], z[n:2 * n], z[2 * n:]
        u = u_fn(t)
        d = d_all[j]
        Bu, Ed = B @ u, E @ d
        if float(np.max(np.abs(Bu))) > tol_u:
            raise SignalBoundError(f"|Bu(t)| exceeds u_b={bounds.u_b} at t={t:g}")
        if float(np.max(np.abs(Ed))) > tol_d:
            raise SignalBoundError(f"|Ed(t)| exceeds d_b={bounds.d_b} at t={t:g}")

        eq = xh - Pd
        ehat_n = float(np.max(np.abs(x - xh)))
        sup_u = max(sup_u, float(np.max(np.abs(u))))
        sup_d = max(sup_d, float(np.max(np.abs(d))))
        sup_ehat = max(sup_ehat, ehat_n)
        sup_eq = max(sup_eq, float(np.max(np.abs(eq))))

        out["x"][j], out["xhat"][j], out["xr"][j] = x, xh, xr
        out["C"][j], out["L"][j] = qs.C, qs.L
        out["eq"][j], out["eqbar"][j] = eq, rec.eqbar
        scal["ehat_norm"][j] = ehat_n
        scal["er_norm"][j] = float(np.max(np.abs(x - xr)))
        scal["beta_d"][j] = float(fns.beta_d(t))
        scal["thm1"][j] = float(fns.beta_r(er_tk, t - t_k)
                                + fns.gamma_r(max(sup_u, sup_d, sup_ehat, sup_eq)))
        k_col[j] = rec.k
        u_log[j] = u
        t_log[j] = t

        if j < n_steps:
            recon_force = -(Kr @ H) @ Pd

            def f(s, zz, _Ed=Ed, _rf=recon_force):
                Bu_s = B @ u_fn(s)
                return M @ zz + np.concatenate([Bu_s + _Ed, Bu_s, _rf])

            z = rk4_step(f, t, z, dt)

    meta = {
        "scheme": scheme.value,
        "N": N,
        "T": T,
        "dt": dt,
        "horizon": horizon,
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "decoder": "halfwidth" if halfwidth_decoder else "centroid",
        "inflation": inflation,
        "n": n,
        "x_c": bounds.x_c.tolist(),
        "x_b": bounds.x_b,
        "u_b": bounds.u_b,
        "d_b": bounds.d_b,
        "x0": x0_arr.tolist(),
        "input": signals.input_kind,
        "disturbance": signals.disturbance_kind,
    }
    return SimTrace(
        meta=meta, t=t_log,
        x=out["x"], xhat=out["xhat"], xr=out["xr"], C=out["C"], L=out["L"],
        eq=out["eq"], eqbar=out["eqbar"],
        ehat_norm=scal["ehat_norm"], er_norm=scal["er_norm"], beta_d=scal["beta_d"],
        thm1_envelope=scal["thm1"], is_tx=is_tx, k=k_col, u=u_log, d=d_all,
        records=records,
    )


@dataclass(frozen=True)
class SteadyState:
    eq_inf: float
    er_inf: float
    n_tx_tail: int
    n_samples_tail: int


def steady_state_metrics(trace: SimTrace, tail_fraction: float = 0.25) -> SteadyState:
    """Worst ``|e_q^k|`` over the last transmissions and worst ``|e_r(t)|`` over
    the last samples, each over a ``tail_fraction`` share of the run."""
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    tx = trace.transmissions
    if len(tx) < 8:
        raise ValueError(f"trace has {len(tx)} transmissions; need at least 8")
    n_tx = max(1, math.ceil(tail_fraction * len(tx)))
    n_s = max(1, math.ceil(tail_fraction * len(trace.t)))
    eq_inf = max(float(np.max(np.abs(r.eq))) for r in tx[-n_tx:])
    er_inf = float(np.max(trace.er_norm[-n_s:]))
    return SteadyState(eq_inf, er_inf, n_tx, n_s)


def trace_columns(n: int) -> list[str]:
    cols = ["t"]
    for prefix in ("x", "xhat", "xr", "C", "L", "eq", "eqbar"):
        cols += [f"{prefix}_{i + 1}" for i in range(n)]
    cols += ["ehat_norm", "er_norm", "beta_d", "thm1_envelope", "is_tx", "k"]
    cols += [f"pe_{i + 1}" for i in range(n)]
    return cols


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trace_csv(trace: SimTrace, path) -> Path:
    """Metadata as ``# key=value`` lines, then a header row and one row per sample.

    Packet indices appear in the ``pe_*`` columns on transmission rows and are
    blank elsewhere.
    """
    path = Path(path)
    n = trace.n
    pe = {r.k: r.indices for r in trace.records if r.indices is not None}
    lines = [f"# {key}={value}" for key, value in trace.meta.items()]
    lines.append(",".join(trace_columns(n)))
    for j in range(len(trace.t)):
        row = [_fmt(trace.t[j])]
        for arr in (trace.x, trace.xhat, trace.xr, trace.C, trace.L, trace.eq, trace.eqbar):
            row += [_fmt(v) for v in arr[j]]
        row += [_fmt(trace.ehat_norm[j]), _fmt(trace.er_norm[j]), _fmt(trace.beta_d[j]),
                _fmt(trace.thm1_envelope[j]), str(int(trace.is_tx[j])), str(int(trace.k[j]))]
        idx = pe.get(int(trace.k[j])) if trace.is_tx[j] else None
        row += [str(int(i)) for i in idx] if idx is not None else [""] * n
        lines.append(",".join(row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_trace_csv(path) -> tuple[dict, dict]:
    """Inverse of :func:`write_trace_csv`: ``(meta, columns)``.

    Metadata values come back as strings; blank packet cells become -1.
    """
    meta, header, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    columns = {}
    for i, name in enumerate(header):
        raw = [r[i] for r in rows]
        if name in ("is_tx", "k") or name.startswith("pe_"):
            columns[name] = np.array([int(v) if v else -1 for v in raw], dtype=np.int64)
        else:
            columns[name] = np.array([float(v) for v in raw])
    return meta, columns
