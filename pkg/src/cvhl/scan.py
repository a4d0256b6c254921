"""Local-oscillator phase scans, homodyne trace synthesis and the trace CSV format."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import DataQualityError, check_count, check_real, readonly
from .gaussian import GaussianState, quadrature_stats

SCAN_KINDS = ("linear", "power_law")
DIRECTIONS = ("up", "down")

# samples per independently seeded random block; sample k only depends on (seed, k)
RNG_BLOCK = 1024


@dataclass(frozen=True)
class PhaseScanModel:
    """LO phase versus time.

    ``linear``: ``theta0 + span * t/T``; ``power_law``: ``theta0 + span * (t/T)**exponent``
    (a thermo-optic shifter driven by a voltage ramp has exponent 2).  A
    ``down`` scan runs from ``theta0`` towards ``theta0 - span``.
    """

    kind: str = "linear"
    theta0: float = 0.0
    span: float = math.pi
    duration: float = 0.7
    exponent: float = 1.0
    direction: str = "up"

    def __post_init__(self):
        if self.kind not in SCAN_KINDS:
            raise ValueError(f"scan kind must be one of {SCAN_KINDS}, got {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        check_real(self.theta0, "theta0")
        check_real(self.span, "span", low=0, low_open=True)
        check_real(self.duration, "duration", low=0, low_open=True)
        check_real(self.exponent, "exponent", low=1)
        if self.kind == "linear" and self.exponent != 1:
            object.__setattr__(self, "exponent", 1.0)

    @property
    def sign(self):
        return 1.0 if self.direction == "up" else -1.0

    @property
    def theta_range(self):
        end = self.theta0 + self.sign * self.span
        return min(self.theta0, end), max(self.theta0, end)

    def to_dict(self):
        return {
            "kind": self.kind,
            "theta0": self.theta0,
            "span": self.span,
            "duration": self.duration,
            "exponent": self.exponent,
            "direction": self.direction,
        }


def _phase(model: PhaseScanModel, t):
    frac = np.asarray(t, dtype=float) / model.duration
    if model.kind == "power_law":
        frac = frac**model.exponent
    return model.theta0 + model.sign * model.span * frac


def phase_at(model: PhaseScanModel, t):
    """LO phase at time ``t`` (scalar or array) within ``[0, duration]``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > model.duration * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, {model.duration}]")
    theta = _phase(model, np.minimum(t_arr, model.duration))
    return float(theta) if np.ndim(theta) == 0 else theta


def phase_density(model: PhaseScanModel, theta):
    """Probability density of the LO phase for samples taken uniformly in time."""
    theta = np.asarray(theta, dtype=float)
    frac = np.clip(model.sign * (theta - model.theta0) / model.span, 0.0, 1.0)
    if model.kind == "linear":
        return np.full(theta.shape, 1 / model.span)
    p = model.exponent
    # t/T = frac**(1/p)  =>  d(t/T)/dtheta = frac**(1/p - 1) / (p span)
    with np.errstate(divide="ignore"):
        return np.where(frac > 0, frac ** (1 / p - 1) / (p * model.span), np.inf)


@dataclass(frozen=True, eq=False)
class HomodyneTrace:
    """Time-ordered quadrature samples ``(t_k, theta_k, x_k)`` in shot-noise units."""

    t: np.ndarray
    theta: np.ndarray
    x: np.ndarray
    sample_rate: float = 10e3
    demod_frequency: float = 3e6
    calibration_scale: float = 1.0
    source_label: str = ""
    seed: int | None = None
    scan: PhaseScanModel | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if not (t.ndim == theta.ndim == x.ndim == 1 and t.size == theta.size == x.size):
            raise ValueError("t, theta and x must be 1-d arrays of equal length")
        for name, arr in (("t", t), ("theta", theta), ("x", x)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"trace column {name} has non-finite values")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trace times must be strictly increasing")
        check_real(self.calibration_scale, "calibration_scale", low=0, low_open=True)
        object.__setattr__(self, "t", readonly(t))
        object.__setattr__(self, "theta", readonly(theta))
        object.__setattr__(self, "x", readonly(x))

    def __len__(self):
        return self.x.size

    def __eq__(self, other):
        if not isinstance(other, HomodyneTrace):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.x, other.x)
            and self.metadata() == other.metadata()
        )

    __hash__ = None

    def metadata(self):
        meta = {
            "sample_rate_hz": self.sample_rate,
            "demod_frequency_hz": self.demod_frequency,
            "calibration_scale": self.calibration_scale,
            "source_label": self.source_label,
            "seed": self.seed,
        }
        if self.scan is not None:
            meta.update({f"scan_{k}": v for k, v in self.scan.to_dict().items()})
        meta.update(self.extra)
        return meta

    def with_x(self, x, **changes):
        return replace(self, x=x, **changes)

    def concatenate(self, other: "HomodyneTrace") -> "HomodyneTrace":
        """Append ``other`` after this trace (its times shifted to keep them increasing)."""
        shift = self.t[-1] - other.t[0] + (other.t[1] - other.t[0] if len(other) > 1 else 1.0)
        scan = self.scan if self.scan == other.scan else None
        return replace(
            self,
            t=np.concatenate([self.t, other.t + shift]),
            theta=np.concatenate([self.theta, other.theta]),
            x=np.concatenate([self.x, other.x]),
            scan=scan,
        )


def _block_normals(seed, start, stop):
    """Standard normals for sample indices ``start..stop-1`` keyed by ``(seed, block)``."""
    out = np.empty(stop - start)
    first, last = start // RNG_BLOCK, (stop - 1) // RNG_BLOCK
    for block in range(first, last + 1):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
        z = rng.standard_normal(RNG_BLOCK)
        lo = max(start, block * RNG_BLOCK)
        hi = min(stop, (block + 1) * RNG_BLOCK)
        out[lo - start : hi - start] = z[lo - block * RNG_BLOCK : hi - block * RNG_BLOCK]
    return out


def synthesize_trace(
    state: GaussianState,
    model: PhaseScanModel,
    n_samples,
    seed,
    *,
    demod_frequency=3e6,
    source_label="synthetic",
) -> HomodyneTrace:
    """Draw one quadrature value per time point at the instantaneous LO phase."""
    if not isinstance(state, GaussianState):
        raise TypeError("state must be a GaussianState")
    n_samples = check_count(n_samples, "n_samples", minimum=2)
    seed = check_count(seed, "seed")
    t = np.linspace(0.0, model.duration, n_samples)
    theta = _phase(model, t)
    mean, var = quadrature_stats(state, theta)
    x = mean + np.sqrt(var) * _block_normals(seed, 0, n_samples)
    return HomodyneTrace(
        t,
        theta,
        x,
        sample_rate=(n_samples - 1) / model.duration,
        demod_frequency=demod_frequency,
        source_label=source_label,
        seed=seed,
        scan=model,
    )


# --- CSV format ----------------------------------------------------------------

_HEADER = "index,t_s,theta_rad,x_sn"


def _fmt(v):
    return format(float(v), ".17g")


def format_trace(trace: HomodyneTrace) -> str:
    buf = io.StringIO()
    for key, value in trace.metadata().items():
        if value is None:
            continue
        buf.write(f"# {key}={_fmt(value) if isinstance(value, float) else value}\n")
    buf.write(_HEADER + "\n")
    for k, (t, th, x) in enumerate(zip(trace.t, trace.theta, trace.x)):
        buf.write(f"{k},{_fmt(t)},{_fmt(th)},{_fmt(x)}\n")
    return buf.getvalue()


class TraceFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


_SCAN_FIELDS = {"kind": str, "theta0": float, "span": float, "duration": float, "exponent": float, "direction": str}


def parse_trace(text: str) -> HomodyneTrace:
    meta = {}
    rows = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                raise TraceFormatError("metadata after header", lineno)
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise TraceFormatError(f"metadata line without '=': {raw!r}", lineno)
            meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line.replace(" ", "") != _HEADER:
                raise TraceFormatError(f"expected header {_HEADER!r}, got {raw!r}", lineno)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TraceFormatError(f"expected 4 fields, got {len(parts)}", lineno)
        try:
            index = int(parts[0])
            values = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise TraceFormatError(f"unparseable number ({exc})", lineno) from None
        if index != len(rows):
            raise TraceFormatError(f"index {index} out of sequence (expected {len(rows)})", lineno)
        if not all(math.isfinite(v) for v in values):
            raise TraceFormatError("non-finite value", lineno)
        rows.append(values)
    if not header_seen:
        raise TraceFormatError("missing header line")
    if not rows:
        raise TraceFormatError("trace has no samples")
    data = np.array(rows)

    def pop(key, conv, default=None):
        value = meta.pop(key, None)
        if value is None:
            return default
        try:
            return conv(value)
        except ValueError:
            raise TraceFormatError(f"bad metadata value {key}={value!r}") from None

    kwargs = dict(
        sample_rate=pop("sample_rate_hz", float, 10e3),
        demod_frequency=pop("demod_frequency_hz", float, 3e6),
        calibration_scale=pop("calibration_scale", float, 1.0),
        source_label=pop("source_label", str, ""),
        seed=pop("seed", int),
    )
    scan_kw = {k: pop(f"scan_{k}", conv) for k, conv in _SCAN_FIELDS.items()}
    scan = PhaseScanModel(**scan_kw) if all(v is not None for v in scan_kw.values()) else None
    try:
        return HomodyneTrace(data[:, 0], data[:, 1], data[:, 2], scan=scan, extra=meta, **kwargs)
    except ValueError as exc:
        raise TraceFormatError(str(exc)) from None


def write_trace(trace: HomodyneTrace, path):
    from .io import atomic_write_text

    atomic_write_text(path, format_trace(trace))


def read_trace(path) -> HomodyneTrace:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return parse_trace(fh.read())


# --- shot-noise calibration ------------------------------------------------------

MIN_REFERENCE_SAMPLES = 100


def shot_noise_scale(vacuum_reference: HomodyneTrace) -> float:
    """Sample standard deviation of a vacuum reference trace (raw units)."""
    n = len(vacuum_reference)
    if n < MIN_REFERENCE_SAMPLES:
        raise DataQualityError(f"vacuum reference needs >= {MIN_REFERENCE_SAMPLES} samples, got {n}")
    scale = float(np.std(vacuum_reference.x, ddof=1))
    if not scale > 0:
        raise DataQualityError("vacuum reference has zero variance")
    return scale


def calibrate_shot_noise(raw: HomodyneTrace, vacuum_reference: HomodyneTrace) -> HomodyneTrace:
    """Divide ``raw`` by the vacuum noise so the shot-noise variance is one."""
    scale = shot_noise_scale(vacuum_reference)
    return raw.with_x(raw.x / scale, calibration_scale=scale * raw.calibration_scale)
