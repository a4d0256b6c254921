"""Strict JSON experiment configuration."""

from __future__ import annotations

import json
import math
import os
import re
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .opo import EfficiencyBudget, OPOParams
from .scan import PhaseScanModel

MAX_CUTOFF = 40

_PI_EXPR = re.compile(r"^\s*(?P<num>[0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9]*\.?[0-9]+))?\s*$")


def parse_angle(value):
    """Accept numbers or strings such as ``"pi"``, ``"2pi"``, ``"pi/2"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _PI_EXPR.match(value)
        if m:
            num = float(m.group("num")) if m.group("num") else 1.0
            den = float(m.group("den")) if m.group("den") else 1.0
            return num * math.pi / den
    raise ValueError(f"not an angle: {value!r} (use a number or e.g. 'pi/2')")


class ConfigError(ValueError):
    """Invalid configuration; the message carries the offending field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class OPOSection(_Strict):
    pump_ratio: Optional[float] = Field(None, ge=0, lt=1)
    pump_power_mw: Optional[float] = Field(None, ge=0)
    threshold_power_mw: Optional[float] = Field(None, gt=0)
    sideband_ratio: float = Field(0.13, ge=0)
    seed_amplitude: Union[float, tuple[float, float]] = 0.0
    seed_phase_mode: Literal["none", "phase_squeezed", "amplitude_squeezed"] = "none"
    excess_noise: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _pump(self):
        by_ratio = self.pump_ratio is not None
        by_power = self.pump_power_mw is not None or self.threshold_power_mw is not None
        if by_ratio == by_power:
            raise ValueError("give either pump_ratio or both pump_power_mw and threshold_power_mw")
        if by_power:
            if self.pump_power_mw is None or self.threshold_power_mw is None:
                raise ValueError("pump_power_mw and threshold_power_mw must be given together")
            if self.pump_power_mw >= self.threshold_power_mw:
                raise ValueError("pump power must be below the OPO threshold")
        return self

    def build(self) -> OPOParams:
        ratio = self.pump_ratio if self.pump_ratio is not None else self.pump_power_mw / self.threshold_power_mw
        amp = self.seed_amplitude
        alpha = complex(*amp) if isinstance(amp, tuple) else complex(amp)
        return OPOParams(ratio, self.sideband_ratio, alpha, self.seed_phase_mode, self.excess_noise)


class BudgetSection(_Strict):
    config: Literal["SHD", "IHA"]
    eta_dm: float = Field(gt=0, le=1)
    eta_esc: float = Field(gt=0, le=1)
    eta_d: float = Field(gt=0, le=1)
    eta_el: Optional[float] = Field(None, gt=0, le=1)
    electronic_clearance_db: Optional[float] = Field(None, gt=0)
    visibility: float = Field(gt=0, le=1)
    eta_bs: float = Field(gt=0, le=1)
    eta_f: Optional[float] = Field(None, gt=0, le=1)
    eta_w: Optional[float] = Field(None, gt=0, le=1)

    @model_validator(mode="after")
    def _consistent(self):
        if (self.eta_el is None) == (self.electronic_clearance_db is None):
            raise ValueError("give exactly one of eta_el or electronic_clearance_db")
        if self.config == "IHA" and (self.eta_f is None or self.eta_w is None):
            raise ValueError("IHA budget needs eta_f and eta_w")
        if self.config == "SHD" and (self.eta_f is not None or self.eta_w is not None):
            raise ValueError("eta_f/eta_w only apply to the IHA configuration")
        return self

    def build(self) -> EfficiencyBudget:
        from .opo import electronic_efficiency_from_clearance

        eta_el = self.eta_el
        if eta_el is None:
            eta_el = electronic_efficiency_from_clearance(self.electronic_clearance_db)
        return EfficiencyBudget(
            self.eta_dm, self.eta_esc, self.eta_d, eta_el, self.visibility, self.eta_bs, self.config, self.eta_f, self.eta_w
        )


class ScanSection(_Strict):
    kind: Literal["linear", "power_law"] = "linear"
    theta0: float = 0.0
    span: float = math.pi
    exponent: Optional[float] = Field(None, ge=1)
    direction: Literal["up", "down"] = "up"
    sample_rate_hz: float = Field(10e3, gt=0)

    @field_validator("theta0", "span", mode="before")
    @classmethod
    def _angle(cls, v):
        return parse_angle(v)

    @field_validator("span")
    @classmethod
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("span must be positive")
        return v

    def build(self, n_samples) -> PhaseScanModel:
        exponent = self.exponent if self.exponent is not None else (2.0 if self.kind == "power_law" else 1.0)
        return PhaseScanModel(self.kind, self.theta0, self.span, n_samples / self.sample_rate_hz, exponent, self.direction)


class OutputSection(_Strict):
    trace: Optional[str] = None
    rho: Optional[str] = None
    report: Optional[str] = None


class ExperimentConfig(_Strict):
    label: str = ""
    opo: OPOSection
    budget: BudgetSection
    scan: ScanSection = ScanSection()
    n_samples: int = Field(7000, ge=2)
    seed: int = Field(0, ge=0)
    cutoff: int = Field(12, ge=0, le=MAX_CUTOFF)
    outputs: OutputSection = OutputSection()

    @property
    def opo_params(self) -> OPOParams:
        return self.opo.build()

    @property
    def efficiency_budget(self) -> EfficiencyBudget:
        return self.budget.build()

    @property
    def scan_model(self) -> PhaseScanModel:
        return self.scan.build(self.n_samples)


def _format_errors(exc: ValidationError):
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        with open(os.fspath(path), encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(data)


PAPER_SHD = {
    "label": "SHD",
    "opo": {"pump_power_mw": 300, "threshold_power_mw": 970, "sideband_ratio": 0.13},
    "budget": {
        "config": "SHD",
        "eta_dm": 0.96,
        "eta_esc": 0.92,
        "eta_d": 0.97,
        "eta_el": 0.98,
        "visibility": 0.96,
        "eta_bs": 0.999,
    },
    "scan": {"kind": "linear", "theta0": 0.0, "span": "pi", "sample_rate_hz": 10000},
    "n_samples": 7000,
    "seed": 1,
    "cutoff": 12,
}

PAPER_IHA = {
    **PAPER_SHD,
    "label": "IHA",
    "budget": {
        "config": "IHA",
        "eta_dm": 0.96,
        "eta_esc": 0.92,
        "eta_d": 0.97,
        "eta_el": 0.98,
        "visibility": 0.98,
        "eta_bs": 0.998,
        "eta_f": 0.82,
        "eta_w": 0.51,
    },
}


def paper_config(name="SHD", **overrides) -> ExperimentConfig:
    base = {"SHD": PAPER_SHD, "IHA": PAPER_IHA}[name]
    return parse_config({**base, **overrides})
