"""Sub-threshold OPO noise spectrum and the detection efficiency budget."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_real
from .gaussian import GaussianState, apply_loss, build_state, rotation

SEED_MODES = ("none", "phase_squeezed", "amplitude_squeezed")
CONFIGS = ("SHD", "IHA")


@dataclass(frozen=True)
class OPOParams:
    """Pump ratio ``P/P_thr``, sideband ratio ``2 pi f / gamma`` and optional seed."""

    pump_ratio: float
    sideband_ratio: float = 0.13
    seed_amplitude: complex = 0j
    seed_phase_mode: str = "none"
    excess_noise: float = 0.0

    def __post_init__(self):
        check_real(self.pump_ratio, "pump_ratio", low=0, high=1, high_open=True)
        check_real(self.sideband_ratio, "sideband_ratio", low=0)
        check_real(self.excess_noise, "excess_noise", low=0)
        object.__setattr__(self, "seed_amplitude", complex(self.seed_amplitude))
        if self.seed_phase_mode not in SEED_MODES:
            raise ValueError(f"seed_phase_mode must be one of {SEED_MODES}, got {self.seed_phase_mode!r}")

    @classmethod
    def from_powers(cls, pump_power, threshold_power, **kwargs):
        check_real(threshold_power, "threshold_power", low=0, low_open=True)
        return cls(pump_ratio=check_real(pump_power, "pump_power", low=0) / threshold_power, **kwargs)


@dataclass(frozen=True)
class EfficiencyBudget:
    """Multiplicative detection-chain efficiencies.

    ``eta_f`` (fiber coupling) and ``eta_w`` (waveguide transmission) belong
    to the integrated analyzer and must be given iff ``config == "IHA"``.
    """

    eta_dm: float
    eta_esc: float
    eta_d: float
    eta_el: float
    visibility: float
    eta_bs: float
    config: str = "SHD"
    eta_f: float | None = None
    eta_w: float | None = None

    def __post_init__(self):
        if self.config not in CONFIGS:
            raise ValueError(f"config must be one of {CONFIGS}, got {self.config!r}")
        for name in ("eta_dm", "eta_esc", "eta_d", "eta_el", "visibility", "eta_bs"):
            check_real(getattr(self, name), name, low=0, high=1, low_open=True)
        chip = (self.eta_f, self.eta_w)
        if self.config == "IHA":
            if None in chip:
                raise ValueError("IHA budget needs eta_f and eta_w")
            check_real(self.eta_f, "eta_f", low=0, high=1, low_open=True)
            check_real(self.eta_w, "eta_w", low=0, high=1, low_open=True)
        elif chip != (None, None):
            raise ValueError("eta_f and eta_w only apply to the IHA configuration")

    @property
    def eta_vis(self):
        return self.visibility**2

    @property
    def eta_chip(self):
        return self.eta_f * self.eta_w if self.config == "IHA" else 1.0

    @property
    def eta_hd(self):
        return self.eta_vis * self.eta_bs * self.eta_chip

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


SHD_BUDGET = EfficiencyBudget(eta_dm=0.96, eta_esc=0.92, eta_d=0.97, eta_el=0.98, visibility=0.96, eta_bs=0.999)
IHA_BUDGET = EfficiencyBudget(
    eta_dm=0.96, eta_esc=0.92, eta_d=0.97, eta_el=0.98, visibility=0.98, eta_bs=0.998, config="IHA", eta_f=0.82, eta_w=0.51
)
PAPER_OPO = OPOParams.from_powers(300.0, 970.0, sideband_ratio=0.13)

# measured values quoted for the two detectors, kept for report annotations
REFERENCE_VALUES = {
    "SHD": {"squeezing_db": -4.9, "squeezing_db_err": 0.5, "purity": 0.68, "ncd": 0.42},
    "IHA": {"squeezing_db": -1.9, "squeezing_db_err": 0.1, "purity": 0.74, "ncd": 0.31},
    "IHA_phase_squeezed_db": -1.9,
    "IHA_amplitude_squeezed_db": -1.2,
}


def total_efficiency(budget: EfficiencyBudget) -> float:
    return budget.eta_dm * budget.eta_esc * budget.eta_hd * budget.eta_d * budget.eta_el


def noise_spectrum(params: OPOParams, eta_tot):
    """``(V-, V+) = 1 -/+ eta 4 sqrt(p) / ((1 +/- sqrt(p))^2 + 4 Omega^2)`` in shot-noise units."""
    eta_tot = check_real(eta_tot, "eta_tot", low=0, high=1)
    if not params.pump_ratio < 1:
        raise ValueError("pump_ratio must be below threshold (< 1)")
    if eta_tot == 0:
        return 1.0, 1.0
    root = math.sqrt(params.pump_ratio)
    gap = (1 - params.pump_ratio) / (1 + root)  # 1 - sqrt(p) without cancellation
    side = 4 * params.sideband_ratio**2
    denom_minus = (1 + root) ** 2 + side
    # 1 - eta 4 sqrt(p) / D  ==  ((1 - eta) 4 sqrt(p) + (1 - sqrt p)^2 + 4 Omega^2) / D, all terms >= 0
    v_minus = ((1 - eta_tot) * 4 * root + gap**2 + side) / denom_minus
    v_plus = 1 + eta_tot * 4 * root / (gap**2 + side)
    return v_minus, v_plus


def electronic_efficiency_from_clearance(clearance_db) -> float:
    """Equivalent efficiency of electronic noise ``clearance_db`` below shot noise."""
    clearance_db = check_real(clearance_db, "clearance_db", low=0, low_open=True)
    return 1 - 10 ** (-clearance_db / 10)


def effective_output_state(params: OPOParams, budget: EfficiencyBudget) -> GaussianState:
    """Gaussian state reaching the detector.

    Unseeded and amplitude-squeezed outputs are squeezed at ``theta = 0``;
    phase-squeezed outputs at ``theta = pi/2`` with the seed displacement on
    the anti-squeezed quadrature.  The seed amplitude is scaled by
    ``sqrt(eta_tot)``.  ``excess_noise`` adds classical noise to the
    anti-squeezed quadrature and along the displacement.
    """
    eta = total_efficiency(budget)
    v_minus, v_plus = noise_spectrum(params, eta)
    alpha = params.seed_amplitude
    if params.seed_phase_mode == "phase_squeezed":
        axis, alpha = math.pi / 2, abs(alpha)
    elif params.seed_phase_mode == "amplitude_squeezed":
        axis, alpha = 0.0, abs(alpha)
    else:
        axis = 0.0
    if v_minus == v_plus == 1.0:
        state = build_state("coherent", amplitude=alpha)
    else:
        state = build_state("squeezed_coherent", amplitude=alpha, v_minus=v_minus, v_plus=v_plus, squeeze_axis=axis)
    mean = math.sqrt(eta) * state.mean
    cov = state.cov
    eps = params.excess_noise
    if eps > 0:
        anti = rotation(axis) @ np.array([0.0, 1.0])
        cov = cov + eps * np.outer(anti, anti)
        if alpha != 0:
            u = np.array([math.cos(np.angle(alpha)), math.sin(np.angle(alpha))])
            cov = cov + eps * np.outer(u, u)
    return GaussianState(mean, cov)


def opo_state_at_unit_efficiency(params: OPOParams) -> GaussianState:
    v_minus, v_plus = noise_spectrum(params, 1.0)
    if v_minus == v_plus:
        return build_state("vacuum")
    return build_state("squeezed_vacuum", v_minus=v_minus, v_plus=v_plus)


def lossy_opo_state(params: OPOParams, eta) -> GaussianState:
    """Unit-efficiency OPO state sent through a pure-loss channel."""
    return apply_loss(opo_state_at_unit_efficiency(params), eta)
