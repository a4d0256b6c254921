"""Phase-space and moment analysis of Fock-basis density matrices.

Phase-space functions use canonical coordinates ``x, p`` with vacuum
variance 1/2 (vacuum Wigner peak ``1/pi``); every variance returned to the
caller is in shot-noise units, obtained through :func:`canonical_to_shot_noise`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from ._validation import check_real
from .tomography.density import DensityMatrix, as_density_matrix

SHOT_NOISE_PER_CANONICAL = 2.0


def canonical_to_shot_noise(variance):
    return SHOT_NOISE_PER_CANONICAL * np.asarray(variance)


def shot_noise_to_canonical(variance):
    return np.asarray(variance) / SHOT_NOISE_PER_CANONICAL


def squeezing_db(variance) -> float:
    variance = check_real(variance, "variance", low=0, low_open=True)
    return 10 * math.log10(variance)


def purity(rho) -> float:
    rho = as_density_matrix(rho).entries
    return float(np.real(np.sum(rho * rho.T)))


# --- s-ordered quasiprobabilities -------------------------------------------


def _s_ordered(entries, x, p, s):
    """s-parametrized quasiprobability on canonical ``(x, p)`` arrays, ``-1 < s < 1``.

    Uses the closed-form Laguerre kernel of ``|m><n|``; ``s = 0`` is the
    Wigner function, ``s -> -1`` the Husimi function.
    """
    alpha = (np.asarray(x) + 1j * np.asarray(p)) / np.sqrt(2)
    r2 = np.abs(alpha) ** 2
    dim = entries.shape[0]
    one_m = 1 - s
    t = (s + 1) / (s - 1)
    arg = 4 * r2 / (1 - s * s)
    z = 2 * np.conj(alpha) / one_m
    out = np.zeros(alpha.shape, dtype=complex)
    for n in range(dim):
        for m in range(n, dim):
            rho_mn = entries[m, n]
            if rho_mn == 0:
                continue
            d = m - n
            coef = t**n * math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
            term = coef * z**d * eval_genlaguerre(n, d, arg)
            out += rho_mn * term if d == 0 else 2 * rho_mn * term
    # alpha-plane density -> (x, p) density
    return (np.real(out) * np.exp(-2 * r2 / one_m) / (np.pi * one_m))


@dataclass
class WignerGrid:
    """Wigner function tabulated on a square canonical-units grid."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # indexed [i_p, i_x]

    @property
    def step(self):
        return float(self.x[1] - self.x[0])

    def normalization(self):
        return float(self.values.sum() * self.step * (self.p[1] - self.p[0]))

    def x_marginal(self):
        return self.values.sum(axis=0) * (self.p[1] - self.p[0])


def wigner_function(rho, extent=6.0, step=0.05, x_center=0.0, p_center=0.0) -> WignerGrid:
    """Wigner function of ``rho`` on ``[-extent, extent]^2`` around the given centre."""
    step = check_real(step, "step", low=0, low_open=True)
    if step > 0.5:
        raise ValueError(f"Wigner grid step {step} too coarse (must be <= 0.5)")
    entries = as_density_matrix(rho).entries
    n_side = int(round(2 * extent / step)) + 1
    x = x_center + np.linspace(-extent, extent, n_side)
    p = p_center + np.linspace(-extent, extent, n_side)
    X, P = np.meshgrid(x, p)
    return WignerGrid(x, p, _s_ordered(entries, X, P, 0.0))


def wigner_at(rho, x, p):
    return _s_ordered(as_density_matrix(rho).entries, x, p, 0.0)


def s_ordered_function(rho, x, p, s):
    s = check_real(s, "s", low=-1, high=1, low_open=True, high_open=True)
    return _s_ordered(as_density_matrix(rho).entries, x, p, s)


# --- moments ------------------------------------------------------------------


def _moments(entries):
    dim = entries.shape[0]
    n = np.arange(dim)
    # Tr[rho a] = sum_n sqrt(n) <n|rho|n-1>
    mean_a = np.sum(np.sqrt(n[1:]) * entries[n[1:], n[1:] - 1])
    mean_a2 = np.sum(np.sqrt(n[2:] * (n[2:] - 1)) * entries[n[2:], n[2:] - 2])
    mean_n = np.real(np.sum(n * np.diag(entries)))
    return mean_a, mean_a2, mean_n


def quadrature_variance_curve(rho, thetas):
    """``[(theta, Var[X(theta)])]`` in shot-noise units from the first and second moments."""
    entries = as_density_matrix(rho).entries
    mean_a, mean_a2, mean_n = _moments(entries)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phase = np.exp(-1j * thetas)
    var = 1 + 2 * mean_n + 2 * np.real(mean_a2 * phase**2) - (2 * np.real(mean_a * phase)) ** 2
    return [(float(t), float(v)) for t, v in zip(thetas, var)]


def moment_covariance(rho):
    """Shot-noise-unit mean vector and covariance implied by the first two moments of ``rho``."""
    mean_a, mean_a2, mean_n = _moments(as_density_matrix(rho).entries)
    mean = np.array([2 * mean_a.real, 2 * mean_a.imag])
    c = 1 + 2 * mean_n
    cov = np.array(
        [[c + 2 * mean_a2.real, 2 * mean_a2.imag], [2 * mean_a2.imag, c - 2 * mean_a2.real]]
    ) - np.outer(mean, mean)
    return mean, cov


def moment_gaussian_ncd(rho) -> float:
    """Nonclassical depth of the Gaussian state sharing ``rho``'s first and second moments."""
    _, cov = moment_covariance(rho)
    return float(max(0.0, (1 - np.linalg.eigvalsh(cov)[0]) / 2))


def quadrature_means(rho, thetas):
    entries = as_density_matrix(rho).entries
    mean_a, _, _ = _moments(entries)
    return 2 * np.real(mean_a * np.exp(-1j * np.asarray(thetas)))


# --- nonclassical depth -------------------------------------------------------


@dataclass
class NCDResult:
    value: float
    reliable: bool
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def _phase_space_box(entries):
    """Starting half-width (canonical units): beyond the classical turning
    point of the highest Fock level plus three vacuum widths."""
    dim = entries.shape[0]
    mean_n = float(np.real(np.sum(np.arange(dim) * np.diag(entries))))
    return math.sqrt(2) * (math.sqrt(2 * dim + 1 + 4 * max(mean_n, 0.0)) + 3.0)


def _min_on_grid(entries, s, n_side):
    half = _phase_space_box(entries)
    while True:
        xs = np.linspace(-half, half, n_side)
        X, P = np.meshgrid(xs, xs)
        vals = _s_ordered(entries, X, P, s)
        edge = np.concatenate([vals[0], vals[-1], vals[:, 0], vals[:, -1]])
        # past the last Laguerre zero the Gaussian envelope decays monotonically,
        # so a numerically flat boundary bounds any exterior negativity
        if np.max(np.abs(edge)) < 1e-9 or half > 40:
            return float(vals.min()), half
        half *= 1.25


def nonclassical_depth(rho, tol=1e-6, iterations=12, grid_points=121) -> NCDResult:
    """Smallest smoothing ``tau`` in ``[0, 1/2]`` whose s-ordered function (``s = 1 - 2 tau``) is
    non-negative to ``-tol`` on a grid covering the state.

    Bisection over ``tau``; the endpoint ``tau = 1/2`` (Wigner function) is
    tested first and returned when already negative.
    """
    dm = as_density_matrix(rho)
    entries = dm.entries
    trailing = float(np.real(entries[-1, -1]))
    diagnostics = {"trailing_diagonal": trailing}
    reliable = trailing <= 0.01
    if not reliable:
        warnings.warn(
            f"trailing diagonal {trailing:.3g} > 0.01: cutoff too small, nonclassical depth unreliable",
            stacklevel=2,
        )

    def negative(tau):
        s = 1 - 2 * tau
        low, _ = _min_on_grid(entries, s, grid_points)
        return low < -tol

    if negative(0.5):
        diagnostics["wigner_negative"] = True
        return NCDResult(0.5, False, diagnostics)
    lo, hi = 0.0, 0.5
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if negative(mid):
            lo = mid
        else:
            hi = mid
    # never negative on the way down: classical to within the bisection resolution
    value = hi if lo > 0 else 0.0
    diagnostics["bracket"] = [lo, hi]
    return NCDResult(float(value), reliable, diagnostics)
