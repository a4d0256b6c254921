"""Single-mode Gaussian states in shot-noise units.

Quadratures follow ``X(theta) = a exp(-i theta) + a^dag exp(i theta)`` so the
vacuum has unit variance at every phase.  A state is a mean vector
``(<X(0)>, <X(pi/2)>)`` and a 2x2 covariance matrix (vacuum = identity).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ._validation import check_real, readonly

STATE_KINDS = ("vacuum", "coherent", "squeezed_vacuum", "squeezed_coherent")

_DET_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Immutable single-mode Gaussian state ``(mean, cov)`` in shot-noise units."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2,) or cov.shape != (2, 2):
            raise ValueError("mean must have shape (2,) and cov shape (2, 2)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state contains non-finite entries")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError("covariance matrix must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise ValueError("covariance matrix must be positive definite")
        if np.linalg.det(cov) < 1 - _DET_SLACK:
            raise ValueError(
                f"unphysical state: det(cov) = {np.linalg.det(cov):.6g} violates the uncertainty bound det >= 1"
            )
        object.__setattr__(self, "mean", readonly(mean))
        object.__setattr__(self, "cov", readonly(cov))

    @property
    def amplitude(self) -> complex:
        """Coherent amplitude alpha with ``<X(theta)> = 2|alpha| cos(theta - arg alpha)``."""
        return complex(self.mean[0], self.mean[1]) / 2

    def __eq__(self, other):
        if not isinstance(other, GaussianState):
            return NotImplemented
        return bool(np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov))

    def __hash__(self):
        return hash((self.mean.tobytes(), self.cov.tobytes()))

    def __repr__(self):
        return f"GaussianState(mean={self.mean.tolist()}, cov={self.cov.tolist()})"


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def build_state(kind, amplitude=0j, v_minus=1.0, v_plus=1.0, squeeze_axis=0.0):
    """Build a state from its coherent amplitude and principal quadrature variances.

    ``squeeze_axis`` is the LO phase at which the variance equals ``v_minus``.
    The amplitude is ignored for ``vacuum`` and ``squeezed_vacuum``; the
    variances are ignored for ``vacuum`` and ``coherent``.
    """
    if kind not in STATE_KINDS:
        raise ValueError(f"unknown state kind {kind!r}; expected one of {STATE_KINDS}")
    alpha = complex(amplitude)
    if kind in ("vacuum", "squeezed_vacuum"):
        alpha = 0j
    if kind in ("vacuum", "coherent"):
        cov = np.eye(2)
    else:
        v_minus = check_real(v_minus, "v_minus", low=0, low_open=True)
        v_plus = check_real(v_plus, "v_plus", low=0, low_open=True)
        if v_minus * v_plus < 1 - _DET_SLACK:
            raise ValueError(f"unphysical variances: v_minus * v_plus = {v_minus * v_plus:.6g} < 1")
        if not v_minus <= 1 <= v_plus:
            raise ValueError("squeezed states need v_minus <= 1 <= v_plus")
        rot = rotation(check_real(squeeze_axis, "squeeze_axis"))
        cov = rot @ np.diag([v_minus, v_plus]) @ rot.T
    return GaussianState(np.array([2 * alpha.real, 2 * alpha.imag]), cov)


def vacuum():
    return build_state("vacuum")


def coherent(alpha):
    return build_state("coherent", amplitude=alpha)


def thermal(nbar):
    """Thermal state with mean photon number ``nbar`` (variance ``2 nbar + 1``)."""
    nbar = check_real(nbar, "nbar", low=0)
    return GaussianState(np.zeros(2), (2 * nbar + 1) * np.eye(2))


def apply_loss(state: GaussianState, eta) -> GaussianState:
    """Pure-loss channel with transmissivity ``eta``."""
    eta = check_real(eta, "eta", low=0, high=1)
    return GaussianState(np.sqrt(eta) * state.mean, eta * state.cov + (1 - eta) * np.eye(2))


def quadrature_stats(state: GaussianState, theta):
    """Mean and variance of ``X(theta)``; ``theta`` may be an array."""
    c, s = np.cos(theta), np.sin(theta)
    mean = c * state.mean[0] + s * state.mean[1]
    cov = state.cov
    var = c * c * cov[0, 0] + 2 * c * s * cov[0, 1] + s * s * cov[1, 1]
    return mean, var


def quadrature_pdf(state: GaussianState, theta, x):
    """Probability density of measuring ``x`` (shot-noise units) at LO phase ``theta``."""
    mean, var = quadrature_stats(state, theta)
    return np.exp(-((x - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)


def gaussian_purity(state: GaussianState) -> float:
    return float(1 / np.sqrt(np.linalg.det(state.cov)))


def gaussian_ncd(state: GaussianState) -> float:
    """Nonclassical depth: smallest added vacuum-noise fraction making P positive."""
    lam_min = np.linalg.eigvalsh(state.cov)[0]
    return float(max(0.0, (1 - lam_min) / 2))


def squeezing_parameters(state: GaussianState):
    """Return ``(nbar, r, axis)`` with ``cov = (2 nbar + 1) R(axis) diag(e^-2r, e^2r) R(axis)^T``."""
    evals, evecs = np.linalg.eigh(state.cov)
    nu = np.sqrt(max(evals[0] * evals[1], 1.0))
    r = 0.5 * np.log(max(evals[1] / evals[0], 1.0)) / 2
    v = evecs[:, 0]
    axis = float(np.arctan2(v[1], v[0]) % np.pi)
    return (nu - 1) / 2, float(r), axis


def _ladder(dim):
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1)
    return a, a.T.copy()


def fock_density_matrix(state: GaussianState, cutoff, work_dim=None):
    """Fock-basis density matrix of ``state`` truncated to photon numbers ``<= cutoff``.

    The state is assembled as ``D R S rho_th S^dag R^dag D^dag`` in a larger
    working space and then cropped, so the retained block is accurate as long
    as ``work_dim`` comfortably exceeds the photon-number support.
    """
    nbar, r, axis = squeezing_parameters(state)
    alpha = state.amplitude
    energy = nbar + np.sinh(r) ** 2 + abs(alpha) ** 2
    if work_dim is None:
        work_dim = int(cutoff + 60 + 25 * energy + 40 * r)
    a, ad = _ladder(work_dim)
    n = np.arange(work_dim)
    if nbar > 0:
        q = nbar / (1 + nbar)
        rho = np.diag((1 - q) * q**n).astype(complex)
    else:
        rho = np.zeros((work_dim, work_dim), complex)
        rho[0, 0] = 1
    if r > 0:
        sq = expm(0.5 * r * (a @ a - ad @ ad))
        rho = sq @ rho @ sq.conj().T
    rot = np.exp(1j * axis * n)
    rho = rot[:, None] * rho * rot.conj()[None, :]
    if alpha != 0:
        disp = expm(alpha * ad - np.conj(alpha) * a)
        rho = disp @ rho @ disp.conj().T
    rho = rho[: cutoff + 1, : cutoff + 1]
    return 0.5 * (rho + rho.conj().T)
