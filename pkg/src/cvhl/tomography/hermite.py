"""Harmonic-oscillator eigenfunctions and their irregular partners.

Canonical units: ``x = (a + a^dag)/sqrt(2)``, vacuum variance 1/2.
"""

from __future__ import annotations

import numpy as np
from scipy.special import dawsn

from .._validation import NumericalError, check_count

MAX_INDEX = 60

_PHI0_SCALE = 2 * np.pi**0.25


def _check_index(n):
    return check_count(n, "n", minimum=0, maximum=MAX_INDEX)


def eigenfunctions(n_max, x):
    """Array ``psi[k] = psi_k(x)`` for ``k = 0..n_max`` by the three-term recurrence."""
    n_max = _check_index(n_max)
    x = np.asarray(x, dtype=float)
    psi = np.empty((n_max + 1,) + x.shape)
    psi[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for k in range(2, n_max + 1):
        psi[k] = np.sqrt(2.0 / k) * x * psi[k - 1] - np.sqrt((k - 1) / k) * psi[k - 2]
    return psi


def eigenfunction_psi(n, x):
    """Normalized oscillator eigenfunction ``psi_n(x)``."""
    return eigenfunctions(n, x)[_check_index(n)]


def _raise(u, du, x, k):
    """Apply the creation operator to the solution ``(u, u')`` of level ``k``."""
    norm = np.sqrt(2.0 * (k + 1))
    ddu = (x * x - 2 * k - 1) * u
    return (x * u - du) / norm, (u + x * du - ddu) / norm


def eigenfunction_with_derivative(n, x):
    n = _check_index(n)
    x = np.asarray(x, dtype=float)
    u = np.pi**-0.25 * np.exp(-0.5 * x * x)
    du = -x * u
    for k in range(n):
        u, du = _raise(u, du, x, k)
    return u, du


def irregular_with_derivative(n, x):
    """Irregular solution ``phi_n`` and its derivative.

    ``phi_0 = 2 pi^(1/4) exp(x^2/2) F(x)`` (``F`` the Dawson integral) is odd,
    and higher levels follow from the same ladder as ``psi_n``, which keeps the
    Wronskian ``psi_n phi_n' - psi_n' phi_n = 2`` for every ``n``.  The forward
    ladder loses accuracy for ``|x|`` well outside the classically allowed
    region; use :func:`cvhl.tomography.kernels.pattern_function` there.
    """
    n = _check_index(n)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 26):
        raise NumericalError("irregular solution overflows for |x| > 26")
    growth = np.exp(0.5 * x * x)
    daw = dawsn(x)
    u = _PHI0_SCALE * growth * daw
    du = _PHI0_SCALE * growth * (1 - x * daw)
    for k in range(n):
        u, du = _raise(u, du, x, k)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
        raise NumericalError(f"non-finite irregular solution at level {n}")
    return u, du


def irregular_phi(n, x):
    return irregular_with_derivative(n, x)[0]


def wronskian(n, x):
    psi, dpsi = eigenfunction_with_derivative(n, x)
    phi, dphi = irregular_with_derivative(n, x)
    return psi * dphi - dpsi * phi
