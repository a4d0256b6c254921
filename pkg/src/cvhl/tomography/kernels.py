"""Pattern functions ``f_nm(x) = d/dx [psi_n(x) phi_m(x)]`` for homodyne tomography.

The derivative product is evaluated through its Fourier representation

    f_nm(x) = sqrt(n!/m!) 2^(-d/2) int_0^inf k^(d+1) exp(-k^2/4)
              L_n^(d)(k^2/2) cos(k x - d pi/2) dk,        d = m - n >= 0,

which follows from ``<n|exp(i k x)|m>`` and is free of the cancellation that
the forward ladder for ``phi_m`` suffers at large ``|x|``.  The integral is
done by Gauss-Legendre quadrature on a finite ``k`` range beyond which the
Gaussian envelope is below double precision.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_genlaguerre, gammaln

from .._validation import check_count, check_real, readonly
from .hermite import MAX_INDEX

DEFAULT_RANGE = 12.0
DEFAULT_STEP = 1e-3
MAX_CUTOFF = 40

_BLOCK = 4096


def index_pairs(cutoff):
    return [(n, m) for n in range(cutoff + 1) for m in range(n, cutoff + 1)]


@functools.lru_cache(maxsize=16)
def _quadrature(cutoff, x_max):
    k_max = math.sqrt(8 * cutoff + 4) + 14.0
    n_nodes = int(max(200, 4 * (k_max * x_max / (2 * math.pi) + cutoff) + 100))
    u, w = leggauss(n_nodes)
    k = 0.5 * k_max * (u + 1)
    return k, 0.5 * k_max * w


def _spectral_weights(pairs, k, w):
    """Columns of the cosine and sine quadrature weights for each ``(n, m)`` pair."""
    cos_w = np.zeros((k.size, len(pairs)))
    sin_w = np.zeros_like(cos_w)
    log_k = np.log(k)
    for j, (n, m) in enumerate(pairs):
        d = m - n
        lognorm = 0.5 * (gammaln(n + 1) - gammaln(m + 1)) - 0.5 * d * math.log(2.0)
        g = w * np.exp(lognorm + (d + 1) * log_k - 0.25 * k * k) * eval_genlaguerre(n, d, 0.5 * k * k)
        # cos(kx - d pi/2) = cos(kx) cos(d pi/2) + sin(kx) sin(d pi/2)
        if d % 2 == 0:
            cos_w[:, j] = g * (-1) ** (d // 2)
        else:
            sin_w[:, j] = g * (-1) ** ((d - 1) // 2)
    return cos_w, sin_w


def _evaluate(pairs, x, cutoff):
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    x_max = max(float(np.max(np.abs(flat), initial=0.0)), 1.0)
    k, w = _quadrature(cutoff, math.ceil(x_max))
    cos_w, sin_w = _spectral_weights(pairs, k, w)
    out = np.empty((flat.size, len(pairs)))
    for start in range(0, flat.size, _BLOCK):
        kx = np.outer(flat[start : start + _BLOCK], k)
        out[start : start + _BLOCK] = np.cos(kx) @ cos_w + np.sin(kx) @ sin_w
    return out.reshape(x.shape + (len(pairs),))


def pattern_function(n, m, x):
    """Pattern function ``f_nm`` at canonical-unit positions ``x`` (symmetric in ``n, m``)."""
    n = check_count(n, "n", maximum=MAX_INDEX)
    m = check_count(m, "m", maximum=MAX_INDEX)
    if n > m:
        n, m = m, n
    return _evaluate([(n, m)], x, m)[..., 0]


def pattern_function_product(n, m, x):
    """``d/dx [psi_n phi_m]`` straight from the ladder-built eigenfunctions.

    Only accurate inside the region where the irregular ladder is stable
    (roughly ``|x| < 4`` for ``m <= 10``); kept as an independent cross-check.
    """
    from .hermite import eigenfunction_with_derivative, irregular_with_derivative

    if n > m:
        n, m = m, n
    psi, dpsi = eigenfunction_with_derivative(n, x)
    phi, dphi = irregular_with_derivative(m, x)
    return dpsi * phi + psi * dphi


@dataclass(frozen=True, eq=False)
class PatternKernel:
    """Pattern functions for all ``0 <= n <= m <= cutoff`` tabulated on a uniform grid."""

    cutoff: int
    x_max: float
    step: float
    pairs: tuple
    table: np.ndarray  # (n_grid, n_pairs)

    @property
    def grid(self):
        return np.linspace(-self.x_max, self.x_max, self.table.shape[0])

    @property
    def pair_index(self):
        return {pair: j for j, pair in enumerate(self.pairs)}

    def __call__(self, x):
        """Linearly interpolated kernel values, shape ``x.shape + (n_pairs,)``.

        Points beyond the tabulated range fall back to direct evaluation.
        """
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        pos = (flat + self.x_max) / self.step
        inside = (pos >= 0) & (pos <= self.table.shape[0] - 1)
        out = np.empty((flat.size, len(self.pairs)))
        p_in = pos[inside]
        i0 = np.minimum(p_in.astype(np.intp), self.table.shape[0] - 2)
        frac = (p_in - i0)[:, None]
        out[inside] = self.table[i0] * (1 - frac) + self.table[i0 + 1] * frac
        if not np.all(inside):
            out[~inside] = _evaluate(list(self.pairs), flat[~inside], self.cutoff)
        return out.reshape(x.shape + (len(self.pairs),))

    def bound(self):
        return float(np.max(np.abs(self.table)))


@functools.lru_cache(maxsize=4)
def _cached_kernel(cutoff, x_max, step):
    n_grid = int(round(2 * x_max / step)) + 1
    grid = np.linspace(-x_max, x_max, n_grid)
    pairs = tuple(index_pairs(cutoff))
    table = _evaluate(list(pairs), grid, cutoff)
    return PatternKernel(cutoff, x_max, 2 * x_max / (n_grid - 1), pairs, readonly(table))


def build_kernel(cutoff, x_max=DEFAULT_RANGE, step=DEFAULT_STEP) -> PatternKernel:
    cutoff = check_count(cutoff, "cutoff", maximum=MAX_CUTOFF)
    x_max = check_real(x_max, "x_max", low=0, low_open=True)
    step = check_real(step, "step", low=0, low_open=True)
    return _cached_kernel(cutoff, x_max, step)
