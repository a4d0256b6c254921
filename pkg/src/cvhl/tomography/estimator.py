"""Pattern-function sampling estimator for the Fock-basis density matrix."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import DataQualityError, check_count
from ..gaussian import GaussianState, quadrature_stats
from ..scan import HomodyneTrace, phase_density
from .density import DensityMatrix, project_psd
from .kernels import DEFAULT_RANGE, DEFAULT_STEP, MAX_CUTOFF, PatternKernel, _evaluate, build_kernel, index_pairs

SHOT_NOISE_TO_CANONICAL = 1 / math.sqrt(2)
COVERAGE_BINS = 20
SAMPLES_PER_PARAMETER = 50
CHUNK = 4096
WEIGHTINGS = ("auto", "uniform", "scan", "histogram")


class CoverageError(DataQualityError):
    def __init__(self, empty_bins):
        self.empty_bins = list(empty_bins)
        super().__init__(f"insufficient LO phase coverage: empty bins {self.empty_bins} (of {COVERAGE_BINS} bins of pi/{COVERAGE_BINS})")


def max_threads():
    try:
        return max(1, int(os.environ.get("CVHL_THREADS", "1")))
    except ValueError:
        return 1


def fold_phase(theta, x):
    """Reduce phases to ``[0, pi)`` using ``X(theta + pi) = -X(theta)``."""
    turns = np.floor(np.asarray(theta) / np.pi)
    sign = np.where(turns % 2 == 0, 1.0, -1.0)
    return np.asarray(theta) - turns * np.pi, sign * np.asarray(x)


def empty_phase_bins(theta, n_bins=COVERAGE_BINS):
    folded, _ = fold_phase(theta, np.zeros_like(theta))
    idx = np.minimum((folded / (np.pi / n_bins)).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return [int(b) for b in np.nonzero(counts == 0)[0]]


def check_trace(trace):
    """Accept a :class:`HomodyneTrace` or an ``(M, 2)`` array of ``(theta, x)`` rows."""
    if isinstance(trace, HomodyneTrace):
        out = trace
    else:
        arr = np.asarray(trace, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected a HomodyneTrace or an (M, 2) array of (theta, x), got shape {arr.shape}")
        out = HomodyneTrace(np.arange(arr.shape[0], dtype=float), arr[:, 0], arr[:, 1], source_label="array")
    if len(out) < 2:
        raise DataQualityError("trace needs at least two samples")
    if not np.ptp(out.x) > 0:
        raise DataQualityError("trace quadrature values have zero variance")
    return out


def _sample_weights(trace: HomodyneTrace, weighting):
    theta = trace.theta
    if weighting == "auto":
        weighting = "scan" if trace.scan is not None and trace.scan.kind != "linear" else "uniform"
    if weighting == "uniform":
        w = np.ones(theta.size)
    elif weighting == "scan":
        if trace.scan is None:
            raise ValueError("weighting='scan' needs a trace with a scan model")
        scan = trace.scan
        folded, _ = fold_phase(theta, np.zeros_like(theta))
        lo, hi = scan.theta_range
        dens = np.zeros(theta.size)
        # all branches theta_folded + j pi that the scan visits
        for j in range(int(math.floor(lo / np.pi)) - 1, int(math.ceil(hi / np.pi)) + 1):
            branch = folded + j * np.pi
            inside = (branch >= lo) & (branch <= hi)
            dens[inside] += phase_density(scan, branch[inside])
        with np.errstate(divide="ignore"):
            w = np.where(dens > 0, 1 / dens, 0.0)
    elif weighting == "histogram":
        folded, _ = fold_phase(theta, np.zeros_like(theta))
        idx = np.minimum((folded / (np.pi / COVERAGE_BINS)).astype(int), COVERAGE_BINS - 1)
        counts = np.bincount(idx, minlength=COVERAGE_BINS)
        w = 1 / counts[idx]
    else:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    return w * (theta.size / w.sum()), weighting


def _pair_phases(pairs):
    return np.array([m - n for n, m in pairs])


def _kernel_rows(kernel: PatternKernel, x_sn, theta):
    """Per-sample contributions ``f_nm(x_k) exp(-i (m - n) theta_k)``, shape (M, n_pairs)."""
    f = kernel(x_sn * SHOT_NOISE_TO_CANONICAL)
    d = _pair_phases(kernel.pairs)
    return f * np.exp(-1j * np.outer(theta, d))


def _weighted_sum(kernel, x, theta, weights):
    """Fixed-order chunked sum of ``w_k F(x_k, theta_k)``; identical for any thread count."""
    starts = list(range(0, x.size, CHUNK))

    def partial(start):
        sl = slice(start, start + CHUNK)
        return weights[sl] @ _kernel_rows(kernel, x[sl], theta[sl])

    threads = min(max_threads(), len(starts))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            partials = list(pool.map(partial, starts))
    else:
        partials = [partial(s) for s in starts]
    return np.sum(np.array(partials), axis=0)


def _assemble(pairs, values, cutoff):
    rho = np.zeros((cutoff + 1, cutoff + 1), complex)
    for (n, m), v in zip(pairs, values):
        rho[n, m] = v
        rho[m, n] = np.conj(v)
    return rho


def _finish(rho, normalize=True):
    rho = 0.5 * (rho + rho.conj().T)
    if normalize:
        rho = rho / np.real(np.trace(rho))
    return rho


def estimate_density_matrix(
    trace,
    cutoff,
    *,
    weighting="auto",
    normalize=True,
    psd_projection=False,
    kernel: PatternKernel | None = None,
) -> DensityMatrix:
    """Sample average of pattern functions over a shot-noise-calibrated trace.

    ``rho_nm = (1/M) sum_k w_k f_nm(x_k / sqrt 2) exp(i (n - m) theta_k)``;
    the ``1/sqrt 2`` converts shot-noise units to the canonical units of
    the pattern functions.  Raises :class:`CoverageError` when any ``pi/20``
    phase bin is empty.
    """
    trace = check_trace(trace)
    cutoff = check_count(cutoff, "cutoff", maximum=MAX_CUTOFF)
    empty = empty_phase_bins(trace.theta)
    if empty:
        raise CoverageError(empty)
    diagnostics = {"n_samples": len(trace), "empty_bins": []}
    n_params = (cutoff + 1) ** 2 - 1
    if len(trace) < SAMPLES_PER_PARAMETER * n_params:
        message = (
            f"cutoff {cutoff} has {n_params} free parameters; {len(trace)} samples is fewer than "
            f"{SAMPLES_PER_PARAMETER} per parameter"
        )
        warnings.warn(message, stacklevel=2)
        diagnostics["cutoff_warning"] = message
    kernel = kernel or build_kernel(cutoff)
    weights, used = _sample_weights(trace, weighting)
    diagnostics["weighting"] = used
    sums = _weighted_sum(kernel, trace.x, trace.theta, weights)
    rho = _finish(_assemble(kernel.pairs, sums / len(trace), cutoff), normalize)
    dm = DensityMatrix(rho, diagnostics)
    dm.diagnostics["trailing_diagonal"] = float(np.real(rho[cutoff, cutoff]))
    dm.diagnostics["negative_diagonal"] = dm.negative_diagonal
    if psd_projection:
        dm = project_psd(dm)
    return dm


def bootstrap_errors(trace, cutoff, resamples=200, seed=0, *, weighting="auto", kernel=None):
    """Entrywise standard error of the estimate from resampling the trace with replacement.

    Returns a real ``(cutoff+1, cutoff+1)`` array of ``sqrt(var Re + var Im)``.
    Per-sample weights are kept from the full trace.
    """
    trace = check_trace(trace)
    cutoff = check_count(cutoff, "cutoff", maximum=MAX_CUTOFF)
    resamples = check_count(resamples, "resamples", minimum=50)
    kernel = kernel or build_kernel(cutoff)
    weights, _ = _sample_weights(trace, weighting)
    m = len(trace)
    rng = np.random.default_rng(np.random.SeedSequence([check_count(seed, "seed"), 0xB007]))
    counts = np.empty((resamples, m), dtype=np.float32)
    for b in range(resamples):
        counts[b] = np.bincount(rng.integers(0, m, m), minlength=m)
    counts *= weights.astype(np.float32)
    sums = np.zeros((resamples, len(kernel.pairs)), complex)
    for start in range(0, m, CHUNK):
        sl = slice(start, start + CHUNK)
        sums += counts[:, sl].astype(float) @ _kernel_rows(kernel, trace.x[sl], trace.theta[sl])
    sums /= counts.astype(float).sum(axis=1, keepdims=True)
    estimates = np.array([_finish(_assemble(kernel.pairs, s, cutoff)) for s in sums])
    return np.sqrt(np.var(estimates.real, axis=0, ddof=1) + np.var(estimates.imag, axis=0, ddof=1))


def integral_oracle(state: GaussianState, cutoff, n_theta=128, n_x=600, x_max=DEFAULT_RANGE):
    """Replace the sample mean by the exact double integral over the Gaussian
    quadrature distribution; reproduces the true truncated ``rho`` if the
    pattern functions are right.  No renormalization is applied."""
    from numpy.polynomial.legendre import leggauss

    pairs = index_pairs(cutoff)
    u, wx = leggauss(n_x)
    xc = x_max * u  # canonical units
    wx = x_max * wx
    thetas = np.arange(n_theta) * np.pi / n_theta
    f = _evaluate(pairs, xc, cutoff)  # (n_x, n_pairs)
    mean, var = quadrature_stats(state, thetas)  # shot-noise units
    mean_c = mean / math.sqrt(2)
    var_c = var / 2
    pdf = np.exp(-((xc[None, :] - mean_c[:, None]) ** 2) / (2 * var_c[:, None])) / np.sqrt(2 * np.pi * var_c[:, None])
    radial = (pdf * wx) @ f  # (n_theta, n_pairs)
    d = _pair_phases(pairs)
    phase = np.exp(-1j * np.outer(thetas, d))
    values = np.mean(radial * phase, axis=0)
    return _assemble(pairs, values, cutoff)


class PatternFunctionTomography(BaseEstimator):
    """Density-matrix reconstruction from homodyne data.

    Parameters
    ----------
    cutoff : int
        Largest photon number kept.
    weighting : {"auto", "uniform", "scan", "histogram"}
        Phase-density compensation; "auto" uses the trace's scan model when it
        is not linear.
    bootstrap : int
        Number of bootstrap resamples for error bars (0 disables).
    psd_projection : bool
        Project the estimate onto unit-trace positive matrices.
    random_state : int
        Seed for the bootstrap.
    """

    def __init__(self, cutoff=12, weighting="auto", bootstrap=0, psd_projection=False, random_state=0):
        self.cutoff = cutoff
        self.weighting = weighting
        self.bootstrap = bootstrap
        self.psd_projection = psd_projection
        self.random_state = random_state

    def fit(self, trace, y=None):
        trace = check_trace(trace)
        kernel = build_kernel(self.cutoff)
        rho = estimate_density_matrix(
            trace, self.cutoff, weighting=self.weighting, psd_projection=self.psd_projection, kernel=kernel
        )
        if self.bootstrap:
            errors = bootstrap_errors(trace, self.cutoff, self.bootstrap, self.random_state, weighting=self.weighting, kernel=kernel)
            rho.diagnostics["bootstrap_errors"] = errors
            self.bootstrap_errors_ = errors
        self.density_matrix_ = rho
        self.n_samples_ = len(trace)
        return self

    def transform(self, trace):
        """Density matrices are per trace: returns the entries for ``trace``."""
        return PatternFunctionTomography(**self.get_params()).fit(trace).density_matrix_.entries

    def expectation(self, operator):
        check_is_fitted(self, "density_matrix_")
        op = np.asarray(operator)
        return complex(np.trace(self.density_matrix_.entries @ op))
