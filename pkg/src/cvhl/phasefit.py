"""Recover the LO phase-scan model from the fringe of a coherent-state trace."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import DataQualityError, NumericalError
from .scan import HomodyneTrace, PhaseScanModel, _phase

MIN_FRINGE_AMPLITUDE = 1.0
MAX_EVALUATIONS = 2000


class PhaseFitError(NumericalError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (final residual {residual:.4g})")
        self.residual = residual


def windowed_mean(trace: HomodyneTrace, window=None):
    """Block averages ``(t, x)`` over consecutive windows of ``window`` samples."""
    m = len(trace)
    window = window or max(10, m // 250)
    n_blocks = m // window
    if n_blocks < 8:
        raise DataQualityError(f"trace too short for windowed fringe fit ({m} samples, window {window})")
    cut = n_blocks * window
    t = trace.t[:cut].reshape(n_blocks, window).mean(axis=1)
    x = trace.x[:cut].reshape(n_blocks, window).mean(axis=1)
    return t, x


def fringe_amplitude(x_means):
    """Amplitude of a sinusoid with the same spread as ``x_means``."""
    return math.sqrt(2.0) * float(np.std(x_means))


def _unpack(params, initial, fit_exponent):
    theta0, span, amp = params[:3]
    exponent = params[3] if fit_exponent else initial.exponent
    kind = "power_law" if fit_exponent or initial.kind == "power_law" else "linear"
    return replace(initial, kind=kind, theta0=float(theta0), span=float(span), exponent=float(exponent)), amp


def fringe_residual(model: PhaseScanModel, amplitude, t, x_means, carrier_phase=0.0):
    return x_means - amplitude * np.cos(_phase(model, t) - carrier_phase)


def fit_phase_model(trace: HomodyneTrace, initial: PhaseScanModel, *, fit_exponent=None, window=None, carrier_phase=0.0):
    """Least-squares fit of ``(theta0, span[, exponent])`` and the fringe amplitude ``2|alpha|``.

    Returns ``(model, amplitude, rms_residual)``.  ``fit_exponent`` defaults
    to ``True`` for power-law initial models.  The coherent amplitude's phase
    is fixed by ``carrier_phase`` because only ``theta0 - arg(alpha)`` is
    observable.
    """
    if fit_exponent is None:
        fit_exponent = initial.kind == "power_law"
    if initial.duration < trace.t[-1] * (1 - 1e-9):
        initial = replace(initial, duration=float(trace.t[-1]))
    t, xm = windowed_mean(trace, window)
    amp0 = fringe_amplitude(xm)
    if amp0 < MIN_FRINGE_AMPLITUDE:
        raise DataQualityError(f"no usable fringe: amplitude {amp0:.3g} < {MIN_FRINGE_AMPLITUDE} (needs |alpha| >= ~1)")

    def residuals(params):
        model, amp = _unpack(params, initial, fit_exponent)
        return fringe_residual(model, amp, t, xm, carrier_phase)

    lower = [-np.inf, 1e-6, 0.0] + ([1.0] if fit_exponent else [])
    upper = [np.inf, np.inf, np.inf] + ([6.0] if fit_exponent else [])
    starts = []
    exponents = [initial.exponent] + ([1.0, 1.5, 2.0, 2.5, 3.0] if fit_exponent else [])
    for p in dict.fromkeys(exponents):
        for scale in (1.0, 1.25, 0.8):
            x0 = [initial.theta0, initial.span * scale, amp0] + ([p] if fit_exponent else [])
            starts.append(x0)
    best = None
    for x0 in starts:
        res = least_squares(residuals, x0, bounds=(lower, upper), max_nfev=MAX_EVALUATIONS)
        if best is None or res.cost < best.cost:
            best = res
    rms = math.sqrt(2 * best.cost / t.size)
    if best.status <= 0:
        raise PhaseFitError("phase-model fit did not converge", rms)
    model, amp = _unpack(best.x, initial, fit_exponent)
    return model, float(amp), rms


class PhaseModelFitter(BaseEstimator):
    """sklearn-style wrapper: ``fit(trace)`` then ``predict(t)`` gives the LO phase."""

    def __init__(self, initial=None, fit_exponent=None, window=None, carrier_phase=0.0):
        self.initial = initial
        self.fit_exponent = fit_exponent
        self.window = window
        self.carrier_phase = carrier_phase

    def fit(self, trace, y=None):
        initial = self.initial or trace.scan or PhaseScanModel(duration=float(trace.t[-1]))
        self.model_, self.amplitude_, self.residual_ = fit_phase_model(
            trace, initial, fit_exponent=self.fit_exponent, window=self.window, carrier_phase=self.carrier_phase
        )
        return self

    def predict(self, t):
        check_is_fitted(self, "model_")
        return _phase(self.model_, np.asarray(t, dtype=float))

    def score(self, trace, y=None):
        """Negative RMS fringe residual on ``trace``."""
        check_is_fitted(self, "model_")
        t, xm = windowed_mean(trace, self.window)
        return -float(np.sqrt(np.mean(fringe_residual(self.model_, self.amplitude_, t, xm, self.carrier_phase) ** 2)))
