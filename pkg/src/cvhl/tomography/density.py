"""Truncated Fock-basis density matrix container and its JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-10
DIAGONAL_FLOOR = -5e-3


@dataclass
class DensityMatrix:
    """``(cutoff + 1) x (cutoff + 1)`` density matrix ``rho[n, m] = <n|rho|m>``."""

    entries: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("density matrix has non-finite entries")
        if np.max(np.abs(entries - entries.conj().T), initial=0) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        self.entries = entries

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    @property
    def negative_diagonal(self) -> bool:
        return bool(np.any(self.diagonal < DIAGONAL_FLOOR))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    def rotated(self, phi):
        """Phase-space rotation ``exp(-i phi n) rho exp(i phi n)``."""
        phase = np.exp(-1j * phi * np.arange(self.cutoff + 1))
        return DensityMatrix(phase[:, None] * self.entries * phase.conj()[None, :], dict(self.diagnostics))

    def to_json_dict(self):
        return {
            "cutoff": self.cutoff,
            "re": np.real(self.entries).tolist(),
            "im": np.imag(self.entries).tolist(),
            "diagnostics": _jsonable(self.diagnostics),
        }

    @classmethod
    def from_json_dict(cls, data):
        try:
            cutoff = int(data["cutoff"])
            entries = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed density-matrix document: {exc}") from exc
        if entries.shape != (cutoff + 1, cutoff + 1):
            raise ValueError(f"density matrix shape {entries.shape} does not match cutoff {cutoff}")
        return cls(entries, dict(data.get("diagnostics", {})))

    def dumps(self):
        return json.dumps(self.to_json_dict(), indent=1)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def as_density_matrix(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix(np.asarray(rho))


def project_psd(rho: DensityMatrix) -> DensityMatrix:
    """Closest unit-trace positive semidefinite matrix (eigenvalue simplex projection)."""
    evals, evecs = np.linalg.eigh(rho.entries)
    # Euclidean projection of the spectrum onto the probability simplex
    u = np.sort(evals)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, len(u) + 1) > (css - 1))[0][-1]
    shift = (css[k] - 1) / (k + 1)
    clipped = np.clip(evals - shift, 0, None)
    entries = (evecs * clipped) @ evecs.conj().T
    diagnostics = dict(rho.diagnostics, psd_projected=True)
    return DensityMatrix(0.5 * (entries + entries.conj().T), diagnostics)
