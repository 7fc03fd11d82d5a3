"""Finite-shot readout with per-qubit assignment errors and its inversion.

Each qubit is read independently.  With ``P`` the true excited population,
the probability of reading ``e`` is ``P*(1 - p(g|e)) + (1 - P)*p(e|g)``.
Correction inverts that 2x2 confusion matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import CalibrationError, ConfigurationError, InputError

DEFAULT_READOUT_ERROR = 0.05
_SINGULAR_DET = 1e-12


@dataclass(frozen=True)
class ReadoutCalibration:
    """Per-qubit p(read e | g) and p(read g | e)."""

    p_e_given_g: tuple
    p_g_given_e: tuple

    def __post_init__(self):
        peg = tuple(float(v) for v in self.p_e_given_g)
        pge = tuple(float(v) for v in self.p_g_given_e)
        if len(peg) != len(pge):
            raise ConfigurationError(f"{len(peg)} p(e|g) values but {len(pge)} p(g|e) values")
        for v in peg + pge:
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"readout error probabilities must lie in [0, 1], got {v}")
        object.__setattr__(self, "p_e_given_g", peg)
        object.__setattr__(self, "p_g_given_e", pge)

    @classmethod
    def uniform(cls, n_qubits: int, error: float = DEFAULT_READOUT_ERROR) -> "ReadoutCalibration":
        return cls((error,) * n_qubits, (error,) * n_qubits)

    @classmethod
    def perfect(cls, n_qubits: int) -> "ReadoutCalibration":
        return cls.uniform(n_qubits, 0.0)

    @property
    def n_qubits(self) -> int:
        return len(self.p_e_given_g)

    def matrix(self, q: int) -> np.ndarray:
        """Confusion matrix of 0-based qubit ``q``: rows read (g, e), columns true (g, e)."""
        peg, pge = self.p_e_given_g[q], self.p_g_given_e[q]
        return np.array([[1 - peg, pge], [peg, 1 - pge]])

    @property
    def determinants(self) -> np.ndarray:
        return 1.0 - np.asarray(self.p_e_given_g) - np.asarray(self.p_g_given_e)

    def first(self, n: int) -> "ReadoutCalibration":
        if n > self.n_qubits:
            raise ConfigurationError(f"calibration covers {self.n_qubits} qubits, chain has {n}")
        return ReadoutCalibration(self.p_e_given_g[:n], self.p_g_given_e[:n])


def load_calibration(path: Optional[str | Path] = None) -> ReadoutCalibration:
    """Read a calibration file; without a path, the bundled synthetic default."""
    if path is None:
        text = resources.files("topomagnon").joinpath("data/calibration.yaml").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read calibration file {path}: {exc}") from None
    raw = yaml.safe_load(text) or {}
    unknown = set(raw) - {"p_e_given_g", "p_g_given_e"}
    if unknown or len(raw) != 2:
        raise ConfigurationError(
            f"calibration file needs exactly p_e_given_g and p_g_given_e (unknown: {sorted(unknown)})")
    return ReadoutCalibration(tuple(raw["p_e_given_g"]), tuple(raw["p_g_given_e"]))


@dataclass(frozen=True)
class ShotRecord:
    counts: np.ndarray  # (n_times, n_qubits) number of e outcomes
    shots: int
    seed: Optional[int]

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots


def _as_probabilities(p):
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if p.ndim != 2:
        raise InputError("probabilities must be (n_qubits,) or (n_times, n_qubits)")
    if not np.all(np.isfinite(p)) or p.min() < -1e-9 or p.max() > 1 + 1e-9:
        raise InputError(f"probabilities must lie in [0, 1] (range {p.min():.3g}..{p.max():.3g})")
    return np.clip(p, 0.0, 1.0)


def read_probabilities(true_probabilities, cal: ReadoutCalibration) -> np.ndarray:
    """Probability of an e outcome per entry, before sampling."""
    p = _as_probabilities(true_probabilities)
    if p.shape[1] != cal.n_qubits:
        raise InputError(f"{p.shape[1]} qubits of data but calibration covers {cal.n_qubits}")
    peg = np.asarray(cal.p_e_given_g)
    pge = np.asarray(cal.p_g_given_e)
    return p * (1 - pge) + (1 - p) * peg


def sample_shots(true_probabilities, shots: int, cal: ReadoutCalibration,
                 seed: Optional[int] = None) -> ShotRecord:
    """Draw ``shots`` single-shot outcomes per qubit and time point.

    Each qubit gets its own stream spawned from ``seed``, so the record does
    not depend on how many qubits are sampled alongside it.
    """
    if int(shots) != shots or shots <= 0:
        raise InputError(f"shots must be a positive integer, got {shots}")
    shots = int(shots)
    p_read = read_probabilities(true_probabilities, cal)
    streams = np.random.SeedSequence(seed).spawn(p_read.shape[1])
    counts = np.empty(p_read.shape, dtype=np.int64)
    for q, ss in enumerate(streams):
        counts[:, q] = np.random.default_rng(ss).binomial(shots, p_read[:, q])
    return ShotRecord(counts, shots, seed)


@dataclass(frozen=True)
class CorrectedReadout:
    probabilities: np.ndarray
    raw: np.ndarray  # empirical e frequencies
    clamped: np.ndarray  # True where the inverted value fell outside [0, 1]
    sigma: np.ndarray  # binomial standard error propagated through the inversion

    @property
    def any_clamped(self) -> bool:
        return bool(self.clamped.any())


def bayes_correct(record: ShotRecord, cal: ReadoutCalibration) -> CorrectedReadout:
    """Invert each qubit's confusion matrix on its empirical frequencies.

    For a 2x2 matrix the inversion reduces to
    ``p = (f - p(e|g)) / (1 - p(e|g) - p(g|e))``.  Results outside [0, 1]
    come from shot noise; they are clamped and flagged.
    """
    if record.counts.shape[1] != cal.n_qubits:
        raise InputError(f"record has {record.counts.shape[1]} qubits, calibration {cal.n_qubits}")
    det = cal.determinants
    bad = np.flatnonzero(np.abs(det) < _SINGULAR_DET)
    if len(bad):
        raise CalibrationError(
            f"confusion matrix of qubit(s) {[int(q) + 1 for q in bad]} is singular "
            "(p(e|g) + p(g|e) = 1); readout carries no information")
    f = record.frequencies
    p = (f - np.asarray(cal.p_e_given_g)) / det
    sigma = np.sqrt(f * (1 - f) / record.shots) / np.abs(det)
    clamped = (p < 0) | (p > 1)
    return CorrectedReadout(np.clip(p, 0.0, 1.0), f, clamped, sigma)
