"""Parametric frequency modulation and the couplings it engineers.

A qubit driven as ``omega(t) = omega_o + eps * sin(2*pi*mu*t + phi)`` acquires
sidebands weighted by Bessel functions of ``alpha = eps/mu``.  When the first
sideband bridges the static detuning of a bond, the bond's effective coupling
is ``g * J1(alpha_mod) * J0(alpha_spec)``.  Frequencies of drives (eps, mu)
and couplings are in MHz; mean operating frequencies are in GHz.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml
from scipy import optimize, special

from . import dynamics
from .errors import (ConfigurationError, DetunedDriveError, DomainError,
                     InconclusiveWindowError, UnreachableCouplingError)
from .lattice import BondPattern

BESSEL_WINDOW = 20.0
J1_PEAK_ARG = 1.8411837813406593
J1_PEAK = 0.5818652242815963
J0_FIRST_ZERO = 2.404825557695773
J1_FIRST_ZERO = 3.8317059702075125
RESONANCE_TOLERANCE = 0.5  # MHz
SAMPLES_PER_PERIOD = 32


def bessel_j(m: int, x):
    """Bessel function of the first kind, orders 0 and 1, for |x| <= 20."""
    if m not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are supported, got {m}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > BESSEL_WINDOW) or not np.all(np.isfinite(xa)):
        raise DomainError(f"argument outside |x| <= {BESSEL_WINDOW}: {x}")
    out = special.j0(xa) if m == 0 else special.j1(xa)
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class Tone:
    eps: float  # MHz
    mu: float  # MHz
    phi: float = 0.0

    def __post_init__(self):
        if self.eps < 0 or self.mu < 0:
            raise ConfigurationError(f"modulation amplitude and frequency must be >= 0 (got {self})")
        if self.eps > 0 and self.mu == 0:
            raise ConfigurationError("a modulation with eps > 0 needs mu > 0")

    @property
    def alpha(self) -> float:
        return self.eps / self.mu if self.mu > 0 else 0.0


@dataclass(frozen=True)
class DriveSpec:
    """Mean operating frequency (GHz) plus zero or more sinusoidal tones."""

    omega_o: float
    tones: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))

    @classmethod
    def modulated(cls, omega_o: float, eps: float, mu: float, phi: float = 0.0) -> "DriveSpec":
        return cls(omega_o, (Tone(eps, mu, phi),))

    @classmethod
    def static(cls, omega_o: float) -> "DriveSpec":
        return cls(omega_o, ())

    def _first(self, attr):
        return getattr(self.tones[0], attr) if self.tones else 0.0

    eps = property(lambda self: self._first("eps"))
    mu = property(lambda self: self._first("mu"))
    phi = property(lambda self: self._first("phi"))
    alpha = property(lambda self: self._first("alpha"))

    def offset_mhz(self, t, reference_ghz: float) -> np.ndarray:
        """omega(t) - reference, in MHz."""
        t = np.asarray(t, dtype=float)
        w = np.full_like(t, (self.omega_o - reference_ghz) * 1e3)
        for tone in self.tones:
            w = w + tone.eps * np.sin(2 * np.pi * tone.mu * t + tone.phi)
        return w


@dataclass(frozen=True)
class EffectiveCoupling:
    magnitude: float
    phase: float
    bond_kind: str
    resonance: str
    bond: Optional[int] = None
    sign_inverted: bool = False

    @property
    def value(self) -> complex:
        return self.magnitude * np.exp(1j * self.phase)


def _resonant_tone(modulated: DriveSpec, detuning_mhz: float, tol: float):
    best = None
    for i, tone in enumerate(modulated.tones):
        miss = abs(tone.mu - abs(detuning_mhz))
        if miss <= tol and (best is None or miss < best[1]):
            best = (i, miss)
    return None if best is None else best[0]


def effective_coupling(g: float, modulated: DriveSpec, spectator: DriveSpec, bond_kind: str,
                       tol: float = RESONANCE_TOLERANCE, bond: Optional[int] = None) -> EffectiveCoupling:
    """First-sideband coupling across one bond.

    ``bond_kind`` is ``"intracell"`` (a_x-b_x, phase phi + pi/2) or
    ``"intercell"`` (b_{x-1}-a_x, phase -(phi - pi/2)).  Tones that are not
    resonant with the bond, on either qubit, enter through J0 factors.  A pair
    already degenerate within ``tol`` couples statically.
    """
    if bond_kind not in ("intracell", "intercell"):
        raise ConfigurationError(f"bond_kind must be 'intracell' or 'intercell', got {bond_kind!r}")
    detuning = (modulated.omega_o - spectator.omega_o) * 1e3
    idx = _resonant_tone(modulated, detuning, tol)
    spectator_factor = np.prod([bessel_j(0, t.alpha) for t in spectator.tones]) if spectator.tones else 1.0
    if idx is None:
        if abs(detuning) <= tol:
            others = np.prod([bessel_j(0, t.alpha) for t in modulated.tones]) if modulated.tones else 1.0
            amp = g * others * spectator_factor
            return EffectiveCoupling(abs(amp), 0.0 if amp >= 0 else np.pi, bond_kind, "static", bond)
        nearest = min((abs(t.mu - abs(detuning)) for t in modulated.tones), default=abs(detuning))
        raise DetunedDriveError(
            f"no tone bridges the {detuning:.3f} MHz detuning (closest miss {nearest:.3f} MHz, "
            f"tolerance {tol} MHz)", nearest)
    res = modulated.tones[idx]
    others = [bessel_j(0, t.alpha) for i, t in enumerate(modulated.tones) if i != idx]
    amp = g * bessel_j(1, res.alpha) * float(np.prod(others)) * spectator_factor
    phase = res.phi + np.pi / 2 if bond_kind == "intracell" else -(res.phi - np.pi / 2)
    inverted = res.alpha > J1_FIRST_ZERO or any(t.alpha > J0_FIRST_ZERO for t in spectator.tones) \
        or any(t.alpha > J0_FIRST_ZERO for i, t in enumerate(modulated.tones) if i != idx)
    if inverted:
        warnings.warn("modulation index beyond the first Bessel zero: coupling sign is inverted",
                      RuntimeWarning, stacklevel=2)
    if amp < 0:
        amp, phase = -amp, phase + np.pi
    phase = float(np.angle(np.exp(1j * phase)))
    return EffectiveCoupling(float(amp), phase, bond_kind, f"tone {idx} (mu={res.mu} MHz)", bond, inverted)


def solve_amplitude_for_coupling(g: float, mu: float, spectator_alpha: float, j_target: float) -> float:
    """Modulation amplitude eps (MHz) giving |J| = j_target on the rising branch of J1."""
    if j_target < 0 or g <= 0 or mu <= 0:
        raise ConfigurationError("need g > 0, mu > 0 and j_target >= 0")
    if j_target == 0:
        return 0.0
    scale = g * bessel_j(0, spectator_alpha)
    j_max = abs(scale) * J1_PEAK
    if j_target > j_max:
        raise UnreachableCouplingError(
            f"|J| = {j_target} MHz is out of reach; the maximum is {j_max:.6g} MHz", j_max)
    if j_target == j_max:
        return J1_PEAK_ARG * mu
    alpha = optimize.bisect(lambda a: abs(scale) * bessel_j(1, a) - j_target, 0.0, J1_PEAK_ARG,
                            xtol=1e-14, rtol=1e-12, maxiter=200)
    return alpha * mu


def bond_kind_of(bond: int) -> str:
    """Bond ``j`` (1-based) joins sites j, j+1: odd bonds are intracell."""
    return "intracell" if bond % 2 == 1 else "intercell"


def couplings_from_drives(g: Sequence[float], drives: Sequence[DriveSpec],
                          tol: float = RESONANCE_TOLERANCE) -> list[EffectiveCoupling]:
    """Effective coupling of every bond; the resonant qubit may sit on either side."""
    if len(g) != len(drives) - 1:
        raise ConfigurationError(f"{len(g)} static couplings for {len(drives)} qubits")
    out = []
    for j in range(1, len(drives)):
        left, right = drives[j - 1], drives[j]
        kind = bond_kind_of(j)
        try:
            out.append(effective_coupling(g[j - 1], right, left, kind, tol, bond=j))
        except DetunedDriveError:
            out.append(effective_coupling(g[j - 1], left, right, kind, tol, bond=j))
    return out


def bonds_from_drives(g, drives, tol: float = RESONANCE_TOLERANCE) -> BondPattern:
    cs = couplings_from_drives(g, drives, tol)
    return BondPattern(tuple(c.magnitude for c in cs), tuple(c.phase for c in cs))


@dataclass(frozen=True)
class RwaCheck:
    extracted: float
    predicted: float
    transfer_time: float

    @property
    def relative_error(self) -> float:
        return abs(self.extracted - self.predicted) / self.predicted


def _predicted_pair(g, first: DriveSpec, second: DriveSpec, tol):
    try:
        c = effective_coupling(g, second, first, "intracell", tol)
        mod = second
    except DetunedDriveError:
        c = effective_coupling(g, first, second, "intracell", tol)
        mod = first
    return c.magnitude, mod


def validate_rwa(g: float, drives: tuple, t_window: Optional[float] = None,
                 dt: Optional[float] = None, tol: float = RESONANCE_TOLERANCE,
                 phase_per_step: float = 0.02) -> RwaCheck:
    """Integrate the full two-qubit H(t) and read |J| off the first transfer.

    The excitation starts on ``drives[0]``.  The population of that qubit is
    boxcar-averaged over one period of the slowest tone, which cancels the
    micromotion at every harmonic of the drive, and the first minimum is
    located by a least-squares parabola.  With ``P(t) = cos^2(2*pi*J*t)`` the
    first complete transfer happens at ``t* = 1/(4J)``.
    """
    first, second = drives
    predicted, modulated = _predicted_pair(g, first, second, tol)
    if predicted <= 0:
        raise InconclusiveWindowError("predicted coupling is zero; no transfer to time")
    if t_window is None:
        t_window = 2.0 / (4 * predicted)
    fastest = 2 * np.pi * (abs(first.omega_o - second.omega_o) * 1e3
                           + sum(t.eps for t in first.tones + second.tones) + g)
    step = phase_per_step / fastest if dt is None else dt

    mus = [t.mu for t in first.tones + second.tones if t.mu > 0]
    if mus:
        # a discrete boxcar of N samples cancels all harmonics below N
        period = 1.0 / min(mus)
        per_period = SAMPLES_PER_PERIOD
        sample = period / per_period
    else:
        per_period, sample = 1, step
    n = int(np.ceil(t_window / sample))
    times = sample * np.arange(n + 1)

    ref = first.omega_o

    def detuning(t):
        return np.stack([first.offset_mhz(t, ref), second.offset_mhz(t, ref)], axis=-1)

    h_static = np.array([[0.0, g], [g, 0.0]])
    amps = dynamics.rk4_schrodinger(h_static, detuning, np.array([1.0, 0.0]), times, step)
    pop = np.abs(amps[:, 0]) ** 2

    if per_period > 1:
        c = np.concatenate([[0.0], np.cumsum(pop)])
        pop = (c[per_period:] - c[:-per_period]) / per_period
        times = times[: len(pop)] + 0.5 * (per_period - 1) * sample

    t_star = _first_minimum(times, pop, 1.0 / (4 * predicted))
    return RwaCheck(1.0 / (4 * t_star), predicted, t_star)


def _first_minimum(times, pop, t_guess):
    below = np.flatnonzero(pop < 0.5)
    if len(below) == 0:
        raise InconclusiveWindowError("population never dropped below 1/2 within the window")
    start = below[0]
    rise = np.flatnonzero(pop[start:] >= 0.5)
    if len(rise) == 0:
        raise InconclusiveWindowError("no complete transfer inside the window; extend t_window")
    stop = start + rise[0]
    i = start + int(np.argmin(pop[start:stop]))
    half = 0.1 * t_guess
    sel = np.abs(times - times[i]) <= half
    if sel.sum() < 5:
        return float(times[i])
    x = times[sel] - times[i]
    a, b, _ = np.polyfit(x, pop[sel], 2)
    if a <= 0:
        return float(times[i])
    return float(times[i] - b / (2 * a))


@dataclass(frozen=True)
class HardwarePreset:
    qubits: tuple
    device: dict = field(repr=False)
    modulation: dict = field(repr=False)

    @property
    def couplings(self) -> tuple:
        return tuple(self.device["coupling_mhz"])

    @property
    def sweet_spot_frequencies(self) -> tuple:
        return tuple(self.device["sweet_spot_frequency_ghz"])

    @property
    def operating_frequencies(self) -> tuple:
        return tuple(self.modulation["operating_frequency_ghz"])

    def noise_model(self, n_qubits: Optional[int] = None) -> "dynamics.NoiseModel":
        nm = dynamics.NoiseModel(tuple(self.device["t1_us"]), tuple(self.device["t2_star_us"]))
        return nm if n_qubits is None else nm.first(n_qubits)

    def drives(self, experiment: str, frequencies: str = "center") -> list[DriveSpec]:
        """Per-qubit drives for one experiment (``frequencies``: 'center' or 'operating')."""
        try:
            exp = self.modulation["experiments"][experiment]
        except KeyError:
            raise ConfigurationError(
                f"unknown experiment {experiment!r}; choose from "
                f"{sorted(self.modulation['experiments'])}") from None
        key = f"{frequencies}_frequency_ghz"
        freqs = exp.get(key, self.modulation[key])
        out = []
        for name, f in zip(self.qubits, freqs):
            spec = exp.get(name)
            tones = () if spec is None else tuple(
                Tone(e, m) for e, m in zip(spec["eps_mhz"], spec["mu_mhz"]))
            out.append(DriveSpec(f, tones))
        return out


def load_hardware_preset(path: Optional[str | Path] = None) -> HardwarePreset:
    if path is None:
        text = resources.files("topomagnon").joinpath("data/hardware.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text)
    missing = {"qubits", "device", "modulation"} - set(raw)
    if missing:
        raise ConfigurationError(f"hardware file lacks sections: {sorted(missing)}")
    return HardwarePreset(tuple(raw["qubits"]), raw["device"], raw["modulation"])
