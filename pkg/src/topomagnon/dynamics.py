"""Single-excitation dynamics: exact unitary evolution, Lindblad decay, chiral displacement.

Hamiltonians are in MHz and times in microseconds, so the Schrodinger equation
reads ``d psi/dt = -2j*pi*H psi``.

The Lindblad density matrix lives on ``{vacuum, site 1, ..., site n}`` (index 0
is the all-ground state).  Relaxation only moves weight from a site to the
vacuum and dephasing is diagonal, so this (n+1)-dimensional block is closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InputError, NoiseModelError

TWO_PI = 2 * np.pi
DEFAULT_SAMPLE_DT = 1e-3  # 1 ns sampling, as in the experiment
MAX_LINDBLAD_STEP = 1e-3
# phase advanced per RK4 step by the fastest mode; keeps global error near 1e-9 over 1 us
_RK4_PHASE_PER_STEP = 0.006


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit T1 and Ramsey T2* in microseconds (``inf`` disables a channel)."""

    t1: tuple
    t2_star: tuple

    def __post_init__(self):
        t1 = tuple(float(v) for v in self.t1)
        t2 = tuple(float(v) for v in self.t2_star)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2_star", t2)
        if len(t1) != len(t2):
            raise NoiseModelError(f"{len(t1)} T1 values but {len(t2)} T2* values")
        for j, (a, b) in enumerate(zip(t1, t2), start=1):
            if not (a > 0 and b > 0):
                raise NoiseModelError(f"qubit {j}: T1 and T2* must be positive (got {a}, {b})")
            if b > 2 * a:
                raise NoiseModelError(
                    f"qubit {j}: T2*={b} us exceeds 2*T1={2 * a} us (negative pure dephasing)")

    @classmethod
    def ideal(cls, n_qubits: int) -> "NoiseModel":
        return cls((np.inf,) * n_qubits, (np.inf,) * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.t1)

    @property
    def relaxation_rates(self) -> np.ndarray:
        return 1.0 / np.asarray(self.t1)

    @property
    def dephasing_rates(self) -> np.ndarray:
        """gamma_phi = 1/T2* - 1/(2 T1), per microsecond."""
        rates = 1.0 / np.asarray(self.t2_star) - 0.5 / np.asarray(self.t1)
        return np.clip(rates, 0.0, None)

    def first(self, n: int) -> "NoiseModel":
        if n > self.n_qubits:
            raise NoiseModelError(f"noise model covers {self.n_qubits} qubits, chain has {n}")
        return NoiseModel(self.t1[:n], self.t2_star[:n])


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray  # (n_times, n_sites)
    vacuum: np.ndarray
    cd: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.populations.shape[1]

    def site(self, j: int) -> np.ndarray:
        """Population of 1-based site ``j``."""
        return self.populations[:, j - 1]


def site_state(n_qubits: int, site: int) -> np.ndarray:
    """Single excitation on 1-based ``site``."""
    if not 1 <= site <= n_qubits:
        raise InputError(f"site {site} outside 1..{n_qubits}")
    psi = np.zeros(n_qubits, dtype=complex)
    psi[site - 1] = 1.0
    return psi


def site_density(n_qubits: int, site: int) -> np.ndarray:
    rho = np.zeros((n_qubits + 1, n_qubits + 1), dtype=complex)
    rho[site, site] = 1.0
    return rho


def time_grid(t_max: float, dt: float = DEFAULT_SAMPLE_DT) -> np.ndarray:
    if not (t_max > 0 and dt > 0):
        raise InputError(f"need t_max > 0 and dt > 0 (got {t_max}, {dt})")
    n = int(round(t_max / dt))
    return np.linspace(0.0, n * dt, n + 1)


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or times[0] != 0 or np.any(np.diff(times) <= 0):
        raise InputError("time grid must be 1-D, strictly increasing and start at 0")
    return times


def chiral_displacement(populations: np.ndarray) -> np.ndarray:
    """sum_x x * (P(a_x) - P(b_x)) for each row of site populations."""
    populations = np.atleast_2d(populations)
    n = populations.shape[1]
    weights = (np.arange(n) // 2 + 1) * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return populations @ weights


def time_averaged_cd(traj: Trajectory) -> float:
    if len(traj.times) < 2:
        raise InputError("need at least two time points to average")
    span = traj.times[-1] - traj.times[0]
    return float(np.trapezoid(traj.cd, traj.times) / span)


def winding_estimate(traj: Trajectory) -> float:
    return 2.0 * time_averaged_cd(traj)


def _trajectory(times, pops, vacuum):
    return Trajectory(times, pops, vacuum, chiral_displacement(pops))


def propagate(h: np.ndarray, psi0: np.ndarray, times) -> np.ndarray:
    """Amplitudes psi(t) for every t, shape (n_times, n)."""
    energies, vecs = np.linalg.eigh(h)
    coeffs = vecs.conj().T @ psi0
    phases = np.exp(-1j * TWO_PI * np.outer(times, energies))
    return (phases * coeffs) @ vecs.T


def evolve_unitary(h: np.ndarray, psi0, times) -> Trajectory:
    """Exact evolution psi(t) = exp(-2j*pi*H t) psi0 via eigendecomposition."""
    h = np.asarray(h)
    psi0 = np.asarray(psi0, dtype=complex)
    times = _check_times(times)
    if psi0.shape != (h.shape[0],):
        raise InputError(f"state of length {psi0.shape} does not match H of size {h.shape[0]}")
    if not np.isclose(np.linalg.norm(psi0), 1.0, atol=1e-10):
        raise InputError(f"initial state has norm {np.linalg.norm(psi0):.6g}, expected 1")
    pops = np.abs(propagate(h, psi0, times)) ** 2
    return _trajectory(times, pops, np.zeros(len(times)))


def rk4_schrodinger(h_static: np.ndarray, detuning: Optional[Callable[[np.ndarray], np.ndarray]],
                    psi0, times, dt: float) -> np.ndarray:
    """Fixed-step RK4 for H(t) = h_static + diag(detuning(t)), all in MHz.

    ``detuning`` maps an array of times to an array of shape (len(t), n) and is
    evaluated in one vectorized call per sampling interval.  Steps are shrunk
    so an integer number fits each interval of ``times``.  Returns amplitudes
    with shape (n_times, n).
    """
    times = _check_times(times)
    y = np.asarray(psi0, dtype=complex).copy()
    a = -1j * TWO_PI * np.asarray(h_static, dtype=complex)
    out = np.empty((len(times), len(y)), dtype=complex)
    out[0] = y
    for i in range(1, len(times)):
        t0, t1 = times[i - 1], times[i]
        m = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
        h = (t1 - t0) / m
        if detuning is None:
            for _ in range(m):
                k1 = a @ y
                k2 = a @ (y + 0.5 * h * k1)
                k3 = a @ (y + 0.5 * h * k2)
                k4 = a @ (y + h * k3)
                y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        else:
            nodes = t0 + h * np.arange(2 * m + 1) / 2
            diag = -1j * TWO_PI * np.asarray(detuning(nodes))
            if len(y) == 2:
                y = _rk4_two_level(a, diag, y, h, m)
                out[i] = y
                continue
            for s in range(m):
                d0, dm, d1 = diag[2 * s], diag[2 * s + 1], diag[2 * s + 2]
                k1 = a @ y + d0 * y
                y2 = y + 0.5 * h * k1
                k2 = a @ y2 + dm * y2
                y3 = y + 0.5 * h * k2
                k3 = a @ y3 + dm * y3
                y4 = y + h * k3
                k4 = a @ y4 + d1 * y4
                y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = y
    return out


def _rk4_two_level(a, diag, y, h, m):
    # scalar arithmetic: numpy call overhead dominates for 2x2 systems
    a00, a01, a10, a11 = (complex(v) for v in a.ravel())
    d = diag.tolist()
    u, v = complex(y[0]), complex(y[1])
    h2, h6 = 0.5 * h, h / 6
    for s in range(m):
        (p0, q0), (pm, qm), (p1, q1) = d[2 * s], d[2 * s + 1], d[2 * s + 2]
        k1u = (a00 + p0) * u + a01 * v
        k1v = a10 * u + (a11 + q0) * v
        u2, v2 = u + h2 * k1u, v + h2 * k1v
        k2u = (a00 + pm) * u2 + a01 * v2
        k2v = a10 * u2 + (a11 + qm) * v2
        u3, v3 = u + h2 * k2u, v + h2 * k2v
        k3u = (a00 + pm) * u3 + a01 * v3
        k3v = a10 * u3 + (a11 + qm) * v3
        u4, v4 = u + h * k3u, v + h * k3v
        k4u = (a00 + p1) * u4 + a01 * v4
        k4v = a10 * u4 + (a11 + q1) * v4
        u = u + h6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return np.array([u, v])


def evolve_rk4(h: np.ndarray, psi0, times, dt: float = 1e-4) -> Trajectory:
    amps = rk4_schrodinger(h, None, psi0, times, dt)
    return _trajectory(_check_times(times), np.abs(amps) ** 2, np.zeros(len(times)))


def _check_density(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InputError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise InputError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > 1e-8:
        raise InputError(f"density matrix has trace {np.trace(rho).real:.6g}")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise InputError("density matrix is not positive semidefinite")
    return rho


def lindblad_rhs_factory(h: np.ndarray, noise: NoiseModel):
    """Right-hand side of the master equation on the vacuum + single-excitation block.

    drho/dt = -2j*pi [H, rho] + sum_j g1_j D[|0><j|] rho + sum_j 2 gphi_j D[|j><j|] rho
    """
    n = h.shape[0]
    h_full = np.zeros((n + 1, n + 1), dtype=complex)
    h_full[1:, 1:] = h
    g1 = np.concatenate([[0.0], noise.relaxation_rates])
    gphi = np.concatenate([[0.0], noise.dephasing_rates])
    decay = 0.5 * (g1[:, None] + g1[None, :]) + (gphi[:, None] + gphi[None, :])
    np.fill_diagonal(decay, g1)
    a = -1j * TWO_PI * h_full
    feed = g1[1:]

    def rhs(rho):
        d = a @ rho
        d = d + d.conj().T - decay * rho
        d[0, 0] += feed @ np.diagonal(rho)[1:].real
        return d

    return rhs


def _lindblad_samples(h, noise, rho0, times, dt):
    """Yield the density matrix at each sample time (fixed-step RK4 in between)."""
    h = np.asarray(h)
    n = h.shape[0]
    times = _check_times(times)
    if noise.n_qubits != n:
        raise NoiseModelError(f"noise model covers {noise.n_qubits} qubits, H has {n}")
    rho = _check_density(rho0).copy()
    if rho.shape[0] != n + 1:
        raise InputError(f"density matrix must be {n + 1}x{n + 1} (vacuum + {n} sites)")
    rhs = lindblad_rhs_factory(h, noise)
    fastest = TWO_PI * np.abs(np.linalg.eigvalsh(h)).max() + noise.relaxation_rates.max() \
        + 2 * noise.dephasing_rates.max()
    step = min(dt, _RK4_PHASE_PER_STEP / fastest) if fastest > 0 else dt
    yield rho
    for i in range(1, len(times)):
        span = times[i] - times[i - 1]
        m = max(1, int(np.ceil(span / step - 1e-9)))
        hh = span / m
        for _ in range(m):
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * hh * k1)
            k3 = rhs(rho + 0.5 * hh * k2)
            k4 = rhs(rho + hh * k3)
            rho = rho + (hh / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        yield rho


def evolve_lindblad(h: np.ndarray, noise: NoiseModel, rho0, times,
                    dt: float = MAX_LINDBLAD_STEP) -> Trajectory:
    """Fixed-step RK4 integration of the master equation.

    The step is the smaller of ``dt`` and the step that keeps the fastest
    coherent phase below 0.006 rad, then shrunk to divide each sampling
    interval.  Returns site populations and the vacuum population.
    """
    times = _check_times(times)
    diag = np.array([np.diagonal(r).real for r in _lindblad_samples(h, noise, rho0, times, dt)])
    return Trajectory(times, diag[:, 1:], diag[:, 0], chiral_displacement(diag[:, 1:]))


def evolve_lindblad_states(h, noise, rho0, times, dt: float = MAX_LINDBLAD_STEP) -> list:
    """Like :func:`evolve_lindblad` but returns the full density matrix at every sample."""
    return [r.copy() for r in _lindblad_samples(h, noise, rho0, times, dt)]
