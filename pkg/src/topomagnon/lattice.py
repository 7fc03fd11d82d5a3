"""Single-excitation Hamiltonians of dimerized qubit chains.

Sites are 1-based in the public API: site ``j`` is an a-site when ``j`` is odd
and belongs to unit cell ``(j + 1) // 2``.  Internally arrays are 0-based, so
site ``j`` lives at index ``j - 1``.  All couplings are linear frequencies in
MHz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import ConfigurationError, GapClosureError, RegimeError

# Any value in (gap(86), gap(84)] = (8.44e-30, 4.22e-29] MHz reproduces a
# critical length of 86 qubits at J1 = 1 MHz, J2 = 5 MHz.
CRITICAL_GAP_THRESHOLD = 1e-29

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class ChainSpec:
    n_qubits: int

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 2:
            raise ConfigurationError(f"n_qubits must be an integer >= 2, got {self.n_qubits!r}")

    @property
    def n_cells(self) -> int:
        return (self.n_qubits + 1) // 2

    @staticmethod
    def is_a_site(site: int) -> bool:
        return site % 2 == 1

    @staticmethod
    def cell_of(site: int) -> int:
        return (site + 1) // 2

    def labels(self) -> list[str]:
        return [f"{'a' if self.is_a_site(j) else 'b'}{self.cell_of(j)}" for j in range(1, self.n_qubits + 1)]

    def sublattice_signs(self) -> np.ndarray:
        """+1 on a-sites, -1 on b-sites (the chiral operator's diagonal)."""
        signs = np.ones(self.n_qubits)
        signs[1::2] = -1.0
        return signs

    def cell_indices(self) -> np.ndarray:
        return np.arange(self.n_qubits) // 2 + 1


@dataclass(frozen=True)
class BondPattern:
    """Nearest-neighbour couplings in MHz, bond ``j`` joining sites ``j`` and ``j+1``."""

    bonds: tuple
    phases: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "bonds", tuple(float(b) for b in self.bonds))
        if self.phases is not None:
            object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
            if len(self.phases) != len(self.bonds):
                raise ConfigurationError(
                    f"{len(self.phases)} phases given for {len(self.bonds)} bonds")
        if len(self.bonds) < 1:
            raise ConfigurationError("a bond pattern needs at least one bond")
        if not all(np.isfinite(self.bonds)):
            raise ConfigurationError("bond values must be finite")

    @classmethod
    def dimerized(cls, j1: float, j2: float, n_qubits: int) -> "BondPattern":
        return cls(tuple(j1 if i % 2 == 0 else j2 for i in range(n_qubits - 1)))

    @property
    def n_qubits(self) -> int:
        return len(self.bonds) + 1

    def complex_bonds(self) -> np.ndarray:
        b = np.asarray(self.bonds, dtype=float)
        if self.phases is None:
            return b
        return b * np.exp(1j * np.asarray(self.phases))

    def dimer_pair(self) -> Optional[tuple[float, float]]:
        """(J1, J2) if the magnitudes strictly alternate between two values, else None."""
        mags = np.abs(self.bonds)
        j1 = mags[0]
        j2 = mags[1] if len(mags) > 1 else None
        if j2 is None:
            return None
        if np.allclose(mags[0::2], j1, rtol=0, atol=1e-12) and np.allclose(mags[1::2], j2, rtol=0, atol=1e-12):
            return float(j1), float(j2)
        return None


@dataclass(frozen=True)
class StateProfile:
    amplitudes: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def n_sites(self) -> int:
        return len(self.amplitudes)

    def overlap(self, other: "StateProfile") -> float:
        """|<self|other>|^2."""
        if other.n_sites != self.n_sites:
            raise ConfigurationError(f"profiles live on {self.n_sites} and {other.n_sites} sites")
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def _normalized(vec) -> StateProfile:
    vec = np.asarray(vec, dtype=complex if np.iscomplexobj(vec) else float)
    return StateProfile(vec / np.linalg.norm(vec))


def build_hamiltonian(chain: ChainSpec, bonds: BondPattern) -> np.ndarray:
    """Tridiagonal Hermitian matrix with the bonds on the upper off-diagonal."""
    if bonds.n_qubits != chain.n_qubits:
        raise ConfigurationError(
            f"{len(bonds.bonds)} bonds do not fit a chain of {chain.n_qubits} qubits "
            f"(expected {chain.n_qubits - 1})")
    b = bonds.complex_bonds()
    h = np.zeros((chain.n_qubits, chain.n_qubits), dtype=b.dtype)
    idx = np.arange(chain.n_qubits - 1)
    h[idx, idx + 1] = b
    h[idx + 1, idx] = np.conj(b)
    return h


def hamiltonian_from_bonds(bonds: Sequence[float] | BondPattern) -> np.ndarray:
    if not isinstance(bonds, BondPattern):
        bonds = BondPattern(tuple(bonds))
    return build_hamiltonian(ChainSpec(bonds.n_qubits), bonds)


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    vectors: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.energies)

    def __iter__(self):
        for i in range(len(self)):
            yield float(self.energies[i]), self.profile(i)

    def profile(self, i: int) -> StateProfile:
        return StateProfile(self.vectors[:, i])

    def in_gap(self, window: float) -> np.ndarray:
        return np.flatnonzero(np.abs(self.energies) < window)


def spectrum(h: np.ndarray) -> Spectrum:
    energies, vectors = np.linalg.eigh(h)
    return Spectrum(energies, vectors)


def in_gap_window(j1: float, j2: float) -> float:
    """Half the bulk gap, |J2 - J1| / 2."""
    if np.isclose(j1, j2, rtol=0, atol=1e-15):
        raise GapClosureError(f"bulk gap is closed at J1 = J2 = {j1}")
    return abs(j2 - j1) / 2


def zero_mode(h: np.ndarray) -> tuple[float, StateProfile]:
    """Eigenpair closest to zero energy; ties go to the larger terminal-site weight."""
    spec = spectrum(h)
    order = np.argsort(np.abs(spec.energies), kind="stable")
    best = order[0]
    if len(order) > 1:
        e0 = abs(spec.energies[order[0]])
        e1 = abs(spec.energies[order[1]])
        if np.isclose(e0, e1, rtol=1e-9, atol=1e-12):
            def terminal(i):
                d = spec.profile(i).density
                return d[0] + d[-1]
            best = max(order[:2], key=terminal)
    return float(spec.energies[best]), spec.profile(best)


def _check_topological(j1, j2):
    if j1 < 0 or j2 <= 0:
        raise ConfigurationError(f"couplings must satisfy J1 >= 0, J2 > 0 (got {j1}, {j2})")
    if j1 >= j2:
        raise RegimeError(f"edge/defect states need J1 < J2, got J1={j1}, J2={j2}")


def _site_count(n_cells, n_qubits, allow_odd=True):
    if n_cells < 1:
        raise ConfigurationError("n_cells must be >= 1")
    full = 2 * n_cells
    if n_qubits is None:
        return full
    if n_qubits == full or (allow_odd and n_qubits == full - 1):
        return n_qubits
    raise ConfigurationError(f"{n_cells} cells cannot be laid out on {n_qubits} qubits")


def analytic_edge_state(j1: float, j2: float, n_cells: int, side: str = "left",
                        n_qubits: Optional[int] = None) -> StateProfile:
    """Zero-energy edge profile, geometric on one sublattice.

    The left state carries ``(-J1/J2)**(x-1)`` on ``a_x``; the right state
    ``(-J1/J2)**(N-x)`` on ``b_x``.  ``n_qubits = 2*n_cells - 1`` drops the
    final b-site (odd chain), which only the right state needs.
    """
    _check_topological(j1, j2)
    ratio = -j1 / j2
    x = np.arange(1, n_cells + 1)
    if side == "left":
        n = _site_count(n_cells, n_qubits)
        amps = np.zeros(2 * n_cells)
        amps[0::2] = ratio ** (x - 1)
        return _normalized(amps[:n])
    if side == "right":
        n = _site_count(n_cells, n_qubits, allow_odd=False)
        amps = np.zeros(n)
        amps[1::2] = ratio ** (n_cells - x)
        return _normalized(amps)
    raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")


def analytic_defect_state(j1: float, j2: float, n_cells: int, x_e: int,
                          n_qubits: Optional[int] = None) -> StateProfile:
    """Zero mode pinned on ``a_{x_e}`` at a trivial/nontrivial interface."""
    if not 1 <= x_e <= n_cells:
        raise ConfigurationError(f"interface cell x_e={x_e} outside 1..{n_cells}")
    _check_topological(j1, j2)
    n = _site_count(n_cells, n_qubits)
    x = np.arange(1, n_cells + 1)
    amps = np.zeros(2 * n_cells)
    amps[0::2] = (-j1 / j2) ** np.abs(x - x_e)
    return _normalized(amps[:n])


def dimerized_gap(j1: float, j2: float, n_qubits: int) -> float:
    """Splitting of the two mid-spectrum eigenvalues of an even dimerized chain.

    Uses Sturm-sequence bisection with an absolute tolerance at the underflow
    threshold.  With a zero diagonal this resolves eigenvalues to high relative
    accuracy, so gaps far below machine epsilon (~1e-30 MHz) stay meaningful.
    """
    if n_qubits < 2 or n_qubits % 2:
        raise ConfigurationError(f"need an even chain, got n_qubits={n_qubits}")
    lo, hi = _mid_pair(BondPattern.dimerized(j1, j2, n_qubits).bonds)
    return hi - lo


def mid_gap(bonds: Sequence[float] | BondPattern) -> float:
    """Splitting of the two mid-spectrum eigenvalues of any even chain, to high relative accuracy."""
    if isinstance(bonds, BondPattern):
        bonds = bonds.bonds
    if (len(bonds) + 1) % 2:
        raise ConfigurationError(f"need an even chain, got {len(bonds) + 1} qubits")
    lo, hi = _mid_pair(bonds)
    return hi - lo


def _mid_pair(bonds) -> tuple[float, float]:
    e = np.abs(np.asarray(bonds, dtype=float))
    n = len(e) + 1
    m = n // 2
    w = eigvalsh_tridiagonal(np.zeros(n), e, select="i", select_range=(m - 1, m),
                             tol=2 * _TINY, lapack_driver="stebz")
    return float(w[0]), float(w[1])


def _chiral_pair_modes(bonds) -> tuple[np.ndarray, np.ndarray]:
    """In-gap eigenvectors of an even chain from the sublattice coupling block.

    ``H = [[0, B], [B^T, 0]]`` in (a, b) ordering; the pair at ``+-s_min``
    is ``(u, +-v)/sqrt(2)`` with ``B v = s_min u``.  The singular vectors are
    well conditioned even when ``s_min`` itself is below machine precision.
    """
    e = np.abs(np.asarray(bonds, dtype=float))
    n = len(e) + 1
    cells = n // 2
    block = np.zeros((cells, cells))
    block[np.arange(cells), np.arange(cells)] = e[0::2]
    block[np.arange(1, cells), np.arange(cells - 1)] = e[1::2]
    u_mat, _, vh = np.linalg.svd(block)
    u, v = u_mat[:, -1], vh[-1]
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[0::2], lower[1::2] = u, -v
    upper[0::2], upper[1::2] = u, v
    return lower / np.sqrt(2), upper / np.sqrt(2)


@dataclass(frozen=True)
class HybridizationReport:
    t_e: float
    numeric_gap: float
    energies: tuple
    modes: tuple
    hybridized: bool


def _ends_balanced(profile: StateProfile, ratio: float = 0.5) -> bool:
    d = profile.density
    lo, hi = sorted((d[0], d[-1]))
    return hi > 0 and lo / hi >= ratio


def hybridization(j1: float, j2: float, n_cells: int) -> HybridizationReport:
    _check_topological(j1, j2)
    n = 2 * n_cells
    bonds = BondPattern.dimerized(j1, j2, n)
    h = build_hamiltonian(ChainSpec(n), bonds)
    left = analytic_edge_state(j1, j2, n_cells, "left")
    right = analytic_edge_state(j1, j2, n_cells, "right")
    t_e = float(left.amplitudes @ h @ right.amplitudes)
    e_lo, e_hi = _mid_pair(bonds.bonds)
    gap = e_hi - e_lo
    lower, upper = _chiral_pair_modes(bonds.bonds)
    modes = (StateProfile(lower), StateProfile(upper))
    hybridized = gap > 0 and all(_ends_balanced(m) for m in modes)
    return HybridizationReport(t_e, gap, (e_lo, e_hi), modes, hybridized)


def critical_chain_length(j1: float, j2: float, gap_threshold: float = CRITICAL_GAP_THRESHOLD,
                          n_max: int = 2000) -> int:
    """Smallest even qubit count whose edge-mode splitting drops below ``gap_threshold``."""
    if not gap_threshold > 0:
        raise ConfigurationError(f"gap_threshold must be > 0, got {gap_threshold}")
    _check_topological(j1, j2)

    def below(n):
        return dimerized_gap(j1, j2, n) < gap_threshold

    if below(2):
        return 2
    lo, hi = 2, 4
    while not below(hi):
        lo, hi = hi, 2 * hi
        if hi > n_max:
            if below(n_max - n_max % 2):
                hi = n_max - n_max % 2
                break
            raise ConfigurationError(
                f"gap stays above {gap_threshold} MHz up to {n_max} qubits")
    # invariant: gap(lo) >= threshold > gap(hi), both even
    while hi - lo > 2:
        mid = (lo + hi) // 2
        mid -= mid % 2
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi
