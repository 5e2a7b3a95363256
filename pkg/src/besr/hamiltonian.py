"""Er3+ effective spin-1/2 Hamiltonian, resonance fields and thermal coupling.

Frame: crystal c-axis along z, a-axis along x. The static field lies in the
ac plane at angle ``theta`` from c. Energies are cyclic frequencies in GHz.

The resonator drive field is taken to lie in the crystal ab plane (the
coupling inductor runs along c), so transition strengths are the mean of
``|<u|S_x|l>|^2`` and ``|<u|S_y|l>|^2``. For an isolated S=1/2 with the field
along c this is exactly 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import DomainError, NotFoundError
from .physcore import CONSTANTS, TWO_PI

MU_B_GHZ_PER_T = CONSTANTS.mu_B / CONSTANTS.h / 1e9
MU_N_GHZ_PER_T = 5.0507837393e-27 / CONSTANTS.h / 1e9  # nuclear magneton
K_B_GHZ_PER_K = CONSTANTS.k_B / CONSTANTS.h / 1e9

# Literature values for 167Er in CaWO4 (not stated in the measurements this
# toolkit models). The sign follows the negative nuclear moment of 167Er.
A_PERP_MHZ_DEFAULT = -873.0
A_PAR_MHZ_DEFAULT = -130.0
G_NUCLEAR_167ER = -0.1611


@dataclass(frozen=True)
class SpinSystem:
    g_perp: float = 8.38
    g_par: float = 1.24
    nuclear_spin: float = 0.0
    hyperfine_A_perp: float = A_PERP_MHZ_DEFAULT  # MHz
    hyperfine_A_par: float = A_PAR_MHZ_DEFAULT  # MHz
    isotope_abundance: float = 0.78
    spin_density: float = 5e23  # m^-3
    nuclear_zeeman: bool = False
    g_nuclear: float = G_NUCLEAR_167ER

    def __post_init__(self):
        if self.g_perp <= 0 or self.g_par <= 0:
            raise DomainError("g-tensor principal values must be positive")
        if not 0.0 <= self.isotope_abundance <= 1.0:
            raise DomainError("isotope abundance must lie in [0, 1]")
        if self.nuclear_spin not in (0.0, 3.5):
            raise DomainError("nuclear spin must be 0 or 7/2")

    @property
    def dim(self) -> int:
        return int(round(2 * (2 * self.nuclear_spin + 1)))

    @classmethod
    def even_isotope(cls, **kw) -> "SpinSystem":
        return cls(nuclear_spin=0.0, isotope_abundance=0.78, **kw)

    @classmethod
    def er167(cls, **kw) -> "SpinSystem":
        return cls(nuclear_spin=3.5, isotope_abundance=0.22, **kw)


@dataclass(frozen=True)
class FieldOrientation:
    B_mag: float  # T
    theta: float  # rad from the c-axis, in the ac plane

    def __post_init__(self):
        if self.B_mag < 0:
            raise DomainError("field magnitude must be non-negative")


@dataclass(frozen=True)
class LevelDiagram:
    energies: np.ndarray  # GHz, ascending
    states: np.ndarray  # columns are eigenvectors in |m_S> x |m_I> order


@dataclass(frozen=True)
class Transition:
    lower_index: int
    upper_index: int
    frequency: float  # GHz
    matrix_element: float
    label: float | None = None  # m_I of a nuclear-spin-preserving line
    nuclear_preserving: bool = True
    field: FieldOrientation | None = field(default=None, compare=False)


@lru_cache(maxsize=None)
def _spin_matrices(j: float):
    m = np.arange(j, -j - 1, -1)
    d = len(m)
    jp = np.zeros((d, d))
    for i in range(1, d):
        jp[i - 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    jz = np.diag(m).astype(complex)
    return jx.astype(complex), jy, jz


@lru_cache(maxsize=None)
def _operators(nuclear_spin: float):
    """(S_x, S_y, S_z, I_x, I_y, I_z) on the product space."""
    s = _spin_matrices(0.5)
    d_n = int(round(2 * nuclear_spin + 1))
    eye_n = np.eye(d_n)
    S = tuple(np.kron(op, eye_n) for op in s)
    if d_n == 1:
        zero = np.zeros((2, 2), dtype=complex)
        return S + (zero, zero, zero)
    i_ops = _spin_matrices(nuclear_spin)
    I = tuple(np.kron(np.eye(2), op) for op in i_ops)
    return S + I


def effective_g(sys: SpinSystem, theta):
    """sqrt(g_par^2 cos^2 theta + g_perp^2 sin^2 theta)."""
    return np.sqrt((sys.g_par * np.cos(theta)) ** 2 + (sys.g_perp * np.sin(theta)) ** 2)


def build_hamiltonian(sys: SpinSystem, fld: FieldOrientation) -> np.ndarray:
    """Zeeman + hyperfine Hamiltonian in GHz on the 2(2I+1) product basis."""
    Sx, Sy, Sz, Ix, Iy, Iz = _operators(sys.nuclear_spin)
    bx = fld.B_mag * math.sin(fld.theta)
    bz = fld.B_mag * math.cos(fld.theta)
    H = MU_B_GHZ_PER_T * (sys.g_perp * bx * Sx + sys.g_par * bz * Sz)
    if sys.nuclear_spin:
        a_perp = sys.hyperfine_A_perp * 1e-3
        a_par = sys.hyperfine_A_par * 1e-3
        H = H + a_perp * (Sx @ Ix + Sy @ Iy) + a_par * (Sz @ Iz)
        if sys.nuclear_zeeman:
            H = H - sys.g_nuclear * MU_N_GHZ_PER_T * (bx * Ix + bz * Iz)
    return H


def _fix_phase(v):
    idx = np.argmax(np.abs(v), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)


def diagonalize(H, degeneracy_tol: float = 1e-9) -> LevelDiagram:
    """Full eigendecomposition of a Hermitian matrix, ascending energies.

    Degenerate levels are rotated to diagonalise S_z inside their subspace
    and ordered by descending <S_z>, which fixes the output uniquely.
    """
    H = np.asarray(H, dtype=complex)
    norm = np.linalg.norm(H) or 1.0
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("Hamiltonian must be a square matrix")
    if np.linalg.norm(H - H.conj().T) > 1e-12 * norm:
        raise DomainError("matrix is not Hermitian")
    w, v, _ = kernels.jacobi_eigh(H)
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]

    n = len(w)
    if n % 2 == 0:
        Sz = np.kron(np.diag([0.5, -0.5]), np.eye(n // 2))
        start = 0
        while start < n:
            stop = start + 1
            while stop < n and w[stop] - w[start] <= degeneracy_tol * norm:
                stop += 1
            if stop - start > 1:
                vg = v[:, start:stop]
                m = vg.conj().T @ Sz @ vg
                mw, mv = np.linalg.eigh((m + m.conj().T) / 2)
                v[:, start:stop] = (vg @ mv)[:, ::-1]
                w[start:stop] = np.mean(w[start:stop])
            start = stop
    return LevelDiagram(energies=w, states=_fix_phase(v))


def levels_at(sys: SpinSystem, fld: FieldOrientation) -> LevelDiagram:
    return diagonalize(build_hamiltonian(sys, fld))


def _drive_elements(states, nuclear_spin):
    Sx, Sy = _operators(nuclear_spin)[:2]
    mx = states.conj().T @ Sx @ states
    my = states.conj().T @ Sy @ states
    return 0.5 * (np.abs(mx) ** 2 + np.abs(my) ** 2)


def _nuclear_axis(sys: SpinSystem, theta: float) -> np.ndarray:
    """Quantization axis of the nucleus: direction of the hyperfine field A.g.b.

    Oriented to coincide with +z at theta = 0 and +x at theta = pi/2.
    """
    n = np.array([abs(sys.hyperfine_A_perp) * sys.g_perp * math.sin(theta), 0.0,
                  abs(sys.hyperfine_A_par) * sys.g_par * math.cos(theta)])
    norm = np.linalg.norm(n)
    return n / norm if norm > 0 else np.array([0.0, 0.0, 1.0])


def _nuclear_projections(states, sys: SpinSystem, theta: float):
    ops = _operators(sys.nuclear_spin)
    n = _nuclear_axis(sys, theta)
    In = n[0] * ops[3] + n[1] * ops[4] + n[2] * ops[5]
    return np.real(np.einsum("ij,ik,kj->j", states.conj(), In, states))


def _nearest_projection(m, nuclear_spin):
    """Nearest allowed half-integer projection of an expectation value."""
    if nuclear_spin == 0:
        return 0.0
    return min(max(math.floor(m) + 0.5, -nuclear_spin), nuclear_spin)


def transitions(sys: SpinSystem, fld: FieldOrientation, levels: LevelDiagram | None = None):
    """All level pairs with their drive strengths, sorted by frequency."""
    if levels is None:
        levels = levels_at(sys, fld)
    me = _drive_elements(levels.states, sys.nuclear_spin)
    mI = _nuclear_projections(levels.states, sys, fld.theta)
    out = []
    n = len(levels.energies)
    for lo in range(n):
        for up in range(lo + 1, n):
            f = levels.energies[up] - levels.energies[lo]
            if f <= 0:
                continue
            ml = _nearest_projection(mI[lo], sys.nuclear_spin)
            mu = _nearest_projection(mI[up], sys.nuclear_spin)
            keep = ml == mu
            out.append(Transition(lo, up, float(f), float(me[up, lo]),
                                  label=ml if keep else None,
                                  nuclear_preserving=keep, field=fld))
    out.sort(key=lambda tr: tr.frequency)
    return out


def resonance_fields(sys: SpinSystem, theta: float, omega0: float, B_range=(0.0, 0.6),
                     grid_step: float = 1e-3, threshold: float = 1e-3, xtol: float = 1e-10):
    """Fields in ``B_range`` at which an allowed transition is at omega0.

    Returns ``[(B0, Transition), ...]`` sorted by field. A transition is kept
    when its strength exceeds ``threshold`` times the strongest crossing.
    """
    if omega0 <= 0:
        raise DomainError("omega0 must be positive")
    b_lo, b_hi = map(float, B_range)
    if not (math.isfinite(b_lo) and math.isfinite(b_hi)) or b_hi < b_lo:
        raise DomainError("B_range must be a finite, ordered interval")
    f0 = omega0 / TWO_PI / 1e9
    n_pts = max(int(math.ceil((b_hi - b_lo) / grid_step)) + 1, 2)
    grid = np.linspace(b_lo, b_hi, n_pts)
    E = np.array([levels_at(sys, FieldOrientation(b, theta)).energies for b in grid])
    n = sys.dim
    found = []
    for lo in range(n):
        for up in range(lo + 1, n):
            g = E[:, up] - E[:, lo] - f0
            sign_change = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
            exact = np.nonzero(g == 0)[0]
            for i in sign_change:
                def df(b, lo=lo, up=up):
                    e = levels_at(sys, FieldOrientation(b, theta)).energies
                    return e[up] - e[lo] - f0
                b0 = brentq(df, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
                found.append((b0, lo, up))
            for i in exact:
                found.append((float(grid[i]), lo, up))
    results = []
    for b0, lo, up in found:
        fld = FieldOrientation(b0, theta)
        lev = levels_at(sys, fld)
        tr = next(t for t in transitions(sys, fld, lev)
                  if t.lower_index == lo and t.upper_index == up)
        results.append((b0, tr))
    if not results:
        return []
    strongest = max(tr.matrix_element for _, tr in results)
    results = [(b, tr) for b, tr in results if tr.matrix_element >= threshold * strongest]
    results.sort(key=lambda r: r[0])
    return results


def analytic_resonance_field(sys: SpinSystem, theta, omega0):
    """B0 = hbar*omega0 / (g_eff mu_B) for the I=0 line."""
    return CONSTANTS.hbar * omega0 / (effective_g(sys, theta) * CONSTANTS.mu_B)


def boltzmann_populations(levels: LevelDiagram, T: float) -> np.ndarray:
    if T <= 0:
        raise DomainError("temperature must be positive")
    e = np.asarray(levels.energies, dtype=float)
    w = np.exp(-(e - e.min()) / (K_B_GHZ_PER_K * T))
    return w / w.sum()


def population_difference(levels: LevelDiagram, transition: Transition, T: float) -> float:
    p = boltzmann_populations(levels, T)
    return float(p[transition.lower_index] - p[transition.upper_index])


def ensemble_coupling(sys: SpinSystem, transition: Transition, T: float,
                      g_ens_ref: float, T_ref: float) -> float:
    """g_ens(T) = g_ref * sqrt(dp(T) / dp(T_ref)); cyclic frequency in/out."""
    if T <= 0 or T_ref <= 0:
        raise DomainError("temperatures must be positive")
    if transition.field is None:
        raise DomainError("transition carries no field; cannot rebuild levels")
    levels = levels_at(sys, transition.field)
    dp_ref = population_difference(levels, transition, T_ref)
    if dp_ref <= 0:
        raise DomainError("reference population difference is not positive")
    dp = population_difference(levels, transition, T)
    return g_ens_ref * math.sqrt(max(dp, 0.0) / dp_ref)


def coupling_curve(sys: SpinSystem, transition: Transition, temperatures, g_ens_ref, T_ref):
    levels = levels_at(sys, transition.field)
    dp_ref = population_difference(levels, transition, T_ref)
    if dp_ref <= 0:
        raise DomainError("reference population difference is not positive")
    dp = np.array([population_difference(levels, transition, T) for T in np.atleast_1d(temperatures)])
    return g_ens_ref * np.sqrt(np.clip(dp, 0.0, None) / dp_ref)


def find_transition(sys: SpinSystem, theta: float, omega0: float, m_I: float | None = None,
                    B_range=(0.0, 0.6)) -> Transition:
    """The resonant transition at omega0 with nuclear projection ``m_I``.

    ``m_I=None`` selects the strongest line (the only one for I=0).
    """
    lines = [tr for _, tr in resonance_fields(sys, theta, omega0, B_range) if tr.nuclear_preserving]
    if m_I is not None:
        lines = [tr for tr in lines if tr.label == m_I]
    if not lines:
        raise NotFoundError(f"no resonant transition with m_I={m_I}")
    return max(lines, key=lambda tr: tr.matrix_element)


def infer_spin_temperature(measured: float, model, bracket=(0.01, 1.0), base: float = 0.02,
                           n_grid: int = 400, xtol: float = 1e-7) -> float:
    """Temperature at which ``model(T) == measured``.

    The bracket is scanned on a log grid; every sign change is refined with
    Brent's method and the root closest to ``base`` is returned.
    """
    lo, hi = bracket
    if lo <= 0 or hi <= lo:
        raise DomainError("bracket must satisfy 0 < lo < hi")
    grid = np.geomspace(lo, hi, n_grid)
    resid = np.array([model(T) - measured for T in grid])
    roots = [float(grid[i]) for i in np.nonzero(resid == 0)[0]]
    for i in np.nonzero(np.sign(resid[:-1]) * np.sign(resid[1:]) < 0)[0]:
        roots.append(brentq(lambda T: model(T) - measured, grid[i], grid[i + 1], xtol=xtol))
    if not roots:
        raise NotFoundError("measured value is outside the model curve on the bracket")
    return min(roots, key=lambda r: abs(r - base))
