"""Closed-form relaxation rate laws.

All rates are in s^-1, times in s, frequencies angular (rad/s) unless a
name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .physcore import TWO_PI, thermal_factor

OMEGA0_DEFAULT = TWO_PI * 4.44e9


def _positive(**kw):
    for name, val in kw.items():
        if np.any(np.asarray(val) <= 0):
            raise DomainError(f"{name} must be positive")


@dataclass(frozen=True)
class RelaxationParams:
    """Inputs of the direct, bottleneck and flip-flop rate laws.

    ``gamma_inh`` is stored as an angular linewidth. ``gamma_units`` chooses
    whether the bottleneck prefactor uses it as is (``"angular"``) or
    divided by 2*pi (``"cyclic"``).
    """

    alpha_D: float = 1.0
    omega0: float = OMEGA0_DEFAULT
    B0: float = 0.254
    tau_ph: float = 2e-4 / 3000.0
    v: float = 3000.0
    c: float = 5e23
    gamma_inh: float = TWO_PI * 28e6
    d: float = 2e-4
    xi: float = 8.38 ** 4 / 20.0
    alpha_ff: float = 1.0
    gamma_units: str = "angular"

    def __post_init__(self):
        if self.gamma_units not in ("angular", "cyclic"):
            raise DomainError("gamma_units must be 'angular' or 'cyclic'")

    @classmethod
    def from_anchor(cls, T1: float, B_anchor: float, T_anchor: float = 0.0, **kw):
        """Derive alpha_D so that 1/direct_rate equals ``T1`` at ``B_anchor``.

        ``T_anchor = 0`` anchors the spontaneous-emission floor.
        """
        omega0 = kw.get("omega0", OMEGA0_DEFAULT)
        kw.setdefault("B0", B_anchor)
        kw.setdefault("tau_ph", kw.get("d", 2e-4) / kw.get("v", 3000.0))
        return cls(alpha_D=alpha_from_anchor(T1, B_anchor, omega0, T_anchor), **kw)

    def with_field(self, B0: float) -> "RelaxationParams":
        return replace(self, B0=B0)


@dataclass(frozen=True)
class TemperatureModelParams:
    T1D0: float
    T1b0: float
    omega0: float = OMEGA0_DEFAULT

    def __post_init__(self):
        if self.T1D0 <= 0 or self.T1b0 < 0:
            raise DomainError("need T1D0 > 0 and T1b0 >= 0")


def alpha_from_anchor(T1: float, B: float, omega0: float, T: float = 0.0) -> float:
    _positive(T1=T1, B=B, omega0=omega0)
    thermal = 1.0 if T <= 0 else thermal_factor("coth", omega0, T)
    return 1.0 / (T1 * omega0 ** 3 * B ** 2 * thermal)


def spontaneous_rate(p: RelaxationParams) -> float:
    """T -> 0 floor of the direct process, alpha_D * omega^3 * B^2."""
    _positive(alpha_D=p.alpha_D, omega0=p.omega0, B0=p.B0)
    return p.alpha_D * p.omega0 ** 3 * p.B0 ** 2


def direct_rate(p: RelaxationParams, T):
    _positive(T=T)
    return spontaneous_rate(p) * thermal_factor("coth", p.omega0, T)


def mode_density(p: RelaxationParams) -> float:
    """Density of resonant phonon modes, 3 w^2 Gamma / (2 pi^2 v^3), in m^-3."""
    _positive(omega0=p.omega0, gamma_inh=p.gamma_inh, v=p.v)
    gamma = p.gamma_inh if p.gamma_units == "angular" else p.gamma_inh / TWO_PI
    return 3.0 * p.omega0 ** 2 * gamma / (2.0 * math.pi ** 2 * p.v ** 3)


def bottleneck_time0(p: RelaxationParams) -> float:
    """T -> 0 bottleneck time tau_ph * c / rho."""
    _positive(tau_ph=p.tau_ph, c=p.c)
    return p.tau_ph * p.c / mode_density(p)


def bottleneck_rate(p: RelaxationParams, T):
    _positive(T=T, tau_ph=p.tau_ph, c=p.c)
    return mode_density(p) / (p.tau_ph * p.c) * thermal_factor("coth", p.omega0, T) ** 2


def t1_slow_model(mp: TemperatureModelParams, T):
    """T1D0 tanh(x) + T1b0 tanh(x)^2 with x = hbar w0 / 2 k_B T."""
    th = thermal_factor("tanh", mp.omega0, T)
    return mp.T1D0 * th + mp.T1b0 * th ** 2


def flipflop_rate(p: RelaxationParams, T):
    """alpha_ff c^2 Xi / Gamma sech^2(x); ``T`` is the spin temperature."""
    _positive(T=T, c=p.c, gamma_inh=p.gamma_inh, xi=p.xi, alpha_ff=p.alpha_ff)
    return p.alpha_ff * p.c ** 2 * p.xi / p.gamma_inh * thermal_factor("sech2", p.omega0, T)


def purcell_rate(g0: float, kappa: float, detuning: float = 0.0) -> float:
    """kappa g^2 / ((kappa/2)^2 + delta^2) with g0 given as cyclic (Hz).

    ``kappa`` and ``detuning`` are angular.
    """
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    g = TWO_PI * g0
    return kappa * g ** 2 / ((kappa / 2) ** 2 + detuning ** 2)


def rabi_frequency(g0: float, n_photons: float) -> float:
    """Cyclic Rabi frequency 2 g0 sqrt(n) for cyclic ``g0``."""
    if n_photons < 0:
        raise DomainError("photon number must be non-negative")
    return 2.0 * g0 * math.sqrt(n_photons)


def slow_time(p: RelaxationParams, T):
    """T1D + tau_ph + T1b, the linear-regime slow recovery time."""
    return 1.0 / direct_rate(p, T) + p.tau_ph + 1.0 / bottleneck_rate(p, T)


def rate_rows(p: RelaxationParams, axis: str, grid, T_fixed: float = 0.02):
    """Per-point (x, component, rate, T1) tuples for a T or B sweep."""
    rows = []
    for x in np.asarray(grid, dtype=float):
        if axis == "T":
            q, T = p, float(x)
        elif axis == "B":
            q, T = p.with_field(float(x)), T_fixed
        else:
            raise DomainError("axis must be 'T' or 'B'")
        rd = float(direct_rate(q, T))
        rb = float(bottleneck_rate(q, T))
        rs = 1.0 / float(slow_time(q, T))
        rf = float(flipflop_rate(q, T))
        for name, r in (("direct", rd), ("bottleneck", rb), ("slow", rs), ("flipflop", rf)):
            rows.append((float(x), name, r, 1.0 / r))
    return rows
