"""Nonlinear spin-phonon rate equations of the phonon bottleneck.

Two variables: the population difference density ``n`` of the resonant
spins and the mean occupation ``p`` of the phonon modes inside the
inhomogeneous line::

    dn/dt = (1/T1_0) [c - n (2p + 1)] - W_p n
    dp/dt = (1/(2 rho)) (1/T1_0) [c - n (2p + 1)] - (p - p_th) / tau_ph

``1/T1_0`` is the spontaneous direct rate and ``rho`` the resonant mode
density. Integration runs on ``u = n/c`` through :mod:`besr.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DomainError, IntegrationError
from .physcore import CONSTANTS, bose_occupation, thermal_factor
from .rates import RelaxationParams, mode_density, spontaneous_rate
from .trace import Trace


@dataclass(frozen=True)
class BottleneckState:
    n: float  # m^-3
    p: float

    def check(self, c: float):
        if abs(self.n) > c * (1 + 1e-12) or self.p < 0:
            raise DomainError("state outside |n| <= c, p >= 0")
        return self


@dataclass(frozen=True)
class SimulationPlan:
    params: RelaxationParams
    T_bath: float
    pump_rate: float = 0.0
    t_pump: float = 0.0
    t_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 10.0, 201))
    initial: BottleneckState | str = "thermal"
    rtol: float = 1e-8
    atol: float = 1e-12

    def __post_init__(self):
        g = np.asarray(self.t_grid, dtype=float)
        object.__setattr__(self, "t_grid", g)
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0) or g[0] < 0:
            raise DomainError("t_grid must be non-negative and strictly increasing")
        if self.pump_rate < 0 or self.t_pump < 0:
            raise DomainError("pump rate and duration must be non-negative")
        if self.T_bath <= 0:
            raise DomainError("bath temperature must be positive")
        if isinstance(self.initial, str) and self.initial != "thermal":
            raise DomainError("initial must be 'thermal' or a BottleneckState")

    def to_dict(self) -> dict:
        p = self.params
        init = self.initial if isinstance(self.initial, str) else {
            "n": self.initial.n, "p": self.initial.p}
        return {
            "params": {k: getattr(p, k) for k in p.__dataclass_fields__},
            "T_bath": self.T_bath, "pump_rate": self.pump_rate, "t_pump": self.t_pump,
            "t_grid": [float(t) for t in self.t_grid], "initial": init,
            "rtol": self.rtol, "atol": self.atol,
        }


@dataclass(frozen=True)
class SimulationResult:
    t: np.ndarray  # s, measured from the end of the pump
    n: np.ndarray
    p: np.ndarray
    n_eq: float
    p_th: float
    c: float
    plan: SimulationPlan
    pump_end: BottleneckState
    stats: dict

    def deficit(self) -> Trace:
        """(n_eq - n)/c against recovery time, the observable being fitted."""
        return Trace(self.t, (self.n_eq - self.n) / self.c, axis_kind="time")


def anchored_params(B0: float = 0.254, T1_anchor: float = 1.2, B_anchor: float = 0.254,
                    tau_ph: float = 5.0, T1b0: float = 5.0, **kw) -> RelaxationParams:
    """Parameters pinned to a T -> 0 direct time at one field and a bottleneck time.

    ``c`` is chosen so that tau_ph c / rho equals ``T1b0``. The defaults put
    the phonon reservoir on the same time scale as the pump, which is the
    regime where the pump duration leaves a mark on the recovery.
    """
    base = RelaxationParams.from_anchor(T1_anchor, B_anchor, 0.0, tau_ph=tau_ph, **kw)
    return replace(base, c=T1b0 * mode_density(base) / tau_ph).with_field(B0)


def equilibrium(params: RelaxationParams, T_bath: float) -> BottleneckState:
    if T_bath <= 0:
        raise DomainError("bath temperature must be positive")
    n = params.c * thermal_factor("tanh", params.omega0, T_bath)
    return BottleneckState(n=float(n), p=float(bose_occupation(params.omega0, T_bath)))


def _coefficients(params: RelaxationParams, T_bath: float, W_p: float):
    a = spontaneous_rate(params)
    K = params.c / (2.0 * mode_density(params))
    p_th = float(bose_occupation(params.omega0, T_bath))
    return a, K, 1.0 / params.tau_ph, p_th, W_p


def step_equations(state: BottleneckState, params: RelaxationParams, T_bath: float,
                   W_p: float = 0.0):
    """(dn/dt, dp/dt) at ``state``."""
    a = spontaneous_rate(params)
    rho = mode_density(params)
    p_th = float(bose_occupation(params.omega0, T_bath))
    drive = a * (params.c - state.n * (2.0 * state.p + 1.0))
    dn = drive - W_p * state.n
    dp = drive / (2.0 * rho) - (state.p - p_th) / params.tau_ph
    return dn, dp


def jacobian(state: BottleneckState, params: RelaxationParams, T_bath: float,
             W_p: float = 0.0) -> np.ndarray:
    a = spontaneous_rate(params)
    rho = mode_density(params)
    j11 = -a * (2.0 * state.p + 1.0) - W_p
    j12 = -2.0 * a * state.n
    j21 = -a * (2.0 * state.p + 1.0) / (2.0 * rho)
    j22 = -a * state.n / rho - 1.0 / params.tau_ph
    return np.array([[j11, j12], [j21, j22]])


def linearized_rates(params: RelaxationParams, T_bath: float):
    """(slow, fast) relaxation rates: eigenvalues of the equilibrium Jacobian."""
    J = jacobian(equilibrium(params, T_bath), params, T_bath)
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = math.sqrt(max(tr * tr - 4.0 * det, 0.0))
    fast = 0.5 * (-tr + disc)
    slow = det / fast  # product of the two rates is det
    return slow, fast


def linearized_slow_rate(params: RelaxationParams, T_bath: float) -> float:
    return linearized_rates(params, T_bath)[0]


def _run(u0, p0, times, coeffs, plan):
    out, status, t_fail, stats = kernels.integrate_bottleneck(
        u0, p0, 0.0, times, *coeffs, rtol=plan.rtol, atol=plan.atol)
    if status == kernels.STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", t_fail)
    if status == kernels.MAX_STEPS:
        raise IntegrationError("step limit exceeded", t_fail)
    return out, stats


def simulate(plan: SimulationPlan) -> SimulationResult:
    """Pump for ``t_pump`` at ``pump_rate``, then sample the free recovery."""
    prm = plan.params
    eq = equilibrium(prm, plan.T_bath)
    init = eq if plan.initial == "thermal" else plan.initial.check(prm.c)
    u, p = init.n / prm.c, init.p
    stats = {"pump": None, "recovery": None, "backend": kernels.BACKEND}
    if plan.t_pump > 0 and plan.pump_rate > 0:
        coeffs = _coefficients(prm, plan.T_bath, plan.pump_rate)
        out, st = _run(u, p, np.array([plan.t_pump]), coeffs, plan)
        u, p = out[-1]
        stats["pump"] = {"accepted": st[0], "rejected": st[1], "t_stiff": st[2]}
    pump_end = BottleneckState(n=u * prm.c, p=p)
    coeffs = _coefficients(prm, plan.T_bath, 0.0)
    out, st = _run(u, p, plan.t_grid, coeffs, plan)
    stats["recovery"] = {"accepted": st[0], "rejected": st[1], "t_stiff": st[2]}
    return SimulationResult(t=plan.t_grid.copy(), n=out[:, 0] * prm.c, p=out[:, 1],
                            n_eq=eq.n, p_th=eq.p, c=prm.c, plan=plan,
                            pump_end=pump_end, stats=stats)


@dataclass(frozen=True)
class RepetitionResult:
    excess: float  # steady-state deficit as a fraction of n_eq
    per_shot: float  # excess divided by the per-shot depletion
    T_spin: float  # K; inf once polarisation is gone


def repetition_saturation(omega0: float, T_bath: float, t_rep: float, T_slow: float,
                          depletion: float = 1.0) -> RepetitionResult:
    """Steady deficit left by a train of shots repeated every ``t_rep``.

    Each shot removes ``depletion`` (a fraction of n_eq) and the recovery
    between shots leaves a fraction r = exp(-t_rep/T_slow), so the residual
    adds up to depletion * r / (1 - r).
    """
    if t_rep <= 0 or T_slow <= 0:
        raise DomainError("t_rep and T_slow must be positive")
    r = math.exp(-t_rep / T_slow)
    per_shot = r / (1.0 - r) if r < 1.0 else math.inf
    excess = depletion * per_shot
    pol = thermal_factor("tanh", omega0, T_bath) * (1.0 - excess)
    if excess == 0.0:
        T_spin = T_bath
    elif pol <= 0:
        T_spin = math.inf
    else:
        T_spin = CONSTANTS.hbar * omega0 / (2.0 * CONSTANTS.k_B * math.atanh(pol))
    return RepetitionResult(excess=excess, per_shot=per_shot, T_spin=T_spin)
