import math

import numpy as np
import pytest

from besr import dynamics, kernels
from besr.dynamics import (BottleneckState, SimulationPlan, anchored_params, equilibrium,
                           jacobian, linearized_rates, linearized_slow_rate,
                           repetition_saturation, simulate, step_equations)
from besr.errors import DomainError, IntegrationError
from besr.physcore import CONSTANTS, TWO_PI
from besr.rates import (RelaxationParams, bottleneck_rate, direct_rate, flipflop_rate,
                        mode_density, slow_time, spontaneous_rate)

OMEGA0 = TWO_PI * 4.44e9
T_X_HALF = CONSTANTS.hbar * OMEGA0 / CONSTANTS.k_B


def paper_params(gamma_cyc=28e6, **kw):
    return RelaxationParams.from_anchor(2.2, 0.254, 0.020, c=5e23, gamma_inh=TWO_PI * gamma_cyc, **kw)


def tail_constant(res, t_from, t_to):
    d = res.deficit()
    m = (d.x >= t_from) & (d.x <= t_to) & (d.y > 0)
    slope = np.polyfit(d.x[m], np.log(d.y[m]), 1)[0]
    return -1.0 / slope


# --- equilibrium and right-hand side --------------------------------------------

def test_equilibrium_zero_temperature_limit():
    p = anchored_params()
    eq = equilibrium(p, 1e-4)
    assert eq.n == pytest.approx(p.c, rel=1e-15) and eq.p == 0.0


def test_equilibrium_at_x_half():
    # hbar w / k_B T = 1, so n = c tanh(1/2) and p = 1/(e - 1)
    p = anchored_params()
    eq = equilibrium(p, T_X_HALF)
    assert eq.n / p.c == pytest.approx(0.46211715726001, rel=1e-12)
    assert eq.p == pytest.approx(0.581976706869326, rel=1e-12)


def test_equilibrium_identity_random_temperatures():
    p = anchored_params()
    for T in np.random.default_rng(1).uniform(0.005, 2.0, 10):
        eq = equilibrium(p, T)
        assert eq.n * (2 * eq.p + 1) == pytest.approx(p.c, rel=1e-12)
    with pytest.raises(DomainError):
        equilibrium(p, 0.0)


def test_fixed_point_is_stationary():
    p = anchored_params()
    for T in (0.02, 0.1, 0.5):
        eq = equilibrium(p, T)
        dn, dp = step_equations(eq, p, T)
        a = spontaneous_rate(p)
        assert abs(dn) <= 1e-10 * a * p.c
        assert abs(dp) <= 1e-10 * max(eq.p, 1.0) / p.tau_ph + 1e-10 * a * p.c / mode_density(p)


def test_saturated_state_derivatives():
    p = anchored_params()
    T = 0.05
    p_th = equilibrium(p, T).p
    dn, dp = step_equations(BottleneckState(0.0, p_th), p, T)
    a = spontaneous_rate(p)
    assert dn == pytest.approx(a * p.c, rel=1e-14)
    assert dp == pytest.approx(a * p.c / (2 * mode_density(p)), rel=1e-14)


def test_energy_bookkeeping_without_phonon_escape():
    p = RelaxationParams.from_anchor(1.2, 0.254, tau_ph=1e30, c=5e23)
    rho = mode_density(p)
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = BottleneckState(rng.uniform(-1, 1) * p.c, rng.uniform(0, 3))
        dn, dp = step_equations(s, p, 0.05)
        assert abs(dp * rho - 0.5 * dn) <= 1e-9 * abs(0.5 * dn) + 1e-30


def test_analytic_jacobian_matches_finite_differences():
    p = anchored_params()
    s = BottleneckState(0.3 * p.c, 0.7)
    J = jacobian(s, p, 0.05, W_p=2.0)
    hn, hp = 1e-6 * p.c, 1e-6
    num = np.empty((2, 2))
    for j, (dn, dp) in enumerate(((hn, 0), (0, hp))):
        f1 = np.array(step_equations(BottleneckState(s.n + dn, s.p + dp), p, 0.05, 2.0))
        f0 = np.array(step_equations(BottleneckState(s.n - dn, s.p - dp), p, 0.05, 2.0))
        num[:, j] = (f1 - f0) / (2 * (dn or dp))
    assert np.allclose(J, num, rtol=1e-6)


# --- linearisation oracle --------------------------------------------------------

GRID_T = (0.020, 0.050, 0.100, 0.200, 0.400)
GRID_G = (14e6, 28e6, 60e6, 125e6, 250e6)


def test_linearised_rate_matches_closed_form_on_grid():
    checked = 0
    for T in GRID_T:
        for g in GRID_G:
            p = paper_params(g)
            slow, fast = linearized_rates(p, T)
            if fast / slow < 100:
                continue
            checked += 1
            assert 1 / slow == pytest.approx(float(slow_time(p, T)), rel=0.01)
    assert checked == 25


def test_linearised_rate_limits():
    p = paper_params()
    assert linearized_slow_rate(p.__class__(**{**p.__dict__, "tau_ph": 1e-15}), 0.05) == \
        pytest.approx(float(direct_rate(p, 0.05)), rel=1e-6)
    few = RelaxationParams(**{**p.__dict__, "c": 1e10})
    assert linearized_slow_rate(few, 0.05) == pytest.approx(float(direct_rate(p, 0.05)), rel=1e-6)
    T = 0.02
    assert 1 / linearized_slow_rate(p, T) == pytest.approx(
        1 / float(direct_rate(p, T)) + 1 / float(bottleneck_rate(p, T)), rel=0.01)


# --- simulation -------------------------------------------------------------------

def test_thermal_start_without_pump_is_constant():
    p = anchored_params()
    res = simulate(SimulationPlan(p, 0.02, t_grid=np.linspace(0, 20, 41)))
    assert np.allclose(res.n, res.n_eq, rtol=1e-12) and np.allclose(res.p, res.p_th, atol=1e-12)


def test_recovery_from_saturation_is_monotone_and_bounded():
    p = anchored_params()
    res = simulate(SimulationPlan(p, 0.02, pump_rate=1e3, t_pump=3.0,
                                  t_grid=np.geomspace(1e-3, 60, 300)))
    assert np.all(np.diff(res.n) >= -1e-9 * p.c)
    assert np.all(res.n <= res.n_eq * (1 + 1e-9))
    assert np.all(np.abs(res.n) <= p.c) and np.all(res.p >= 0)


def test_random_initial_states_converge_and_stay_bounded():
    p = anchored_params(tau_ph=0.5, T1b0=1.0)
    T = 0.05
    eq = equilibrium(p, T)
    t_end = 40 * float(slow_time(p, T))
    grid = np.concatenate([np.geomspace(1e-4, t_end / 2, 60), [t_end]])
    rng = np.random.default_rng(11)
    for _ in range(50):
        s = BottleneckState(rng.uniform(-1, 1) * p.c, rng.uniform(0, 5))
        res = simulate(SimulationPlan(p, T, t_grid=grid, initial=s))
        assert np.all(np.abs(res.n) <= p.c * (1 + 1e-9)) and np.all(res.p >= -1e-12)
        assert res.n[-1] == pytest.approx(eq.n, rel=1e-6)
        assert res.p[-1] == pytest.approx(eq.p, abs=1e-6)


def test_strong_bottleneck_tail_is_single_exponential():
    p = anchored_params(tau_ph=1e-3, T1b0=40.0, T1_anchor=1.2)
    T = 0.02
    expected = float(slow_time(p, T))
    eq = equilibrium(p, T)
    res = simulate(SimulationPlan(p, T, t_grid=np.linspace(0, 8 * expected, 400),
                                  initial=BottleneckState(0.9 * eq.n, eq.p)))
    assert tail_constant(res, 3 * expected, 8 * expected) == pytest.approx(expected, rel=0.05)


def test_without_bottleneck_recovery_follows_direct_time():
    p = anchored_params(tau_ph=1e-9, T1b0=1e-9)
    T = 0.1
    expected = 1 / float(direct_rate(p, T))
    res = simulate(SimulationPlan(p, T, pump_rate=1e3, t_pump=1.0,
                                  t_grid=np.linspace(0, 8 * expected, 300)))
    assert tail_constant(res, expected, 6 * expected) == pytest.approx(expected, rel=0.02)


def test_longer_pump_gives_slower_recovery_at_high_field():
    p = anchored_params(B0=0.254)
    T = 0.02
    lin = float(slow_time(p, T))
    grid = np.geomspace(1e-3, 8 * lin, 200)
    tails = [tail_constant(simulate(SimulationPlan(p, T, 1e3, tp, grid)), 0.5, 8 * lin)
             for tp in (0.01, 3.0)]
    assert tails[1] > tails[0]


# Late-time constant against initial depletion, in two regimes: the default
# preset (adiabatic phonons, tau_ph comparable to T1b) and a phonon-limited
# reservoir (tau_ph much longer than T1D and T1b).
@pytest.mark.parametrize("tau_ph,T1b0", [(5.0, 5.0), (20.0, 1.0)],
                         ids=["default-preset", "phonon-limited"])
def test_late_constant_non_decreasing_in_depletion(tau_ph, T1b0):
    p = anchored_params(tau_ph=tau_ph, T1b0=T1b0)
    T = 0.02
    lin = 1 / linearized_slow_rate(p, T)
    eq = equilibrium(p, T)
    grid = np.linspace(0, 9 * lin, 600)
    consts = []
    for d in (0.1, 0.4, 0.7, 1.0):
        res = simulate(SimulationPlan(p, T, t_grid=grid, initial=BottleneckState(eq.n * (1 - d), eq.p)))
        consts.append(tail_constant(res, 4 * lin, 9 * lin))
    assert np.all(np.diff(consts) >= 0), consts


def test_step_underflow_raises_with_time(monkeypatch):
    def broken(u0, p0, t0, t_out, *a, **kw):
        return np.zeros((len(t_out), 2)), kernels.STEP_UNDERFLOW, 0.125, (0, 0, math.nan)
    monkeypatch.setattr(kernels, "integrate_bottleneck", broken)
    with pytest.raises(IntegrationError) as exc:
        simulate(SimulationPlan(anchored_params(), 0.02, 1e3, 1.0))
    assert exc.value.t == 0.125


def test_plan_validation():
    p = anchored_params()
    with pytest.raises(DomainError):
        SimulationPlan(p, 0.02, t_grid=[0.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        SimulationPlan(p, 0.02, pump_rate=-1.0)
    with pytest.raises(DomainError):
        SimulationPlan(p, 0.02, initial=BottleneckState(2 * p.c, 0.0)).initial.check(p.c)


# --- repetition ----------------------------------------------------------------

def test_repetition_long_period_leaves_no_excess():
    r = repetition_saturation(OMEGA0, 0.02, 1e4, 1.5)
    assert r.excess == 0.0 and r.T_spin == 0.02


def test_repetition_at_slow_time_geometric_excess():
    r = repetition_saturation(OMEGA0, 0.02, 1.5, 1.5)
    assert r.per_shot == pytest.approx(0.581976706869326, rel=1e-12)


def test_repetition_excess_decreasing_and_flipflop_saturates():
    t_rep = np.linspace(0.5, 20, 80)
    ex = [repetition_saturation(OMEGA0, 0.02, t, 1.5).excess for t in t_rep]
    assert np.all(np.diff(ex) < 0)
    p = RelaxationParams()

    def rff(t):
        return float(flipflop_rate(p, min(repetition_saturation(OMEGA0, 0.02, t, 1.5).T_spin, 1e6)))
    base, span = rff(1e4), rff(1.0) - rff(1e4)
    for t in (5.0, 7.0, 10.0):
        assert rff(t) - base <= 0.1 * span
