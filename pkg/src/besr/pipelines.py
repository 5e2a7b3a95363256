"""Computations behind the CLI commands and figure bundles.

Each function is a pure function of a :class:`~besr.config.Config` (plus a
seed where noise is involved) and returns tables or fit results; writing
files is left to the caller.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from . import fitting, fixtures
from .config import Config
from .dynamics import SimulationPlan, simulate
from .hamiltonian import (FieldOrientation, analytic_resonance_field,
                          effective_g, levels_at, resonance_fields, transitions)
from .io import Table
from .rates import (RelaxationParams, TemperatureModelParams, alpha_from_anchor,
                    direct_rate, rate_rows, slow_time, t1_slow_model)
from .trace import Trace
from .svg import Series, plot

ISOTOPES = (("I=0", 0.0), ("I=7/2", 3.5))

# Values quoted for the field dependence of the slow recovery time.
FIELD_ANCHORS = ((0.254, 2.2), (0.0385, 67.0))
PANEL_PARAMS = {"fig4b": 0.25, "fig4c": 0.9, "fig4d": 1.95}


def _meta(cfg: Config, command: str, seed=None, **extra):
    meta = {"command": command, "config_sha256": cfg.digest}
    if seed is not None:
        meta["seed"] = seed
    meta.update(extra)
    return meta


def _grid(start, stop, n, log=False):
    if stop == start:
        return np.array([start])
    return np.geomspace(start, stop, n) if log else np.linspace(start, stop, n)


# ----------------------------------------------------------------- spectrum

def spectrum(cfg: Config, theta: float | None = None):
    """Level energies vs field for both isotopes and the f0 crossing markers."""
    theta = cfg["spin_system.theta"] if theta is None else theta
    b0, b1 = cfg["spectrum.B_start"], cfg["spectrum.B_stop"]
    grid = _grid(b0, b1, cfg.get_int("spectrum.n_points"))
    omega0 = cfg.resonator().omega0
    rows, marks = [], []
    for name, spin in ISOTOPES:
        sys = cfg.spin_system(spin)
        for b in grid:
            E = levels_at(sys, FieldOrientation(float(b), theta)).energies
            rows.extend([float(b) * 1e3, name, i, float(e)] for i, e in enumerate(E))
        if b1 > b0:
            for bres, tr in resonance_fields(sys, theta, omega0, (b0, b1)):
                marks.append([name, bres * 1e3, "" if tr.label is None else tr.label,
                              tr.matrix_element, int(tr.nuclear_preserving),
                              tr.lower_index, tr.upper_index])
    meta = _meta(cfg, "spectrum", theta_deg=math.degrees(theta))
    levels = Table(["B_mT", "isotope", "level", "energy_GHz"], rows, dict(meta),
                   {"B_mT": "mT", "energy_GHz": "GHz"})
    crossings = Table(["isotope", "B0_mT", "transition_label", "matrix_element",
                       "nuclear_preserving", "lower_level", "upper_level"], marks, dict(meta),
                      {"B0_mT": "mT", "matrix_element": "1"})
    return levels, crossings


def spectrum_svg(levels: Table, crossings: Table) -> str:
    series = []
    B = np.array(levels.column("B_mT"), float)
    iso = levels.column("isotope")
    lev = levels.column("level")
    E = np.array(levels.column("energy_GHz"), float)
    for name, _ in ISOTOPES:
        for k in sorted({l for l, i in zip(lev, iso) if i == name}):
            m = np.array([(i == name and l == k) for i, l in zip(iso, lev)])
            series.append(Series(f"{name}" if k == 0 else "", B[m], E[m]))
    return plot(series, "B (mT)", "E/h (GHz)", "Level energies")


# ------------------------------------------------------------------- angles

def drive_factor(cfg: Config, theta: float) -> float:
    """sqrt(M(theta)/M(0)) of the I=0 line: relative single-spin coupling."""
    omega0 = cfg.resonator().omega0
    sys = cfg.spin_system(0.0)
    m = []
    for th in (theta, 0.0):
        b = analytic_resonance_field(sys, th, omega0)
        m.append(transitions(sys, FieldOrientation(b, th))[0].matrix_element)
    return math.sqrt(m[0] / m[1])


def angles(cfg: Config, theta_grid=None, hyperfine: bool = True):
    if theta_grid is None:
        theta_grid = _grid(cfg["angles.theta_start"], cfg["angles.theta_stop"],
                           cfg.get_int("angles.n_points"))
    omega0 = cfg.resonator().omega0
    rows = []
    for th in np.asarray(theta_grid, float):
        for name, spin in ISOTOPES:
            if spin and not hyperfine:
                continue
            sys = cfg.spin_system(spin)
            for b, tr in resonance_fields(sys, float(th), omega0, (0.0, 0.6)):
                if not tr.nuclear_preserving:
                    continue
                g_rel = drive_factor(cfg, float(th)) if spin == 0 else None
                rows.append([round(math.degrees(th), 10), name,
                             "" if spin == 0 else tr.label, b * 1e3,
                             tr.matrix_element, g_rel])
    return Table(["theta_deg", "isotope", "transition_label", "B0_mT", "matrix_element",
                  "g_ens_rel"], rows, _meta(cfg, "angles"),
                 {"theta_deg": "deg", "B0_mT": "mT", "matrix_element": "1", "g_ens_rel": "1"})


def angles_svg(table: Table) -> str:
    th = np.array(table.column("theta_deg"), float)
    B = np.array(table.column("B0_mT"), float)
    iso = table.column("isotope")
    lab = table.column("transition_label")
    series = []
    for key in sorted({(i, str(l)) for i, l in zip(iso, lab)}):
        m = np.array([(i, str(l)) == key for i, l in zip(iso, lab)])
        name = key[0] if key[0] == "I=0" else f"m_I={key[1]}"
        series.append(Series(name, th[m], B[m], "points"))
    return plot(series, "theta (deg)", "B0 (mT)", "Resonance fields", logy=True)


# -------------------------------------------------------------------- rates

def rates(cfg: Config):
    p = cfg.relaxation()
    axis = cfg["sweep.axis"]
    if axis == "T":
        grid = _grid(cfg["sweep.T_start"], cfg["sweep.T_stop"], cfg.get_int("sweep.n_points"),
                     log=True)
        xname, scale, unit = "T_mK", 1e3, "mK"
    else:
        grid = _grid(cfg["sweep.B_start"], cfg["sweep.B_stop"], cfg.get_int("sweep.n_points"),
                     log=True)
        xname, scale, unit = "B_mT", 1e3, "mT"
    rows = [[x * scale, comp, rate, t1]
            for x, comp, rate, t1 in rate_rows(p, axis, grid, cfg["sweep.T_fixed"])]
    return Table([xname, "model_component", "rate_per_s", "T1_s"], rows,
                 _meta(cfg, "rates", axis=axis),
                 {xname: unit, "rate_per_s": "s^-1", "T1_s": "s"})


def rates_svg(table: Table) -> str:
    xname = table.columns[0]
    x = np.array(table.column(xname), float)
    comp = table.column("model_component")
    t1 = np.array(table.column("T1_s"), float)
    series = [Series(c, x[np.array([k == c for k in comp])], t1[np.array([k == c for k in comp])])
              for c in ("direct", "bottleneck", "slow", "flipflop")]
    return plot(series, xname.replace("_", " (") + ")", "T1 (s)", "Relaxation times",
                logx=True, logy=True)


# ----------------------------------------------------------------- simulate

def simulation_plan(cfg: Config, B0=None, t_pump=None, pump_rate=None, T_bath=None,
                    params: RelaxationParams | None = None) -> SimulationPlan:
    prm = params if params is not None else cfg.relaxation(B0)
    T = cfg["simulation.T_bath"] if T_bath is None else T_bath
    t_stop = cfg["simulation.t_stop"] or 8.0 * float(slow_time(prm, T))
    t_start = cfg["simulation.t_start"]
    grid = np.geomspace(t_start, max(t_stop, t_start * 10), cfg.get_int("simulation.n_points"))
    return SimulationPlan(
        params=prm, T_bath=T,
        pump_rate=cfg["simulation.pump_rate"] if pump_rate is None else pump_rate,
        t_pump=cfg["simulation.t_pump"] if t_pump is None else t_pump,
        t_grid=grid, rtol=cfg["simulation.rtol"])


def slow_constant(trace: Trace) -> fitting.FitResult:
    """Two-component fit of a recovery deficit; T2 is the slow constant."""
    return fitting.fit_multiexp(trace, 2, with_offset=False)


def run_simulation(cfg: Config, plan: SimulationPlan, fit: bool = True):
    res = simulate(plan)
    c = plan.params.c
    rows = [[float(t), float(n / c), float(p)] for t, n, p in zip(res.t, res.n, res.p)]
    table = Table(["time_s", "n_norm", "p_occ"], rows,
                  _meta(cfg, "simulate", B0_mT=plan.params.B0 * 1e3,
                        t_pump_s=plan.t_pump, T_bath_mK=plan.T_bath * 1e3),
                  {"time_s": "s", "n_norm": "1", "p_occ": "1"})
    sidecar = {"plan": plan.to_dict(), "config_sha256": cfg.digest,
               "linear_slow_time_s": float(slow_time(plan.params, plan.T_bath)),
               "pump_end": {"n_norm": res.pump_end.n / c, "p_occ": res.pump_end.p},
               "n_eq_norm": res.n_eq / c, "p_th": res.p_th,
               "integrator": res.stats}
    if fit and np.ptp(res.n) > 1e-12 * c:
        f = slow_constant(res.deficit())
        sidecar["fit"] = f.to_dict()
        sidecar["slow_constant_s"] = f.params["T2"]
    return res, table, sidecar


def pump_duration_study(cfg: Config, B0: float, t_pumps=(0.01, 3.0)) -> dict:
    """Slow constant of the simulated recovery for each pump duration."""
    out = {}
    for tp in t_pumps:
        plan = simulation_plan(cfg, B0=B0, t_pump=tp)
        out[tp] = slow_constant(simulate(plan).deficit()).params["T2"]
    return out


def simulation_svg(table: Table) -> str:
    t = np.array(table.column("time_s"), float)
    return plot([Series("n/c", t, np.array(table.column("n_norm"), float)),
                 Series("p", t, np.array(table.column("p_occ"), float))],
                "time (s)", "", "Recovery after the pump", logx=True)


# ---------------------------------------------------------------------- fit

def fit_trace(cfg: Config, kind: str, traces):
    """Dispatch a fit by data kind. ``traces`` is a list (several only for temperature)."""
    if kind == "decay":
        n, res = fitting.select_model_order(traces[0], cfg.get_int("fit.max_components"),
                                            cfg["fit.margin"])
        return res
    if kind == "sweep":
        g = effective_g(cfg.spin_system(0.0), cfg["spin_system.theta"])
        return fitting.fit_lorentzian_kappa(traces[0], g_eff=g)
    if kind == "temperature":
        return fitting.fit_temperature_model(traces, cfg.resonator().omega0)
    if kind == "power":
        return fitting.fit_power_law(traces[0])
    raise ValueError(f"unknown fit kind {kind!r}")


def predict(kind: str, res: fitting.FitResult, trace: Trace, index: int = 0,
            cfg: Config | None = None):
    p = res.params
    x = trace.x
    if kind == "decay":
        n = res.extras.get("n_components", 0)
        amps = [p[f"A{i + 1}"] for i in range(n)]
        consts = [p[f"T{i + 1}"] for i in range(n)]
        return fitting.multiexp_model(x, amps, consts, p.get("offset", 0.0))
    if kind == "sweep":
        if trace.axis_kind == "field":
            f = fitting.field_to_frequency_ghz(x, res.extras["g_eff"]) * 1e3
            center = float(fitting.field_to_frequency_ghz(p["center"], res.extras["g_eff"])) * 1e3
        else:
            f = x / (2 * math.pi) * 1e-6
            center = p["center"] / (2 * math.pi) * 1e-6
        return fitting.lorentzian_loss(f, p["g_ens_MHz"], p["gamma_inh_MHz"], center,
                                       p["baseline_MHz"])
    if kind == "temperature":
        key = "T1b0" if "T1b0" in p else f"T1b0_{index + 1}"
        omega0 = cfg.resonator().omega0
        return t1_slow_model(TemperatureModelParams(p["T1D0"], p[key], omega0), x)
    if kind == "power":
        return p["prefactor"] * x ** (-p["exponent"])
    raise ValueError(kind)


def residual_table(cfg: Config, kind: str, res, traces) -> Table:
    rows = []
    for i, tr in enumerate(traces):
        yhat = predict(kind, res, tr, i, cfg)
        for xv, yv, fv in zip(tr.x, tr.y, yhat):
            rows.append([i, float(xv), float(yv), float(fv), float(yv - fv)])
    return Table(["dataset", "x_si", "y", "model", "residual"], rows,
                 _meta(cfg, "fit", kind=kind, model_id=res.model_id))


# ---------------------------------------------------------------- fixtures

def decay_fixture(seed: int = 0, snr: float = 50.0) -> Table:
    tr = fixtures.triple_exp_trace(seed, snr=snr)
    return Table(["time_s", "amplitude"], [[float(a), float(b)] for a, b in zip(tr.x, tr.y)],
                 {"fixture": "triple-exponential recovery", "seed": seed, "snr": snr,
                  "constants_s": " ".join(repr(c) for c in fixtures.TRIPLE_EXP_CONSTANTS),
                  "weights": " ".join(repr(w) for w in fixtures.TRIPLE_EXP_WEIGHTS)},
                 {"time_s": "s", "amplitude": "1"})


def temperature_fixture(seed: int = 0, panel: int = 2, noise: float = 0.05) -> Table:
    tr = fixtures.temperature_panels(seed, noise=noise)[panel]
    rows = [[float(T) * 1e3, float(y), float(noise * y)] for T, y in zip(tr.x, tr.y)]
    return Table(["T_mK", "T1_s", "T1_err_s"], rows,
                 {"fixture": "slow time vs temperature", "seed": seed,
                  "T1D0_s": fixtures.PANEL_T1D0, "T1b0_s": fixtures.PANEL_T1B0[panel],
                  "noise": noise},
                 {"T_mK": "mK", "T1_s": "s", "T1_err_s": "s"})


# --------------------------------------------------------------- reproduce

def reproduce(figure: str, cfg: Config, seed: int = 0) -> dict:
    """Bundle for one figure: name -> Table, dict (JSON) or str (SVG)."""
    if figure == "fig2a":
        levels, marks = spectrum(replace_theta(cfg, 0.0))
        return {"levels": levels, "crossings": marks, "levels.svg": spectrum_svg(levels, marks)}
    if figure == "fig2c":
        table = angles(cfg, np.radians(np.arange(-90.0, 90.0 + 1e-9, 10.0)))
        return {"angles": table, "angles.svg": angles_svg(table)}
    if figure == "fig3b":
        return _reproduce_fig3b(cfg, seed)
    if figure == "fig4":
        return _reproduce_fig4(cfg, seed)
    raise ValueError(f"unknown figure {figure!r}; choose fig2a, fig2c, fig3b or fig4")


def replace_theta(cfg: Config, theta: float) -> Config:
    values = dict(cfg.values)
    values["spin_system.theta"] = theta
    return replace(cfg, values=values)


def _reproduce_fig3b(cfg: Config, seed: int):
    omega0 = cfg.resonator().omega0
    T = cfg["simulation.T_bath"]
    (B_a, T1_a), (B_b, T1_b) = FIELD_ANCHORS
    prm = RelaxationParams(alpha_D=alpha_from_anchor(T1_a, B_a, omega0, T), omega0=omega0)
    grid = np.geomspace(0.03, 0.3, 46)
    model = [1.0 / float(direct_rate(prm.with_field(float(b)), T)) for b in grid]
    curve = Table(["B_mT", "T1_s", "series"],
                  [[float(b) * 1e3, t, "B^2 law"] for b, t in zip(grid, model)],
                  _meta(cfg, "reproduce fig3b"), {"B_mT": "mT", "T1_s": "s"})
    anchors = Table(["B_mT", "T1_s"], [[b * 1e3, t] for b, t in FIELD_ANCHORS],
                    _meta(cfg, "reproduce fig3b", note="quoted anchor points"),
                    {"B_mT": "mT", "T1_s": "s"})
    two_point = fitting.fit_power_law(Trace(np.array([B_b, B_a]), np.array([T1_b, T1_a]),
                                            axis_kind="field"))
    syn_B = np.geomspace(0.038, 0.255, 12)
    syn_clean = np.array([1.0 / float(direct_rate(prm.with_field(float(b)), T)) for b in syn_B])
    syn_y = syn_clean * (1.0 + 0.1 * fixtures.normals(seed, syn_B.size))
    synthetic = fitting.fit_power_law(Trace(syn_B, syn_y, axis_kind="field"))
    syn_table = Table(["B_mT", "T1_s"], [[float(b) * 1e3, float(y)] for b, y in zip(syn_B, syn_y)],
                      _meta(cfg, "reproduce fig3b", seed=seed, noise="10% multiplicative"),
                      {"B_mT": "mT", "T1_s": "s"})
    predicted = 1.0 / float(direct_rate(prm.with_field(B_b), T))
    svg = plot([Series("B^2 law", grid * 1e3, np.array(model)),
                Series("anchors", np.array([B_a, B_b]) * 1e3, np.array([T1_a, T1_b]), "points"),
                Series("synthetic", syn_B * 1e3, syn_y, "points")],
               "B (mT)", "T1 slow (s)", "Field dependence", logx=True, logy=True)
    return {"field_curve": curve, "anchors": anchors, "synthetic": syn_table,
            "fit_two_point": {**two_point.to_dict(),
                              "predicted_B2_T1_at_38p5mT_s": predicted},
            "fit_synthetic": synthetic.to_dict(), "field.svg": svg}


def _reproduce_fig4(cfg: Config, seed: int):
    omega0 = cfg.resonator().omega0
    T = np.geomspace(0.01, 0.4, 60)
    rows = []
    series = []
    for name, b in PANEL_PARAMS.items():
        y = t1_slow_model(TemperatureModelParams(fixtures.PANEL_T1D0, b, omega0), T)
        rows.extend([float(t) * 1e3, name, float(v)] for t, v in zip(T, y))
        series.append(Series(f"{name} model", T * 1e3, y))
    curves = Table(["T_mK", "panel", "T1_s"], rows, _meta(cfg, "reproduce fig4"),
                   {"T_mK": "mK", "T1_s": "s"})
    panels = fixtures.temperature_panels(seed, omega0=omega0)
    syn_rows = []
    for name, tr in zip(PANEL_PARAMS, panels):
        syn_rows.extend([float(t) * 1e3, name, float(v)] for t, v in zip(tr.x, tr.y))
        series.append(Series(f"{name} synthetic", tr.x * 1e3, tr.y, "points"))
    synthetic = Table(["T_mK", "panel", "T1_s"], syn_rows,
                      _meta(cfg, "reproduce fig4", seed=seed, noise="5% multiplicative"),
                      {"T_mK": "mK", "T1_s": "s"})
    joint = fitting.fit_temperature_model(panels, omega0)
    direct_only = fitting.fit_temperature_model(panels, omega0, fix_T1b0_zero=True)
    svg = plot(series, "T (mK)", "T1 slow (s)", "Temperature dependence", logx=True)
    return {"model_curves": curves, "synthetic": synthetic, "fit_joint": joint.to_dict(),
            "fit_direct_only": direct_only.to_dict(), "temperature.svg": svg}
