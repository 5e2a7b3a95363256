"""Least-squares engine and the relaxation-analysis fit models.

The engine is a bounded Levenberg-Marquardt iteration with a central
difference Jacobian. Models built on it:

* ``fit_multiexp`` / ``select_model_order`` - sums of exponentials;
* ``fit_lorentzian_kappa`` - resonator loss vs detuning or field;
* ``fit_temperature_model`` - T1D0 tanh + T1b0 tanh^2, jointly over panels;
* ``fit_power_law`` - log-log regression of T1 against field.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import nnls

from .errors import DomainError, NotFoundError, RankDeficiencyError
from .hamiltonian import MU_B_GHZ_PER_T
from .physcore import TWO_PI, thermal_factor
from .trace import Trace

DIFF_STEP = 1e-6
XTOL = 1e-10
GTOL = 1e-12
MAX_ITER = 500
N_STARTS = 8
ORDER_MARGIN = 10.0


@dataclass(frozen=True)
class FitResult:
    model_id: str
    params: dict
    stderr: dict
    chi2_reduced: float
    n_iter: int
    converged: bool
    score: float
    rss: float = float("nan")
    n_points: int = 0
    covariance: np.ndarray | None = field(default=None, compare=False, repr=False)
    extras: dict = field(default_factory=dict, compare=False)

    def __getitem__(self, name):
        return self.params[name]

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, np.ndarray):
                return [clean(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            return v

        return {
            "model_id": self.model_id,
            "params": {k: {"value": clean(float(v)), "stderr": clean(float(self.stderr[k]))}
                       for k, v in self.params.items()},
            "chi2_reduced": clean(float(self.chi2_reduced)),
            "converged": bool(self.converged),
            "score": clean(float(self.score)),
            "n_iter": int(self.n_iter),
            "extras": clean(self.extras),
        }

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", False)
        return json.dumps(self.to_dict(), **kw)


# ---------------------------------------------------------------- engine

@dataclass
class _Solution:
    p: np.ndarray
    resid: np.ndarray
    jac: np.ndarray
    n_iter: int
    converged: bool


def _numeric_jacobian(fun, p, r0, lo, hi, step=DIFF_STEP):
    """Central differences with relative step ``step``, one-sided at a bound.

    Divisors are the exactly representable distances between the perturbed
    points, which removes the rounding of ``p +/- h`` from the derivative.
    """
    m, k = r0.size, p.size
    J = np.empty((m, k))
    for j in range(k):
        h = step * (abs(p[j]) or 1.0)
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        if up[j] > hi[j]:
            J[:, j] = (r0 - fun(dn)) / (p[j] - dn[j])
        elif dn[j] < lo[j]:
            J[:, j] = (fun(up) - r0) / (up[j] - p[j])
        else:
            J[:, j] = (fun(up) - fun(dn)) / (up[j] - dn[j])
    return J


def _rank_check(J):
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[-1] <= s[0] * max(J.shape) * np.finfo(float).eps:
        raise RankDeficiencyError("normal equations are singular: a parameter is not "
                                  "constrained by the data")


def lm_core(fun: Callable[[np.ndarray], np.ndarray], p0, lo=None, hi=None,
            max_iter: int = MAX_ITER, xtol: float = XTOL, gtol: float = GTOL) -> _Solution:
    """Minimise ``sum(fun(p)**2)`` inside the box [lo, hi].

    Trial points are projected onto the box. Stops on a relative step below
    ``xtol`` or a gradient norm below ``gtol``.
    """
    p = np.array(p0, dtype=float)
    k = p.size
    lo = np.full(k, -np.inf) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(k, np.inf) if hi is None else np.asarray(hi, dtype=float)
    if np.any(p < lo) or np.any(p > hi):
        raise DomainError("initial parameters outside bounds")
    r = np.asarray(fun(p), dtype=float)
    if r.size < k:
        raise DomainError("fewer data points than parameters")
    if not np.all(np.isfinite(r)):
        raise DomainError("model is not finite at the initial parameters")
    cost = r @ r
    J = _numeric_jacobian(fun, p, r, lo, hi)
    _rank_check(J)
    lam = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        g = J.T @ r
        if np.linalg.norm(g) < gtol:
            converged = True
            break
        A = J.T @ J
        d = np.maximum(np.diag(A), 1e-300)
        improved = small = False
        while lam < 1e20:
            try:
                delta = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(p + delta, lo, hi)
            step = trial - p
            r_t = np.asarray(fun(trial), dtype=float)
            c_t = r_t @ r_t if np.all(np.isfinite(r_t)) else np.inf
            if c_t <= cost:
                small = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
                p, r, cost = trial, r_t, c_t
                lam = max(lam / 10.0, 1e-12)
                improved = True
                break
            lam *= 10.0
            if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol):
                small = True
                break
        if not improved:
            converged = lam >= 1e20 or small
            break
        if small:
            converged = True
            break
        J = _numeric_jacobian(fun, p, r, lo, hi)
    return _Solution(p=p, resid=r, jac=J, n_iter=it, converged=converged)


def _covariance(J):
    A = J.T @ J
    try:
        cov = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(A)
    if not np.all(np.isfinite(cov)):
        cov = np.linalg.pinv(A)
    return cov


def information_score(rss_w: float, n: int, k: int, weighted: bool) -> float:
    """chi^2 + 2k with known sigma; n ln(RSS/n) + 2k otherwise."""
    if weighted:
        return rss_w + 2.0 * k
    return n * math.log(max(rss_w, 1e-300) / n) + 2.0 * k


def _summarise(model_id, names, sol: _Solution, n_points, weighted, fixed=None,
               extras=None) -> FitResult:
    k = sol.p.size
    rss = float(sol.resid @ sol.resid)
    dof = n_points - k
    chi2r = rss / dof if dof > 0 else float("nan")
    cov = _covariance(sol.jac)
    if not weighted:
        cov = cov * (chi2r if dof > 0 else 0.0)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    params = dict(zip(names, sol.p.tolist()))
    stderr = dict(zip(names, se.tolist()))
    for name, val in (fixed or {}).items():
        params[name] = float(val)
        stderr[name] = 0.0
    return FitResult(model_id=model_id, params=params, stderr=stderr, chi2_reduced=chi2r,
                     n_iter=sol.n_iter, converged=sol.converged,
                     score=information_score(rss, n_points, k, weighted), rss=rss,
                     n_points=n_points, covariance=cov, extras=dict(extras or {}))


def lm_fit(model: Callable, trace: Trace, initial_params, bounds=None, names=None,
           max_iter: int = MAX_ITER, model_id: str = "custom") -> FitResult:
    """Fit ``model(x, *params)`` to ``trace``.

    ``initial_params`` may be a mapping (names taken from it) or a sequence.
    ``bounds`` is a pair of sequences (lower, upper) or None. With
    ``trace.sigma`` set, residuals are weighted and stderr uses the sigmas
    as absolute; otherwise the covariance is scaled by the reduced chi^2.
    """
    if isinstance(initial_params, dict):
        names = list(initial_params)
        p0 = np.array([initial_params[n] for n in names], dtype=float)
    else:
        p0 = np.asarray(initial_params, dtype=float)
        names = list(names) if names is not None else [f"p{i}" for i in range(p0.size)]
    lo, hi = (None, None) if bounds is None else bounds
    x, y = trace.x, trace.y
    w = 1.0 / trace.sigma if trace.sigma is not None else np.ones_like(y)

    def fun(p):
        return (np.asarray(model(x, *p), dtype=float) - y) * w

    sol = lm_core(fun, p0, lo, hi, max_iter=max_iter)
    return _summarise(model_id, names, sol, y.size, trace.sigma is not None)


# ------------------------------------------------------ multi-exponential

def multiexp_model(t, amplitudes, constants, offset=0.0):
    t = np.asarray(t, dtype=float)[:, None]
    return offset + np.exp(-t / np.asarray(constants)[None, :]) @ np.asarray(amplitudes)


def _start_constants(x, n):
    pos = x[x > 0]
    t_lo, t_hi = float(pos[0]), float(x[-1])
    span = math.log(t_hi / t_lo)
    if n == 1:
        return [np.array([c]) for c in np.geomspace(t_lo, t_hi, N_STARTS)]
    shifts = (0.0, 0.15, 0.3)
    combos = [(a, b) for a in shifts for b in shifts][:N_STARTS]
    return [np.geomspace(t_lo * math.exp(a * span), t_hi * math.exp(-b * span), n)
            for a, b in combos]


def _initial_amplitudes(x, y, w, constants, with_offset, nonneg):
    cols = [np.exp(-x / c) for c in constants]
    if with_offset:
        cols.append(np.ones_like(x))
    M = np.column_stack(cols) * w[:, None]
    if nonneg:
        coef, _ = nnls(M, y * w)
        if with_offset:  # nnls would also clamp the offset
            coef = np.linalg.lstsq(M, y * w, rcond=None)[0]
            coef[:-1] = np.maximum(coef[:-1], 0.0)
    else:
        coef = np.linalg.lstsq(M, y * w, rcond=None)[0]
    amps = coef[:len(constants)]
    off = coef[-1] if with_offset else 0.0
    scale = max(np.max(np.abs(y)), 1e-300)
    amps = np.where(np.abs(amps) < 1e-6 * scale, 1e-3 * scale, amps)
    return amps, off


def fit_multiexp(trace: Trace, n_components: int, with_offset: bool = True,
                 nonneg: bool = True, parametrization: str = "time",
                 max_iter: int = MAX_ITER) -> FitResult:
    """y(t) = y_inf + sum_k A_k exp(-t/T_k), best of 8 deterministic starts.

    ``parametrization="rate"`` fits k_k = 1/T_k instead; results are always
    reported as time constants in ascending order with percentage weights.
    """
    if n_components not in (0, 1, 2, 3):
        raise DomainError("n_components must be 0, 1, 2 or 3")
    if parametrization not in ("time", "rate"):
        raise DomainError("parametrization must be 'time' or 'rate'")
    x, y = trace.x, trace.y
    k_par = 2 * n_components + (1 if with_offset else 0)
    if k_par == 0 or k_par > x.size:
        raise DomainError("not enough points for the requested model")
    weighted = trace.sigma is not None
    w = 1.0 / trace.sigma if weighted else np.ones_like(y)
    n = n_components
    if n == 0:
        return _fit_offset_only(trace, weighted, w)

    pos_dt = np.diff(x).min()
    t_min = max(min(x[x > 0].min() if np.any(x > 0) else pos_dt, pos_dt) * 1e-3, 1e-300)
    t_max = (x[-1] - x[0] + x[-1]) * 1e3
    amp_lo = 0.0 if nonneg else -np.inf

    def unpack(p):
        amps, q = p[:n], p[n:2 * n]
        consts = q if parametrization == "time" else 1.0 / q
        return amps, consts, (p[2 * n] if with_offset else 0.0)

    def fun(p):
        amps, consts, off = unpack(p)
        return (multiexp_model(x, amps, consts, off) - y) * w

    lo = [amp_lo] * n + ([t_min] * n if parametrization == "time" else [1.0 / t_max] * n)
    hi = [np.inf] * n + ([t_max] * n if parametrization == "time" else [1.0 / t_min] * n)
    if with_offset:
        lo.append(-np.inf)
        hi.append(np.inf)

    best = None
    failures = 0
    for consts in _start_constants(x, n):
        amps, off = _initial_amplitudes(x, y, w, consts, with_offset, nonneg)
        q = consts if parametrization == "time" else 1.0 / consts
        p0 = np.concatenate([amps, q, [off] if with_offset else []])
        p0 = np.clip(p0, lo, hi)
        try:
            sol = lm_core(fun, p0, lo, hi, max_iter=max_iter)
        except RankDeficiencyError:
            failures += 1
            continue
        cost = sol.resid @ sol.resid
        if best is None or cost < best[0] - 1e-14 * abs(cost):
            best = (cost, sol)
    if best is None:
        raise RankDeficiencyError("every start produced singular normal equations")
    sol = best[1]

    amps, consts, off = unpack(sol.p)
    order = np.argsort(consts)
    # Reorder parameters (and the Jacobian columns) so T1 < T2 < T3.
    perm = np.concatenate([order, n + order, [2 * n] if with_offset else []]).astype(int)
    jac = sol.jac[:, perm].copy()
    p_sorted = sol.p[perm].copy()
    if parametrization == "rate":
        # Delta-method transform k -> T = 1/k on the rate columns.
        k_vals = p_sorted[n:2 * n]
        jac[:, n:2 * n] = jac[:, n:2 * n] * (-(k_vals ** 2))[None, :]
        p_sorted[n:2 * n] = 1.0 / k_vals
    sol = _Solution(p=p_sorted, resid=sol.resid, jac=jac, n_iter=sol.n_iter,
                    converged=sol.converged)
    names = [f"A{i + 1}" for i in range(n)] + [f"T{i + 1}" for i in range(n)]
    if with_offset:
        names.append("offset")
    amps = p_sorted[:n]
    consts = p_sorted[n:2 * n]
    total = amps.sum()
    weights = (100.0 * amps / total).tolist() if total != 0 else [float("nan")] * n
    raw = amps.tolist()
    degenerate = bool(np.any(consts[1:] / consts[:-1] < 1.01)) if n > 1 else False
    extras = {"weights_percent": weights, "amplitudes_raw": raw, "degenerate": degenerate,
              "n_components": n, "with_offset": with_offset,
              "parametrization": parametrization, "failed_starts": failures}
    res = _summarise(f"multiexp{n}", names, sol, y.size, weighted, extras=extras)
    return res


def _fit_offset_only(trace, weighted, w):
    y = trace.y
    ww = w ** 2
    off = float((ww * y).sum() / ww.sum())
    resid = (y - off) * w
    jac = -w[:, None]
    sol = _Solution(p=np.array([off]), resid=resid, jac=jac, n_iter=0, converged=True)
    return _summarise("multiexp0", ["offset"], sol, y.size, weighted,
                      extras={"weights_percent": [], "amplitudes_raw": [],
                              "degenerate": False, "n_components": 0,
                              "with_offset": True, "parametrization": "time",
                              "failed_starts": 0})


def select_model_order(trace: Trace, max_components: int = 3,
                       margin: float = ORDER_MARGIN, with_offset: bool = True,
                       nonneg: bool = True):
    """Smallest n not beaten by n + 1 by more than ``margin`` in score.

    Returns ``(n, FitResult)``; ``FitResult.extras["scores"]`` lists the score of
    every order tried. Selecting n = 0 (offset only) issues a warning.
    """
    fits = {}
    scores = []
    for n in range(0, max_components + 1):
        if n == 0 and not with_offset:
            scores.append(math.inf)
            continue
        try:
            fits[n] = fit_multiexp(trace, n, with_offset=with_offset, nonneg=nonneg)
            scores.append(fits[n].score)
        except (RankDeficiencyError, DomainError):
            scores.append(math.inf)
    chosen = max_components
    for n in range(0, max_components):
        if scores[n + 1] < scores[n] - margin:
            continue
        if math.isinf(scores[n]):
            continue
        chosen = n
        break
    while chosen not in fits:
        chosen -= 1
        if chosen < 0:
            raise RankDeficiencyError("no model order could be fitted")
    res = fits[chosen]
    extras = dict(res.extras)
    extras["scores"] = scores
    extras["margin"] = margin
    warn = []
    if chosen == 0:
        msg = "no decay structure above the noise: offset-only model selected"
        warnings.warn(msg, stacklevel=2)
        warn.append(msg)
    extras["warnings"] = warn
    return chosen, FitResult(**{**res.__dict__, "extras": extras})


# -------------------------------------------------------------- Lorentzian

def lorentzian_loss(f, g_ens, gamma, center, baseline):
    """baseline + g^2 Gamma / ((f - f_s)^2 + (Gamma/2)^2), all cyclic, same unit."""
    return baseline + g_ens ** 2 * gamma / ((f - center) ** 2 + (gamma / 2.0) ** 2)


def field_to_frequency_ghz(B, g_eff: float):
    """Cyclic spin frequency [GHz] of the I=0 line at field ``B`` [T]."""
    return g_eff * MU_B_GHZ_PER_T * np.asarray(B, dtype=float)


def _noise_floor(y, sigma):
    if sigma is not None:
        return float(np.median(sigma))
    d = np.diff(y)
    mad = np.median(np.abs(d - np.median(d)))
    return float(1.4826 * mad / math.sqrt(2.0))


def fit_lorentzian_kappa(trace: Trace, g_eff: float | None = None) -> FitResult:
    """Fit the spin-induced resonator loss.

    ``trace.y`` is kappa/2pi in MHz. A ``frequency`` axis is angular [rad/s];
    a ``field`` axis [T] is mapped to frequency with the I=0 slope
    ``g_eff mu_B / h`` (``g_eff`` required). g_ens and Gamma_inh are reported
    as cyclic MHz; ``center`` is in the trace's own axis unit.
    """
    if trace.axis_kind == "field":
        if g_eff is None or g_eff <= 0:
            raise DomainError("field traces need a positive g_eff")
        f = field_to_frequency_ghz(trace.x, g_eff) * 1e3
        to_axis = 1e-3 / (g_eff * MU_B_GHZ_PER_T)
    elif trace.axis_kind == "frequency":
        f = trace.x / TWO_PI * 1e-6
        to_axis = TWO_PI * 1e6
    else:
        raise DomainError("trace must have a field or frequency axis")
    y = trace.y
    f_ref = float(f[np.argmax(y)])
    fr = f - f_ref  # MHz relative to the peak keeps the center well scaled
    edge = max(2, y.size // 10)
    baseline0 = float(np.median(np.concatenate([y[:edge], y[-edge:]])))
    height = float(y.max() - baseline0)
    noise = _noise_floor(y, trace.sigma)
    if height <= 3.0 * noise or height <= 0:
        raise NotFoundError("no resonance above three times the noise floor")
    above = fr[y - baseline0 >= 0.5 * height]
    fwhm = max(float(above.max() - above.min()), float(np.min(np.diff(fr))) * 2)
    g0 = math.sqrt(height * fwhm / 4.0)
    w = 1.0 / trace.sigma if trace.sigma is not None else np.ones_like(y)

    def fun(p):
        return (lorentzian_loss(fr, *p) - y) * w

    p0 = [g0, fwhm, 0.0, baseline0]
    lo = [0.0, 1e-9, fr.min(), -np.inf]
    hi = [np.inf, np.inf, fr.max(), np.inf]
    sol = lm_core(fun, p0, lo, hi)
    res = _summarise("lorentzian_kappa", ["g_ens_MHz", "gamma_inh_MHz", "center", "baseline_MHz"],
                     sol, y.size, trace.sigma is not None)
    params, stderr = dict(res.params), dict(res.stderr)
    params["center"] = (params["center"] + f_ref) * to_axis
    stderr["center"] = stderr["center"] * abs(to_axis)
    peak = 4.0 * params["g_ens_MHz"] ** 2 / params["gamma_inh_MHz"]
    extras = {"peak_MHz": peak, "axis_kind": trace.axis_kind, "g_eff": g_eff}
    return FitResult(**{**res.__dict__, "params": params, "stderr": stderr, "extras": extras})


# -------------------------------------------------------- temperature model

def fit_temperature_model(traces: Trace | Sequence[Trace], omega0: float,
                          fix_T1b0_zero: bool = False, T1D0_fixed: float | None = None,
                          weighting: str = "relative") -> FitResult:
    """Joint fit of T1D0 tanh(x) + T1b0 tanh(x)^2 over one or more panels.

    All panels share T1D0 (or use ``T1D0_fixed``); each has its own T1b0,
    named ``T1b0`` for a single panel and ``T1b0_1``... otherwise.
    ``fix_T1b0_zero`` gives the direct-process-only variant. Without sigma,
    ``weighting="relative"`` weights residuals by 1/y (multiplicative
    noise); ``"none"`` leaves them unweighted.
    """
    panels = [traces] if isinstance(traces, Trace) else list(traces)
    if not panels:
        raise DomainError("no data")
    if weighting not in ("relative", "none"):
        raise DomainError("weighting must be 'relative' or 'none'")
    for tr in panels:
        if tr.x.size < 4:
            raise DomainError("need at least 4 temperature points per panel")
        if np.any(tr.x <= 0):
            raise DomainError("temperatures must be positive")
    th = [thermal_factor("tanh", omega0, tr.x) for tr in panels]
    ys = [tr.y for tr in panels]
    weighted = all(tr.sigma is not None for tr in panels)
    if weighted:
        ws = [1.0 / tr.sigma for tr in panels]
    elif weighting == "relative":
        ws = [1.0 / np.abs(tr.y) for tr in panels]
    else:
        ws = [np.ones_like(tr.y) for tr in panels]
    m = len(panels)
    fit_D = T1D0_fixed is None
    fit_b = not fix_T1b0_zero

    def unpack(p):
        i = 0
        D = p[0] if fit_D else T1D0_fixed
        i += int(fit_D)
        bs = p[i:i + m] if fit_b else np.zeros(m)
        return D, bs

    def fun(p):
        D, bs = unpack(p)
        return np.concatenate([(D * t + b * t * t - y) * w
                               for t, y, w, b in zip(th, ys, ws, bs)])

    # Linear model in (T1D0, T1b0_i): least squares gives the start.
    p0 = []
    if fit_D:
        p0.append(max(float(np.median(np.concatenate(ys))) / 2, 1e-6))
    if fit_b:
        p0 += [max(float(np.median(y)) / 2, 1e-6) for y in ys]
    p0 = np.array(p0)
    lo = np.concatenate([[1e-12] if fit_D else [], np.zeros(m) if fit_b else []])
    hi = np.full(p0.size, np.inf)
    if p0.size == 0:
        raise DomainError("nothing left to fit")
    sol = lm_core(fun, p0, lo, hi)
    names = (["T1D0"] if fit_D else []) + (
        (["T1b0"] if m == 1 else [f"T1b0_{i + 1}" for i in range(m)]) if fit_b else [])
    fixed = {}
    if not fit_D:
        fixed["T1D0"] = T1D0_fixed
    if not fit_b:
        fixed.update({"T1b0": 0.0} if m == 1 else {f"T1b0_{i + 1}": 0.0 for i in range(m)})
    n_points = sum(y.size for y in ys)
    return _summarise("temperature_model", names, sol, n_points, weighted, fixed=fixed,
                      extras={"panels": m, "weighting": "sigma" if weighted else weighting})


# ---------------------------------------------------------------- power law

def fit_power_law(trace: Trace) -> FitResult:
    """T1 = prefactor * B^(-exponent) by log-log linear regression.

    The exponent is reported with the sign convention of a rate growing as
    B^exponent, so pure direct-process data gives +2.
    """
    x, y = trace.x, trace.y
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law fit needs positive abscissa and ordinate")
    if x.size < 2:
        raise DomainError("need at least two points")
    lx, ly = np.log(x), np.log(y)
    if trace.sigma is not None:
        w = y / trace.sigma  # d ln y = sigma / y
    else:
        w = np.ones_like(y)
    M = np.column_stack([np.ones_like(lx), lx]) * w[:, None]
    coef, *_ = np.linalg.lstsq(M, ly * w, rcond=None)
    resid = M @ coef - ly * w
    dof = x.size - 2
    rss = float(resid @ resid)
    cov = np.linalg.inv(M.T @ M)
    if trace.sigma is None:
        cov = cov * (rss / dof if dof > 0 else 0.0)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    a, slope = coef
    params = {"exponent": float(-slope), "prefactor": float(math.exp(a))}
    stderr = {"exponent": float(se[1]), "prefactor": float(math.exp(a) * se[0])}
    chi2r = rss / dof if dof > 0 else float("nan")
    extras = {}
    if abs(-slope - 2.0) > 2.0 * max(se[1], 1e-3):
        extras["note"] = (f"exponent {-slope:.3f} deviates from the B^2 law of the direct "
                          "process; field-angle anisotropy of the spin-lattice coupling "
                          "is outside the model")
    return FitResult(model_id="power_law", params=params, stderr=stderr, chi2_reduced=chi2r,
                     n_iter=1, converged=True,
                     score=information_score(rss, x.size, 2, trace.sigma is not None),
                     rss=rss, n_points=x.size, covariance=cov, extras=extras)


def durbin_watson(resid) -> float:
    r = np.asarray(resid, dtype=float)
    return float(np.sum(np.diff(r) ** 2) / np.sum(r ** 2))
