"""Seeded synthetic data sets used by tests, the CLI and the figure bundles.

Noise comes from a counter-based generator that any language can
reproduce bit for bit:

* Philox4x64-10 keyed directly with ``key = (seed, 0)``, counter starting
  at zero (``numpy.random.Philox(key=seed)``);
* each raw 64-bit word ``w`` becomes ``u = (w >> 11) * 2**-53`` in [0, 1);
* standard normals use Box-Muller on consecutive pairs ``(u1, u2)``:
  ``z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``, one normal per pair.
"""

from __future__ import annotations

import numpy as np

from .physcore import TWO_PI
from .rates import OMEGA0_DEFAULT, TemperatureModelParams, t1_slow_model
from .trace import Trace

# Recovery-curve constants and weights of the three-component decay.
TRIPLE_EXP_CONSTANTS = (10.7e-3, 298e-3, 2.2)
TRIPLE_EXP_WEIGHTS = (0.13, 0.41, 0.46)
TEMPERATURE_GRID_MK = (20.0, 50.0, 100.0, 150.0, 200.0, 300.0)
PANEL_T1D0 = 1.2
PANEL_T1B0 = (0.25, 0.9, 1.95)


def uniforms(seed: int, n: int) -> np.ndarray:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    bits = np.random.Philox(key=int(seed)).random_raw(n)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def normals(seed: int, n: int) -> np.ndarray:
    u = uniforms(seed, 2 * n).reshape(n, 2)
    return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(TWO_PI * u[:, 1])


def triple_exp_trace(seed: int, snr: float = 50.0, n_points: int = 200,
                     t_span=(1e-3, 10.0), constants=TRIPLE_EXP_CONSTANTS,
                     weights=TRIPLE_EXP_WEIGHTS) -> Trace:
    """Saturation-recovery deficit with unit total amplitude.

    Gaussian noise has standard deviation ``1/snr`` (relative to the
    total amplitude) on log-spaced times.
    """
    t = np.geomspace(t_span[0], t_span[1], n_points)
    clean = sum(w * np.exp(-t / c) for w, c in zip(weights, constants))
    y = clean + normals(seed, n_points) / snr
    return Trace(t, y, axis_kind="time",
                 meta={"seed": seed, "snr": snr, "constants": list(constants),
                       "weights": list(weights)})


def temperature_panels(seed: int, noise: float = 0.05, T1D0: float = PANEL_T1D0,
                       T1b0s=PANEL_T1B0, grid_mK=TEMPERATURE_GRID_MK,
                       omega0: float = OMEGA0_DEFAULT) -> list[Trace]:
    """T1_slow(T) panels sharing T1D0, with multiplicative Gaussian noise."""
    T = np.asarray(grid_mK, dtype=float) * 1e-3
    z = normals(seed, T.size * len(T1b0s)).reshape(len(T1b0s), T.size)
    out = []
    for i, b in enumerate(T1b0s):
        clean = t1_slow_model(TemperatureModelParams(T1D0, b, omega0), T)
        out.append(Trace(T, clean * (1.0 + noise * z[i]), axis_kind="temperature",
                         meta={"seed": seed, "T1D0": T1D0, "T1b0": b}))
    return out
