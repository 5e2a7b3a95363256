"""Flat ``section.key = value unit`` configuration files.

Every numeric entry carries a unit suffix from :data:`besr.physcore.UNITS`
(``1`` for dimensionless numbers); a missing or wrong-dimension unit is a
parse error. A few keys take a bare word from a fixed set instead. Unknown
keys are rejected. Errors carry 1-based line and column numbers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DomainError
from .hamiltonian import SpinSystem
from .physcore import TWO_PI, UNITS, Dim
from .rates import RelaxationParams
from .dynamics import anchored_params

# key -> (dimension or tuple of allowed words, default in SI or None if required)
SCHEMA = {
    "spin_system.g_perp": (Dim.DIMENSIONLESS, None),
    "spin_system.g_par": (Dim.DIMENSIONLESS, None),
    "spin_system.hyperfine_A_perp": (Dim.FREQUENCY, None),
    "spin_system.hyperfine_A_par": (Dim.FREQUENCY, None),
    "spin_system.abundance_167": (Dim.DIMENSIONLESS, 0.22),
    "spin_system.spin_density": (Dim.DENSITY, 5e23),
    "spin_system.nuclear_zeeman": (("off", "on"), "off"),
    "spin_system.theta": (Dim.DIMENSIONLESS, 0.0),
    "resonator.f0": (Dim.FREQUENCY, None),
    "resonator.kappa_c": (Dim.FREQUENCY, None),
    "resonator.kappa_i": (Dim.FREQUENCY, None),
    "relaxation.T1_anchor": (Dim.TIME, 1.2),
    "relaxation.B_anchor": (Dim.FIELD, 0.254),
    "relaxation.B0": (Dim.FIELD, 0.254),
    "relaxation.tau_ph": (Dim.TIME, 5.0),
    "relaxation.T1b0": (Dim.TIME, 5.0),
    "relaxation.v": (Dim.SPEED, 3000.0),
    "relaxation.gamma_inh": (Dim.FREQUENCY, 28e6),
    "relaxation.d": (Dim.LENGTH, 2e-4),
    "relaxation.xi": (Dim.DIMENSIONLESS, 8.38 ** 4 / 20.0),
    "relaxation.alpha_ff": (Dim.DIMENSIONLESS, 1.0),
    "relaxation.gamma_units": (("angular", "cyclic"), "angular"),
    "relaxation.g0": (Dim.FREQUENCY, 20.0),
    "simulation.T_bath": (Dim.TEMPERATURE, 0.02),
    "simulation.pump_rate": (Dim.RATE, 1e3),
    "simulation.t_pump": (Dim.TIME, 3.0),
    "simulation.t_start": (Dim.TIME, 1e-3),
    "simulation.t_stop": (Dim.TIME, 0.0),
    "simulation.n_points": (Dim.DIMENSIONLESS, 200.0),
    "simulation.rtol": (Dim.DIMENSIONLESS, 1e-8),
    "fit.margin": (Dim.DIMENSIONLESS, 10.0),
    "fit.max_components": (Dim.DIMENSIONLESS, 3.0),
    "fit.snr": (Dim.DIMENSIONLESS, 50.0),
    "sweep.axis": (("T", "B"), "T"),
    "sweep.T_start": (Dim.TEMPERATURE, 0.01),
    "sweep.T_stop": (Dim.TEMPERATURE, 1.0),
    "sweep.B_start": (Dim.FIELD, 0.03),
    "sweep.B_stop": (Dim.FIELD, 0.3),
    "sweep.n_points": (Dim.DIMENSIONLESS, 41.0),
    "sweep.T_fixed": (Dim.TEMPERATURE, 0.02),
    "spectrum.B_start": (Dim.FIELD, 0.0),
    "spectrum.B_stop": (Dim.FIELD, 0.4),
    "spectrum.n_points": (Dim.DIMENSIONLESS, 401.0),
    "angles.theta_start": (Dim.DIMENSIONLESS, -math.pi / 2),
    "angles.theta_stop": (Dim.DIMENSIONLESS, math.pi / 2),
    "angles.n_points": (Dim.DIMENSIONLESS, 19.0),
}

INTEGER_KEYS = {"simulation.n_points", "fit.max_components", "sweep.n_points",
                "spectrum.n_points", "angles.n_points"}


@dataclass(frozen=True)
class ResonatorConfig:
    f0: float  # Hz, cyclic
    kappa_c: float  # Hz, cyclic
    kappa_i: float  # Hz, cyclic

    def __post_init__(self):
        if min(self.f0, self.kappa_c, self.kappa_i) <= 0:
            raise DomainError("resonator frequencies and loss rates must be positive")

    @property
    def omega0(self) -> float:
        return TWO_PI * self.f0

    @property
    def kappa(self) -> float:
        """Total loss rate, angular."""
        return TWO_PI * (self.kappa_c + self.kappa_i)


@dataclass(frozen=True)
class Config:
    values: dict  # key -> SI value or word
    source: str = "<string>"
    explicit: frozenset = field(default_factory=frozenset)

    def __getitem__(self, key):
        return self.values[key]

    def get_int(self, key) -> int:
        return int(round(self.values[key]))

    @property
    def digest(self) -> str:
        """Hash of the resolved configuration (independent of layout/comments)."""
        lines = [f"{k}={self.values[k]!r}" for k in sorted(self.values)]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]

    def spin_system(self, nuclear_spin: float = 0.0) -> SpinSystem:
        v = self.values
        abundance = v["spin_system.abundance_167"]
        return SpinSystem(
            g_perp=v["spin_system.g_perp"], g_par=v["spin_system.g_par"],
            nuclear_spin=nuclear_spin,
            hyperfine_A_perp=v["spin_system.hyperfine_A_perp"] / 1e6,
            hyperfine_A_par=v["spin_system.hyperfine_A_par"] / 1e6,
            isotope_abundance=abundance if nuclear_spin else 1.0 - abundance,
            spin_density=v["spin_system.spin_density"],
            nuclear_zeeman=v["spin_system.nuclear_zeeman"] == "on")

    def resonator(self) -> ResonatorConfig:
        v = self.values
        return ResonatorConfig(v["resonator.f0"], v["resonator.kappa_c"], v["resonator.kappa_i"])

    def relaxation(self, B0: float | None = None) -> RelaxationParams:
        v = self.values
        return anchored_params(
            B0=v["relaxation.B0"] if B0 is None else B0,
            T1_anchor=v["relaxation.T1_anchor"], B_anchor=v["relaxation.B_anchor"],
            tau_ph=v["relaxation.tau_ph"], T1b0=v["relaxation.T1b0"],
            omega0=self.resonator().omega0, v=v["relaxation.v"],
            gamma_inh=TWO_PI * v["relaxation.gamma_inh"], d=v["relaxation.d"],
            xi=v["relaxation.xi"], alpha_ff=v["relaxation.alpha_ff"],
            gamma_units=v["relaxation.gamma_units"])


def _error(msg, line, col, source):
    return ConfigError(msg, line=line, column=col, source=source)


def parse_config(text: str, source: str = "<string>") -> Config:
    values = {k: d for k, (_, d) in SCHEMA.items()}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise _error("expected 'section.key = value unit'", lineno, col, source)
        lhs, rhs = body.split("=", 1)
        key = lhs.strip()
        key_col = len(lhs) - len(lhs.lstrip()) + 1
        if key.count(".") != 1 or not all(key.split(".")):
            raise _error(f"key {key!r} must have the form section.key", lineno, key_col, source)
        if key not in SCHEMA:
            raise _error(f"unknown key {key!r}", lineno, key_col, source)
        if key in seen:
            raise _error(f"duplicate key {key!r} (first set on line {seen[key]})",
                         lineno, key_col, source)
        seen[key] = lineno
        rhs_col = len(lhs) + 2
        tokens = rhs.split()
        offsets = []
        pos = 0
        for tok in tokens:
            pos = rhs.index(tok, pos)
            offsets.append(rhs_col + pos)
            pos += len(tok)
        kind, _ = SCHEMA[key]
        if not tokens:
            raise _error(f"missing value for {key!r}", lineno, rhs_col, source)
        if isinstance(kind, tuple):
            if len(tokens) != 1 or tokens[0] not in kind:
                raise _error(f"{key!r} must be one of {', '.join(kind)}", lineno, offsets[0], source)
            values[key] = tokens[0]
            continue
        try:
            number = float(tokens[0])
        except ValueError:
            raise _error(f"not a number: {tokens[0]!r}", lineno, offsets[0], source) from None
        if not math.isfinite(number):
            raise _error("value must be finite", lineno, offsets[0], source)
        if len(tokens) == 1:
            raise _error(f"missing unit for {key!r} (expected a {kind.value} unit)",
                         lineno, offsets[0] + len(tokens[0]), source)
        if len(tokens) > 2:
            raise _error("trailing text after unit", lineno, offsets[2], source)
        unit = tokens[1]
        if unit not in UNITS:
            raise _error(f"unknown unit {unit!r}", lineno, offsets[1], source)
        dim, factor = UNITS[unit]
        if dim is not kind:
            raise _error(f"unit {unit!r} is not a {kind.value} unit", lineno, offsets[1], source)
        if key in INTEGER_KEYS and (number != int(number) or number < 1):
            raise _error(f"{key!r} must be a positive integer", lineno, offsets[0], source)
        values[key] = number * factor
    missing = [k for k, (_, d) in SCHEMA.items() if d is None and k not in seen]
    if missing:
        raise _error(f"missing required keys: {', '.join(missing)}", None, None, source)
    cfg = Config(values=values, source=source, explicit=frozenset(seen))
    try:
        cfg.resonator()
        cfg.spin_system()
    except DomainError as exc:
        raise _error(str(exc), None, None, source) from None
    return cfg


def load_config(path) -> Config:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(p)) from None
    return parse_config(text, source=str(p))


def default_config_text() -> str:
    from importlib.resources import files
    return files("besr").joinpath("data/default.conf").read_text(encoding="utf-8")
