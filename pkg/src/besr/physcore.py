"""Physical constants, dimension-tagged scalars and thermal factors.

Everything inside the toolkit runs in SI units with angular frequencies.
User-facing strings such as ``"4.44 GHz"`` or ``"20 mK"`` are converted on
ingest by :func:`parse_quantity`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as sc

from .errors import DomainError

TWO_PI = 2.0 * math.pi

# Above this value of x, coth(x) == 1 and sech^2(x) == 0 in double precision.
SATURATION_X = 350.0


@dataclass(frozen=True)
class Constants:
    """CODATA constants in SI units."""

    mu_B: float = sc.physical_constants["Bohr magneton"][0]  # J/T
    hbar: float = sc.hbar  # J s
    k_B: float = sc.k  # J/K
    h: float = sc.h  # J s

    def __post_init__(self):
        if not math.isclose(self.h, TWO_PI * self.hbar, rel_tol=1e-15):
            raise DomainError("h must equal 2*pi*hbar")


CONSTANTS = Constants()


class Dim(enum.Enum):
    ANGULAR_FREQUENCY = "rad/s"
    FREQUENCY = "Hz"
    FIELD = "T"
    TEMPERATURE = "K"
    TIME = "s"
    LENGTH = "m"
    DENSITY = "m^-3"
    SPEED = "m/s"
    RATE = "s^-1"
    DIMENSIONLESS = "1"


# unit suffix -> (dimension, factor to the SI unit of that dimension)
UNITS = {
    "rad/s": (Dim.ANGULAR_FREQUENCY, 1.0),
    "Hz": (Dim.FREQUENCY, 1.0),
    "kHz": (Dim.FREQUENCY, 1e3),
    "MHz": (Dim.FREQUENCY, 1e6),
    "GHz": (Dim.FREQUENCY, 1e9),
    "T": (Dim.FIELD, 1.0),
    "mT": (Dim.FIELD, 1e-3),
    "uT": (Dim.FIELD, 1e-6),
    "K": (Dim.TEMPERATURE, 1.0),
    "mK": (Dim.TEMPERATURE, 1e-3),
    "s": (Dim.TIME, 1.0),
    "ms": (Dim.TIME, 1e-3),
    "us": (Dim.TIME, 1e-6),
    "ns": (Dim.TIME, 1e-9),
    "m": (Dim.LENGTH, 1.0),
    "mm": (Dim.LENGTH, 1e-3),
    "um": (Dim.LENGTH, 1e-6),
    "m^-3": (Dim.DENSITY, 1.0),
    "cm^-3": (Dim.DENSITY, 1e6),
    "m/s": (Dim.SPEED, 1.0),
    "s^-1": (Dim.RATE, 1.0),
    "1/s": (Dim.RATE, 1.0),
    "1": (Dim.DIMENSIONLESS, 1.0),
    "deg": (Dim.DIMENSIONLESS, math.pi / 180.0),
    "rad": (Dim.DIMENSIONLESS, 1.0),
}


@dataclass(frozen=True, order=False)
class Quantity:
    """A real value tagged with a physical dimension (SI magnitude)."""

    value: float
    dim: Dim

    def _check(self, other):
        if not isinstance(other, Quantity):
            raise TypeError(f"cannot combine Quantity with {type(other).__name__}")
        if other.dim is not self.dim:
            raise DomainError(f"dimension mismatch: {self.dim.name} vs {other.dim.name}")

    def __add__(self, other):
        self._check(other)
        return Quantity(self.value + other.value, self.dim)

    def __sub__(self, other):
        self._check(other)
        return Quantity(self.value - other.value, self.dim)

    def __mul__(self, k):
        if isinstance(k, Quantity):
            raise TypeError("Quantity products are not supported")
        return Quantity(self.value * k, self.dim)

    __rmul__ = __mul__

    def __truediv__(self, k):
        if isinstance(k, Quantity):
            self._check(k)
            return self.value / k.value
        return Quantity(self.value / k, self.dim)

    def __neg__(self):
        return Quantity(-self.value, self.dim)

    def __lt__(self, other):
        self._check(other)
        return self.value < other.value

    def __le__(self, other):
        self._check(other)
        return self.value <= other.value

    def to(self, unit: str) -> float:
        """Magnitude expressed in ``unit`` (which must share the dimension)."""
        dim, factor = _lookup(unit)
        if dim is not self.dim:
            raise DomainError(f"cannot express {self.dim.name} in {unit}")
        return self.value / factor

    def to_angular(self) -> "Quantity":
        if self.dim is Dim.ANGULAR_FREQUENCY:
            return self
        if self.dim is not Dim.FREQUENCY:
            raise DomainError(f"{self.dim.name} is not a frequency")
        return Quantity(self.value * TWO_PI, Dim.ANGULAR_FREQUENCY)

    def to_cyclic(self) -> "Quantity":
        if self.dim is Dim.FREQUENCY:
            return self
        if self.dim is not Dim.ANGULAR_FREQUENCY:
            raise DomainError(f"{self.dim.name} is not a frequency")
        return Quantity(self.value / TWO_PI, Dim.FREQUENCY)

    def __str__(self):
        return f"{self.value:.12g} {self.dim.value}"


def _lookup(unit):
    try:
        return UNITS[unit]
    except KeyError:
        raise DomainError(f"unknown unit {unit!r}") from None


def quantity(value: float, unit: str) -> Quantity:
    dim, factor = _lookup(unit)
    return Quantity(float(value) * factor, dim)


def parse_quantity(text: str) -> Quantity:
    """Parse ``"<number> <unit>"``. A missing unit is an error."""
    parts = text.split()
    if len(parts) != 2:
        raise DomainError(f"expected '<value> <unit>', got {text!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise DomainError(f"not a number: {parts[0]!r}") from None
    return quantity(value, parts[1])


def thermal_x(omega, T):
    """x = hbar*omega / (2 k_B T); array friendly."""
    omega = np.asarray(omega, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(omega <= 0) or np.any(T <= 0):
        raise DomainError("thermal factor needs omega > 0 and T > 0")
    x = CONSTANTS.hbar * omega / (2.0 * CONSTANTS.k_B * T)
    return x if x.ndim else float(x)


def coth(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        out = np.where(x > SATURATION_X, 1.0, 1.0 / np.tanh(np.minimum(x, SATURATION_X)))
    return out if out.ndim else float(out)


def sech2(x):
    x = np.asarray(x, dtype=float)
    xc = np.minimum(np.abs(x), SATURATION_X)
    out = np.where(np.abs(x) > SATURATION_X, 0.0, 1.0 / np.cosh(xc) ** 2)
    return out if out.ndim else float(out)


def tanh(x):
    out = np.tanh(np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


_KINDS = {"tanh": tanh, "coth": coth, "sech2": sech2}


def thermal_factor(kind: str, omega, T):
    """tanh, coth or sech^2 of hbar*omega/(2 k_B T).

    ``omega`` is an angular frequency in rad/s and ``T`` a temperature in K.
    Non-positive inputs raise :class:`DomainError`.
    """
    try:
        fn = _KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown thermal factor {kind!r}") from None
    return fn(thermal_x(omega, T))


def bose_occupation(omega, T):
    """Mean phonon occupation 1/(exp(hbar*omega/k_B T) - 1)."""
    x2 = 2.0 * np.asarray(thermal_x(omega, T))
    out = 1.0 / np.expm1(np.minimum(x2, 2 * SATURATION_X))
    out = np.where(x2 > 2 * SATURATION_X, 0.0, out)
    return out if out.ndim else float(out)


def cyclic_to_angular(f_hz):
    return TWO_PI * np.asarray(f_hz, dtype=float) if np.ndim(f_hz) else TWO_PI * float(f_hz)


def angular_to_cyclic(w):
    return np.asarray(w, dtype=float) / TWO_PI if np.ndim(w) else float(w) / TWO_PI
