"""
Unit-checked interaction-scale calculators.

Quantities are ``float`` subclasses tagged with an SI unit; every function
checks the type of its arguments, so passing a frequency where a length is
expected fails immediately instead of producing a silently wrong number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values (exact where the SI defines them)."""

    c: float = 299_792_458.0  # m/s, exact
    hbar: float = 1.054_571_817e-34  # J s, exact
    elementary_charge: float = 1.602_176_634e-19  # C, exact
    vacuum_permittivity: float = 8.854_187_8128e-12  # F/m
    au_c6: float = 9.57e-80  # J m^6 per atomic unit of C6


CONSTANTS = PhysicalConstants()


class Quantity(float):
    unit = ""

    def __new__(cls, value):
        if isinstance(value, Quantity) and type(value) is not cls:
            raise TypeError(f"cannot reinterpret {type(value).__name__} [{value.unit}] as {cls.__name__} [{cls.unit}]")
        value = float(value)
        if math.isnan(value):
            raise ValueError(f"{cls.__name__} cannot be NaN")
        return super().__new__(cls, value)

    def __repr__(self):
        return f"{type(self).__name__}({float(self)!r} {self.unit})"


class Length(Quantity):
    unit = "m"


class Frequency(Quantity):
    unit = "Hz"


class Area(Quantity):
    unit = "m^2"


class C6Coefficient(Quantity):
    """Van der Waals C6 in atomic units."""

    unit = "a.u."


def _require(value, kind: type[Quantity], name: str) -> float:
    if type(value) is not kind:
        got = type(value).__name__
        raise TypeError(f"{name} must be a {kind.__name__} [{kind.unit}], got {got}")
    return float(value)


def coulomb_interaction_frequency(separation: Length, constants: PhysicalConstants = CONSTANTS) -> Frequency:
    """Coulomb energy of two elementary charges divided by ``2 pi hbar``."""
    r = _require(separation, Length, "separation")
    if r <= 0:
        raise ValueError("separation must be positive")
    if math.isinf(r):
        return Frequency(0.0)
    energy = constants.elementary_charge**2 / (4 * math.pi * constants.vacuum_permittivity * r)
    return Frequency(energy / (2 * math.pi * constants.hbar))


def vdw_separation_for_strength(c6: C6Coefficient, target: Frequency, constants: PhysicalConstants = CONSTANTS) -> Length:
    """Separation where ``C6 / r^6`` equals ``2 pi hbar * target``."""
    c = _require(c6, C6Coefficient, "c6")
    f = _require(target, Frequency, "target")
    if c <= 0 or f <= 0:
        raise ValueError("c6 and target must be positive")
    return Length((c * constants.au_c6 / (2 * math.pi * constants.hbar * f)) ** (1.0 / 6.0))


def resonant_cross_section(wavelength: Length) -> Area:
    """Resonant two-level absorption cross section ``3 lambda^2 / 2 pi``."""
    lam = _require(wavelength, Length, "wavelength")
    if lam <= 0:
        raise ValueError("wavelength must be positive")
    return Area(3 * lam**2 / (2 * math.pi))
