"""Physical constants used throughout the toolkit.

Values follow ECMWF product conventions; every output manifest records the
constants it was produced with.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Earth geometry and gravity, SI units."""

    a: float = 6_371_229.0        # Earth radius [m]
    omega: float = 7.292115e-5    # rotation rate [s-1]
    g: float = 9.80665            # gravity [m s-2]

    def __post_init__(self):
        if self.a <= 0 or self.omega <= 0 or self.g <= 0:
            raise ValueError("physical constants must be strictly positive")

    def as_dict(self):
        return {"a": self.a, "omega": self.omega, "g": self.g}


EARTH = PhysicalConstants()
