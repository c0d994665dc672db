"""Uniform linear array geometry and wideband steering.

Angles are measured from broadside, positive toward increasing element
index, so the classical ULA array-factor formula holds verbatim. Steering
is expressed as per-element far-field delays; each absolute frequency gets
its own phase, so no narrowband approximation is built in anywhere.
"""

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array of isotropic unit-gain elements.

    Element m sits at m * spacing_wavelengths * wavelength along the array
    axis, with the wavelength taken at the carrier frequency.
    """

    num_antennas: int
    carrier_frequency: float
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if self.carrier_frequency <= 0:
            raise ValueError("carrier_frequency must be positive")
        if self.spacing_wavelengths <= 0:
            raise ValueError("spacing_wavelengths must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def spacing_m(self) -> float:
        return self.spacing_wavelengths * self.wavelength

    def element_positions(self) -> np.ndarray:
        """Element coordinates along the array axis in meters (element 0 at 0)."""
        return np.arange(self.num_antennas) * self.spacing_m


@dataclass(frozen=True)
class Direction:
    """Azimuth in radians from broadside; endfire is +-pi/2, back lobes beyond."""

    angle: float

    def __post_init__(self):
        if not -np.pi < self.angle <= np.pi:
            raise ValueError(f"angle {self.angle} outside (-pi, pi]")

    @classmethod
    def from_degrees(cls, degrees: float) -> "Direction":
        return cls(float(np.deg2rad(degrees)))


def _angle_of(direction) -> float:
    return direction.angle if isinstance(direction, Direction) else float(direction)


def element_delays(geometry: UlaGeometry, direction) -> np.ndarray:
    """Far-field delay of each element relative to element 0, in seconds.

    tau_m = m * d * sin(angle) / c. Antisymmetric in the angle; zero at
    broadside.
    """
    return geometry.element_positions() * (np.sin(_angle_of(direction)) / SPEED_OF_LIGHT)


def steering_phases(geometry: UlaGeometry, direction, absolute_frequency: float) -> np.ndarray:
    """Unit-magnitude phasors exp(-j 2 pi f tau_m) at one absolute frequency."""
    if absolute_frequency <= 0:
        raise ValueError("absolute_frequency must be positive")
    return np.exp(-2j * np.pi * absolute_frequency * element_delays(geometry, direction))
