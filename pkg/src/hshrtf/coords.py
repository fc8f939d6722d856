"""Hyperspherical coordinates and the frequency-to-angle mapping.

A point on the unit 3-sphere is addressed by three angles: azimuth
``phi`` in [0, 2*pi), inclination ``theta`` in [0, pi] and the frequency
angle ``psi`` in [0, pi].  Physical frequency is mapped linearly onto
the lower half of the psi range, so that 0 Hz sits at the psi = 0 pole
and the Nyquist frequency at the equator psi = pi/2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Inputs this close outside a range boundary are clamped onto it; anything
# further out is rejected.  Absorbs decimal-text round trips.
ANGLE_TOL = 1e-9


def _checked(value: float, lo: float, hi: float, name: str, *, open_hi: bool = False) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if value < lo:
        if lo - value <= ANGLE_TOL:
            return lo
        raise ValueError(f"{name}={value!r} below {lo}")
    if value > hi or (open_hi and value == hi):
        if value - hi <= ANGLE_TOL:
            return lo if open_hi else hi
        raise ValueError(f"{name}={value!r} above {hi}")
    return value


@dataclass(frozen=True)
class Direction4D:
    """A direction on the unit 3-sphere: (phi, theta, psi) in radians."""

    phi: float
    theta: float
    psi: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", _checked(self.phi, 0.0, TWO_PI, "phi", open_hi=True))
        object.__setattr__(self, "theta", _checked(self.theta, 0.0, math.pi, "theta"))
        object.__setattr__(self, "psi", _checked(self.psi, 0.0, math.pi, "psi"))


class MappingMode(enum.Enum):
    """Supported frequency-to-psi mappings."""

    LINEAR_HALF_SPHERE = "linear-half-sphere"


@dataclass(frozen=True)
class FrequencyMapping:
    """Rule mapping physical frequency in Hz to the psi angle.

    The linear half-sphere mode sends 0 Hz to psi = 0 and the Nyquist
    frequency ``sample_rate / 2`` to psi = pi/2, i.e. psi = pi * f / fs.
    Magnitude spectra of real signals are symmetric about Nyquist, which
    this mapping mirrors into symmetry about psi = pi/2.
    """

    sample_rate: float
    mode: MappingMode = MappingMode.LINEAR_HALF_SPHERE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate!r}")
        if not isinstance(self.mode, MappingMode):
            raise ValueError(f"unknown mapping mode {self.mode!r}")

    @property
    def nyquist(self) -> float:
        return 0.5 * self.sample_rate

    def freq_to_psi(self, f: float) -> float:
        return freq_to_psi(f, self)

    def psi_to_freq(self, psi: float) -> float:
        return psi_to_freq(psi, self)


def freq_to_psi(f: float, mapping: FrequencyMapping) -> float:
    """Map a frequency in [0, fs/2] to psi = pi * f / fs."""
    f = _checked(float(f), 0.0, mapping.nyquist, "frequency")
    return math.pi * f / mapping.sample_rate


def psi_to_freq(psi: float, mapping: FrequencyMapping) -> float:
    """Exact inverse of :func:`freq_to_psi` on psi in [0, pi/2].

    Angles above pi/2 are rejected: under the half-sphere mapping they
    mirror frequencies below Nyquist and have no unique preimage.
    """
    psi = _checked(float(psi), 0.0, 0.5 * math.pi, "psi")
    return psi * mapping.sample_rate / math.pi


def hcs_to_cartesian(rho: float, d: Direction4D) -> tuple[float, float, float, float]:
    """Convert hyperspherical (rho, phi, theta, psi) to Cartesian (x, y, z, w).

    Note the azimuth convention: x carries sin(phi) and y carries
    cos(phi), so azimuth is measured from the +y axis.
    """
    if not (math.isfinite(rho) and rho >= 0.0):
        raise ValueError(f"rho must be >= 0, got {rho!r}")
    sp, st = math.sin(d.psi), math.sin(d.theta)
    x = rho * sp * st * math.sin(d.phi)
    y = rho * sp * st * math.cos(d.phi)
    z = rho * sp * math.cos(d.theta)
    w = rho * math.cos(d.psi)
    return (x, y, z, w)


def angles_from_az_el(azimuth_deg: float, elevation_deg: float) -> tuple[float, float]:
    """Convert measurement-style azimuth/elevation in degrees to (phi, theta).

    Azimuth is counterclockwise in degrees and wraps into [0, 2*pi);
    elevation is up-positive in [-90, 90] and maps to inclination
    theta = pi/2 - elevation (so +90 deg is the zenith theta = 0).
    """
    if not math.isfinite(azimuth_deg):
        raise ValueError(f"azimuth must be finite, got {azimuth_deg!r}")
    el = _checked(float(elevation_deg), -90.0, 90.0, "elevation")
    phi = math.radians(azimuth_deg) % TWO_PI
    if phi >= TWO_PI:  # guard against rounding right at the seam
        phi = 0.0
    theta = 0.5 * math.pi - math.radians(el)
    return (phi, theta)
