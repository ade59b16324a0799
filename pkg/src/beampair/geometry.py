"""Array geometry: spatial frequencies and steering vectors.

Transmit side is a uniform planar array (x by y elements), receive side a
uniform linear array. All spacings are in wavelengths (carrier wavelength
normalized to 1), so half-wavelength spacing is d = 0.5 and the visible
spatial-frequency region is [-pi, pi].
"""

from dataclasses import dataclass

import numpy as np


class DegenerateDirection(ValueError):
    """Raised when (mu_x, mu_y) = (0, 0): azimuth is undefined at boresight."""


@dataclass(frozen=True)
class ArrayConfig:
    """Antenna setup. In cross-polarized mode the counts are per polarization
    (totals are twice these); in co-polarized mode they are the totals."""

    n_x: int
    n_y: int
    m_tot: int
    d_tx: float = 0.5
    d_ty: float = 0.5
    d_r: float = 0.5
    polarization_mode: str = "co"

    def __post_init__(self):
        if min(self.n_x, self.n_y, self.m_tot) < 1:
            raise ValueError("element counts must be >= 1")
        if min(self.d_tx, self.d_ty, self.d_r) <= 0:
            raise ValueError("element spacings must be positive")
        if self.polarization_mode not in ("co", "cross"):
            raise ValueError(f"unknown polarization_mode {self.polarization_mode!r}")

    @property
    def n_tx(self) -> int:
        """Per-polarization transmit element count."""
        return self.n_x * self.n_y

    @property
    def n_tot(self) -> int:
        """Total transmit elements across polarizations."""
        return self.n_tx * (2 if self.polarization_mode == "cross" else 1)

    @property
    def m_full(self) -> int:
        """Total receive elements across polarizations."""
        return self.m_tot * (2 if self.polarization_mode == "cross" else 1)


@dataclass(frozen=True)
class AngleSet:
    """Path angles in radians: elevation AoD theta, azimuth AoD phi, AoA psi."""

    theta: float
    phi: float
    psi: float

    def __post_init__(self):
        if not (-np.pi / 2 <= self.theta <= np.pi / 2):
            raise ValueError("theta out of [-pi/2, pi/2]")
        if not (-np.pi <= self.phi <= np.pi):
            raise ValueError("phi out of [-pi, pi]")
        if not (-np.pi / 2 <= self.psi <= np.pi / 2):
            raise ValueError("psi out of [-pi/2, pi/2]")


@dataclass(frozen=True)
class SpatialFrequencies:
    """Per-element phase progressions (radians/element)."""

    mu_x: float
    mu_y: float
    nu: float


def spatial_frequencies(angles: AngleSet, cfg: ArrayConfig) -> SpatialFrequencies:
    """Map physical angles to spatial frequencies for the configured spacings."""
    st = np.sin(angles.theta)
    return SpatialFrequencies(
        mu_x=2 * np.pi * cfg.d_tx * st * np.cos(angles.phi),
        mu_y=2 * np.pi * cfg.d_ty * st * np.sin(angles.phi),
        nu=2 * np.pi * cfg.d_r * np.sin(angles.psi),
    )


def ula_steering(nu: float, m: int) -> np.ndarray:
    """Unit-norm ULA steering vector, entry i = exp(j*i*nu)/sqrt(m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.exp(1j * nu * np.arange(m)) / np.sqrt(m)


def upa_steering(mu_x: float, mu_y: float, n_x: int, n_y: int) -> np.ndarray:
    """Unit-norm UPA steering vector: Kronecker product of the x (elevation)
    and y (azimuth) ULA factors, length n_x*n_y."""
    return np.kron(ula_steering(mu_x, n_x), ula_steering(mu_y, n_y))


def angles_from_spatial_frequencies(mu_x: float, mu_y: float,
                                    cfg: ArrayConfig) -> tuple[float, float]:
    """Invert (mu_x, mu_y) to (theta, phi).

    phi uses the quadrant-aware arctangent; theta uses the radial form
    arcsin(|(mu_x/2pi d_tx, mu_y/2pi d_ty)|) with the argument clamped so
    noise-perturbed inputs just outside the visible region stay legal. The
    returned theta is nonnegative; directions with negative elevation map to
    the equivalent (|theta|, phi + pi) parameterization.
    """
    sx = mu_x / (2 * np.pi * cfg.d_tx)
    sy = mu_y / (2 * np.pi * cfg.d_ty)
    if sx == 0.0 and sy == 0.0:
        raise DegenerateDirection("azimuth undefined at mu_x = mu_y = 0")
    phi = np.arctan2(sy, sx)
    theta = np.arcsin(min(1.0, np.hypot(sx, sy)))
    return float(theta), float(phi)


def aoa_from_nu(nu: float, cfg: ArrayConfig) -> float:
    """Invert a receive spatial frequency to the arrival angle psi."""
    return float(np.arcsin(np.clip(nu / (2 * np.pi * cfg.d_r), -1.0, 1.0)))
