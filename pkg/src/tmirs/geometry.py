"""Physical and waveform configuration for a TM-IRS link.

Angles are radians everywhere inside the package. Degrees only appear at the
I/O boundary (JSON config, CSV, CLI flags); use :func:`Direction.from_degrees`
and :meth:`SystemGeometry.from_degrees` there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

_HALF_PI = math.pi / 2


def _check_elevation(name: str, value: float) -> None:
    if not (0.0 <= value <= _HALF_PI + 1e-12):
        raise ValueError(f"{name} must lie in [0, pi/2], got {value!r}")


def _check_azimuth(name: str, value: float) -> None:
    if not (-math.pi - 1e-12 <= value < math.pi):
        raise ValueError(f"{name} must lie in [-pi, pi), got {value!r}")


@dataclass(frozen=True)
class Direction:
    """Far-field direction seen from the IRS (elevation from broadside, azimuth)."""

    elevation: float
    azimuth: float

    def __post_init__(self) -> None:
        _check_elevation("elevation", self.elevation)
        _check_azimuth("azimuth", self.azimuth)

    @classmethod
    def from_degrees(cls, elevation_deg: float, azimuth_deg: float) -> "Direction":
        return cls(math.radians(elevation_deg), math.radians(azimuth_deg))

    def to_degrees(self) -> tuple[float, float]:
        return math.degrees(self.elevation), math.degrees(self.azimuth)

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.elevation)
        return np.array(
            [st * math.cos(self.azimuth), st * math.sin(self.azimuth), math.cos(self.elevation)]
        )


@dataclass(frozen=True)
class SystemGeometry:
    """IRS grid, transmit ULA and the fixed link angles.

    ``unit_spacing_x``/``unit_spacing_y`` default to half a wavelength when
    left as ``None``. ``path_loss`` is the complex scalar between transmitter
    and IRS; it is applied identically to every observation direction.
    """

    irs_rows: int = 16
    irs_cols: int = 16
    carrier_wavelength: float = SPEED_OF_LIGHT / 24e9
    unit_spacing_x: float | None = None
    unit_spacing_y: float | None = None
    tx_elements: int = 8
    tx_spacing: float | None = None
    irs_angle_from_tx: float = math.radians(30.0)
    tx_elevation_from_irs: float = math.radians(15.0)
    tx_azimuth_from_irs: float = math.radians(10.0)
    legit_elevation: float = math.radians(40.0)
    legit_azimuth: float = math.radians(30.0)
    path_loss: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        for name in ("irs_rows", "irs_cols", "tx_elements"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not self.carrier_wavelength > 0:
            raise ValueError("carrier_wavelength must be positive")
        half = self.carrier_wavelength / 2
        for name in ("unit_spacing_x", "unit_spacing_y", "tx_spacing"):
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, half)
            elif not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        _check_elevation("tx_elevation_from_irs", self.tx_elevation_from_irs)
        _check_elevation("legit_elevation", self.legit_elevation)
        _check_azimuth("tx_azimuth_from_irs", self.tx_azimuth_from_irs)
        _check_azimuth("legit_azimuth", self.legit_azimuth)
        if not -_HALF_PI <= self.irs_angle_from_tx <= _HALF_PI:
            raise ValueError("irs_angle_from_tx must lie in [-pi/2, pi/2]")
        object.__setattr__(self, "path_loss", complex(self.path_loss))

    @classmethod
    def from_degrees(
        cls,
        *,
        irs_angle_from_tx: float = 30.0,
        tx_elevation_from_irs: float = 15.0,
        tx_azimuth_from_irs: float = 10.0,
        legit_elevation: float = 40.0,
        legit_azimuth: float = 30.0,
        **kwargs,
    ) -> "SystemGeometry":
        return cls(
            irs_angle_from_tx=math.radians(irs_angle_from_tx),
            tx_elevation_from_irs=math.radians(tx_elevation_from_irs),
            tx_azimuth_from_irs=math.radians(tx_azimuth_from_irs),
            legit_elevation=math.radians(legit_elevation),
            legit_azimuth=math.radians(legit_azimuth),
            **kwargs,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.irs_rows, self.irs_cols

    @property
    def n_units(self) -> int:
        return self.irs_rows * self.irs_cols

    @property
    def tx_direction(self) -> Direction:
        return Direction(self.tx_elevation_from_irs, self.tx_azimuth_from_irs)

    @property
    def legit_direction(self) -> Direction:
        return Direction(self.legit_elevation, self.legit_azimuth)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology. The gate period equals the symbol duration ``1/f_s``."""

    n_subcarriers: int = 64
    subcarrier_spacing: float = 120e3
    carrier_freq: float = 24e9
    n_symbols: int = 1024
    symbol_duration: float = field(init=False)

    def __post_init__(self) -> None:
        if int(self.n_subcarriers) != self.n_subcarriers or self.n_subcarriers < 2:
            raise ValueError("n_subcarriers must be an integer >= 2")
        if int(self.n_symbols) != self.n_symbols or self.n_symbols < 1:
            raise ValueError("n_symbols must be an integer >= 1")
        if not self.subcarrier_spacing > 0:
            raise ValueError("subcarrier_spacing must be positive")
        object.__setattr__(self, "n_subcarriers", int(self.n_subcarriers))
        object.__setattr__(self, "n_symbols", int(self.n_symbols))
        object.__setattr__(self, "symbol_duration", 1.0 / self.subcarrier_spacing)

    @property
    def offsets(self) -> np.ndarray:
        """Subcarrier offsets ``i - s`` from ``-(N_s-1)`` to ``N_s-1``."""
        n = self.n_subcarriers
        return np.arange(-(n - 1), n)


def array_factor(geometry: SystemGeometry, m: int, n: int, direction: Direction) -> complex:
    """Far-field phase of IRS unit ``(m, n)`` toward ``direction``."""
    if not (0 <= m < geometry.irs_rows and 0 <= n < geometry.irs_cols):
        raise IndexError(f"unit ({m}, {n}) outside a {geometry.irs_rows}x{geometry.irs_cols} IRS")
    st = math.sin(direction.elevation)
    path = (
        m * geometry.unit_spacing_x * st * math.cos(direction.azimuth)
        + n * geometry.unit_spacing_y * st * math.sin(direction.azimuth)
    )
    return complex(np.exp(-2j * math.pi * path / geometry.carrier_wavelength))


def array_factor_grid(
    geometry: SystemGeometry, elevation: np.ndarray | float, azimuth: np.ndarray | float
) -> np.ndarray:
    """Vectorised :func:`array_factor` over all units.

    Returns an array of shape ``broadcast(elevation, azimuth).shape + (M, N)``.
    """
    el = np.asarray(elevation, dtype=float)[..., None, None]
    az = np.asarray(azimuth, dtype=float)[..., None, None]
    m = np.arange(geometry.irs_rows)[:, None]
    n = np.arange(geometry.irs_cols)[None, :]
    st = np.sin(el)
    path = m * geometry.unit_spacing_x * st * np.cos(az) + n * geometry.unit_spacing_y * st * np.sin(az)
    return np.exp(-2j * np.pi * path / geometry.carrier_wavelength)


def transmit_gain(geometry: SystemGeometry) -> complex:
    """Coherent gain of the steered transmit ULA at the IRS: ``beta * K``."""
    return geometry.path_loss * geometry.tx_elements
