"""Gate Fourier coefficients and the per-direction scrambling operator.

A unit switched on for the normalised window ``[tau_on, tau_on + delta_tau)``
of every symbol period has harmonics

    G(h) = delta_tau * sinc(h*pi*delta_tau) * exp(-j*h*pi*(2*tau_on + delta_tau))

and the symbol received on subcarrier ``i`` from direction ``(theta, phi)``
is ``sum_s T[i - s] d[s]`` with

    T[h] = beta*K * sum_mn a_mn(theta, phi) a_mn(theta_T, phi_T) c_mn G_mn(h).

Only ``|h| <= N_s - 1`` is ever needed: every other mixing product lands
outside the band and is orthogonal to all subcarriers over one period.
The gate is periodic, so ``tau_on + delta_tau > 1`` simply wraps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import toeplitz

from .geometry import (
    Direction,
    OfdmConfig,
    SystemGeometry,
    array_factor,
    array_factor_grid,
    transmit_gain,
)

_SINC_SERIES_CUTOFF = 1e-8


def _sinc_pi(u: np.ndarray) -> np.ndarray:
    # sin(pi u)/(pi u) via sin(pi u) = (-1)^k sin(pi (u - k)), k = round(u);
    # integer u != 0 then gives exactly 0
    u = np.asarray(u, dtype=float)
    x = np.pi * u
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    k = np.round(u)
    sign = 1.0 - 2.0 * np.mod(k, 2.0)
    return np.where(small, 1.0 - x * x / 6.0, sign * np.sin(np.pi * (u - k)) / safe)


def gate_fourier_coeff(h, tau_on, delta_tau):
    """Fourier coefficient of the unit-amplitude periodic on/off gate.

    Broadcasts over all three arguments. ``delta_tau`` must lie in (0, 1].
    """
    delta_tau = np.asarray(delta_tau, dtype=float)
    if np.any(delta_tau <= 0) or np.any(delta_tau > 1):
        raise ValueError("delta_tau must lie in (0, 1]")
    h = np.asarray(h, dtype=float)
    tau_on = np.asarray(tau_on, dtype=float)
    out = delta_tau * _sinc_pi(h * delta_tau) * np.exp(-1j * h * np.pi * (2 * tau_on + delta_tau))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class UnitTmParams:
    """Switching parameters of one IRS unit: turn-on instant, on-duration, weight."""

    tau_on: float
    delta_tau: float
    weight: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau_on < 1.0:
            raise ValueError(f"tau_on must lie in [0, 1), got {self.tau_on!r}")
        if not 0.0 < self.delta_tau <= 1.0:
            raise ValueError(f"delta_tau must lie in (0, 1], got {self.delta_tau!r}")
        if abs(abs(self.weight) - 1.0) > 1e-12:
            raise ValueError(f"weight must be unit-modulus, got |c| = {abs(self.weight)!r}")

    @property
    def tau_off(self) -> float:
        """Turn-off instant, wrapped into [0, 1)."""
        return (self.tau_on + self.delta_tau) % 1.0


@dataclass(frozen=True, eq=False)
class TmGrid:
    """Switching parameters for a whole ``M x N`` surface, stored as arrays."""

    tau_on: np.ndarray
    delta_tau: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        tau = np.array(self.tau_on, dtype=float)
        dur = np.array(self.delta_tau, dtype=float)
        w = np.array(self.weights, dtype=complex)
        if tau.ndim != 2 or tau.shape != dur.shape or tau.shape != w.shape:
            raise ValueError(
                f"tau_on, delta_tau, weights must share one 2-D shape, got "
                f"{tau.shape}, {dur.shape}, {w.shape}"
            )
        if np.any(tau < 0) or np.any(tau >= 1):
            raise ValueError("tau_on must lie in [0, 1)")
        if np.any(dur <= 0) or np.any(dur > 1):
            raise ValueError("delta_tau must lie in (0, 1]")
        if np.any(np.abs(np.abs(w) - 1.0) > 1e-12):
            raise ValueError("weights must be unit-modulus")
        for arr in (tau, dur, w):
            arr.setflags(write=False)
        object.__setattr__(self, "tau_on", tau)
        object.__setattr__(self, "delta_tau", dur)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.tau_on.shape  # type: ignore[return-value]

    def unit(self, m: int, n: int) -> UnitTmParams:
        return UnitTmParams(
            float(self.tau_on[m, n]), float(self.delta_tau[m, n]), complex(self.weights[m, n])
        )

    def units(self) -> Iterator[tuple[int, int, UnitTmParams]]:
        rows, cols = self.shape
        for m in range(rows):
            for n in range(cols):
                yield m, n, self.unit(m, n)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TmGrid):
            return NotImplemented
        return (
            np.array_equal(self.tau_on, other.tau_on)
            and np.array_equal(self.delta_tau, other.delta_tau)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        return hash((self.tau_on.tobytes(), self.delta_tau.tobytes(), self.weights.tobytes()))

    def with_weights(self, weights: np.ndarray) -> "TmGrid":
        return TmGrid(self.tau_on, self.delta_tau, weights)


@dataclass(frozen=True)
class TmSchedule:
    """A static grid, or a hop sequence where grid ``k`` serves symbols
    ``[k*P, (k+1)*P)`` and the sequence repeats if the frame is longer."""

    grid: TmGrid
    hop_sequence: tuple[TmGrid, ...] = ()
    hop_period: int | None = None
    mode: str = "custom"
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "hop_sequence", tuple(self.hop_sequence))
        for g in self.hop_sequence:
            if g.shape != self.grid.shape:
                raise ValueError("every hop grid must match the base grid shape")
        if self.hop_sequence:
            if self.hop_period is None or int(self.hop_period) != self.hop_period or self.hop_period < 1:
                raise ValueError("hop_period must be an integer >= 1 when hops are present")

    @property
    def grids(self) -> tuple[TmGrid, ...]:
        return self.hop_sequence if self.hop_sequence else (self.grid,)

    def grid_index(self, symbol_index: int) -> int:
        if not self.hop_sequence:
            return 0
        return (symbol_index // self.hop_period) % len(self.hop_sequence)

    def grid_for_symbol(self, symbol_index: int) -> TmGrid:
        return self.grids[self.grid_index(symbol_index)]


@dataclass(frozen=True, eq=False)
class ScramblingOperator:
    """Toeplitz map from transmitted to received subcarrier symbols.

    ``toeplitz_coeffs[k]`` is the coefficient at offset ``k - (N_s - 1)``.
    """

    direction: Direction
    toeplitz_coeffs: np.ndarray
    _matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        c = np.array(self.toeplitz_coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("toeplitz_coeffs must be a 1-D vector of odd length 2*N_s - 1")
        c.setflags(write=False)
        object.__setattr__(self, "toeplitz_coeffs", c)
        n = self.n_subcarriers
        # T[i, s] = c[i - s]: first column holds offsets 0..N_s-1, first row 0..-(N_s-1)
        mat = toeplitz(c[n - 1 :], c[n - 1 :: -1])
        mat.setflags(write=False)
        object.__setattr__(self, "_matrix", mat)

    @property
    def n_subcarriers(self) -> int:
        return (self.toeplitz_coeffs.size + 1) // 2

    def coeff(self, offset: int) -> complex:
        n = self.n_subcarriers
        if abs(offset) > n - 1:
            raise IndexError(f"offset {offset} outside [-{n - 1}, {n - 1}]")
        return complex(self.toeplitz_coeffs[offset + n - 1])

    @property
    def diagonal(self) -> complex:
        return self.coeff(0)

    def matrix(self) -> np.ndarray:
        return self._matrix

    def offdiag_residual(self) -> float:
        """``max |T[k]| / |T[0]|`` over ``k != 0`` (``inf`` if ``T[0] == 0``)."""
        n = self.n_subcarriers
        off = np.delete(np.abs(self.toeplitz_coeffs), n - 1)
        d0 = abs(self.diagonal)
        if off.max() == 0:
            return 0.0
        return float(off.max() / d0) if d0 > 0 else float("inf")


def harmonic_coeff(
    geometry: SystemGeometry, m: int, n: int, params: UnitTmParams, h: int, direction: Direction
) -> complex:
    """Contribution of unit ``(m, n)`` to harmonic ``h`` toward ``direction``."""
    return complex(
        array_factor(geometry, m, n, direction)
        * array_factor(geometry, m, n, geometry.tx_direction)
        * params.weight
        * gate_fourier_coeff(h, params.tau_on, params.delta_tau)
    )


def _check_grid(geometry: SystemGeometry, grid: TmGrid) -> None:
    if grid.shape != geometry.shape:
        raise ValueError(f"grid shape {grid.shape} does not match IRS shape {geometry.shape}")


def gate_harmonics(grid: TmGrid, offsets: np.ndarray) -> np.ndarray:
    """Matrix of shape ``(M*N, len(offsets))`` of per-unit gate coefficients."""
    return gate_fourier_coeff(
        np.asarray(offsets)[None, :],
        grid.tau_on.reshape(-1, 1),
        grid.delta_tau.reshape(-1, 1),
    )


def unit_phases(
    geometry: SystemGeometry, grid: TmGrid, elevation: np.ndarray, azimuth: np.ndarray
) -> np.ndarray:
    """``a_mn(dir) a_mn(tx) c_mn`` flattened to shape ``(..., M*N)``."""
    tx = array_factor_grid(geometry, geometry.tx_elevation_from_irs, geometry.tx_azimuth_from_irs)
    rx = array_factor_grid(geometry, elevation, azimuth)
    prod = rx * (tx * grid.weights)
    return prod.reshape(prod.shape[:-2] + (-1,))


def toeplitz_coeffs_many(
    geometry: SystemGeometry,
    ofdm: OfdmConfig,
    grid: TmGrid,
    elevation: np.ndarray,
    azimuth: np.ndarray,
) -> np.ndarray:
    """Operator coefficients for many directions at once, shape ``(..., 2*N_s - 1)``."""
    _check_grid(geometry, grid)
    harm = gate_harmonics(grid, ofdm.offsets)
    return transmit_gain(geometry) * (unit_phases(geometry, grid, elevation, azimuth) @ harm)


def scrambling_operator(
    geometry: SystemGeometry, ofdm: OfdmConfig, grid: TmGrid, direction: Direction
) -> ScramblingOperator:
    """Build the operator for one direction in ``O(N_s * M * N)``."""
    coeffs = toeplitz_coeffs_many(geometry, ofdm, grid, direction.elevation, direction.azimuth)
    return ScramblingOperator(direction, coeffs)


def scramble(op: ScramblingOperator, d: Sequence[complex] | np.ndarray) -> np.ndarray:
    """Apply the operator to one symbol vector, or to rows of a ``(n_sym, N_s)`` block."""
    d = np.asarray(d, dtype=complex)
    if d.shape[-1] != op.n_subcarriers:
        raise ValueError(f"expected {op.n_subcarriers} subcarriers, got {d.shape[-1]}")
    return d @ op.matrix().T
