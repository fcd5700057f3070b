"""Monte Carlo QPSK link over the scrambling operator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .design import theoretical_legit_gain
from .geometry import Direction, OfdmConfig, SystemGeometry
from .harmonics import TmSchedule, toeplitz_coeffs_many

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
# symbol index 2*b0 + b1 -> constellation point
_QPSK_TABLE = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) * _INV_SQRT2
# separates the link-noise stream from any other use of the same master seed
_LINK_STREAM = 0x6C696E6B


class Equalizer(str, enum.Enum):
    GENIE_DIAGONAL = "genie"
    LEGIT_GAIN = "legit"

    @classmethod
    def parse(cls, value: "str | Equalizer") -> "Equalizer":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"geniediagonal": "genie", "genie_diagonal": "genie", "legitgain": "legit", "legit_gain": "legit"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown equalizer {value!r}; expected 'genie' or 'legit'") from None


@dataclass(frozen=True)
class LinkConfig:
    symbol_snr_db: float = 0.0
    equalizer: Equalizer = Equalizer.GENIE_DIAGONAL
    master_seed: int = 0

    def __post_init__(self) -> None:
        if math.isnan(self.symbol_snr_db) or self.symbol_snr_db == -math.inf:
            raise ValueError("symbol_snr_db must be a number or +inf")
        object.__setattr__(self, "equalizer", Equalizer.parse(self.equalizer))

    @property
    def noise_variance(self) -> float:
        """Per-subcarrier noise power relative to the unit-power constellation."""
        return 10.0 ** (-self.symbol_snr_db / 10.0)


@dataclass(frozen=True)
class BerEstimate:
    direction: Direction
    bit_errors: int
    bits_total: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


def qpsk_modulate(bits) -> np.ndarray:
    """Gray-mapped QPSK: bit pair ``(b0, b1)`` -> ``((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)``."""
    bits = np.asarray(bits)
    if bits.shape[-1] % 2:
        raise ValueError("QPSK needs an even number of bits")
    b = bits.reshape(bits.shape[:-1] + (-1, 2)).astype(float)
    return ((1.0 - 2.0 * b[..., 0]) + 1j * (1.0 - 2.0 * b[..., 1])) * _INV_SQRT2


def qpsk_demodulate(symbols) -> np.ndarray:
    """Hard decision; a component exactly at zero decides for bit 0."""
    s = np.asarray(symbols, dtype=complex)
    if not np.all(np.isfinite(s)):
        raise ValueError("symbols must be finite")
    out = np.empty(s.shape + (2,), dtype=np.int8)
    out[..., 0] = s.real < 0
    out[..., 1] = s.imag < 0
    return out.reshape(s.shape[:-1] + (-1,))


def stream_rng(master_seed: int, stream_index: int) -> np.random.Generator:
    """Independent generator for grid point ``stream_index``; order of evaluation is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([_LINK_STREAM, int(master_seed), int(stream_index)]))


def complex_noise(rng: np.random.Generator, shape: tuple[int, ...], variance: float) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|n|^2 = variance``."""
    raw = rng.standard_normal(shape[:-1] + (2 * shape[-1],))
    noise = raw.view(np.complex128)
    noise *= math.sqrt(variance / 2.0)
    return noise


def add_noise(rng: np.random.Generator, signal: np.ndarray, variance: float) -> np.ndarray:
    if variance == 0.0:
        return signal
    return signal + complex_noise(rng, signal.shape, variance)


def schedule_grid_indices(schedule: TmSchedule, n_symbols: int) -> np.ndarray:
    """Index into ``schedule.grids`` for every OFDM symbol of a frame."""
    mu = np.arange(n_symbols)
    if not schedule.hop_sequence:
        return np.zeros(n_symbols, dtype=int)
    return (mu // schedule.hop_period) % len(schedule.hop_sequence)


def hop_operators(geometry, ofdm, schedule: TmSchedule, direction: Direction) -> list[np.ndarray]:
    """Dense operator matrix toward ``direction`` for each grid of the schedule."""
    n = ofdm.n_subcarriers
    mats = []
    for grid in schedule.grids:
        c = toeplitz_coeffs_many(geometry, ofdm, grid, direction.elevation, direction.azimuth)
        mats.append(toeplitz(c[n - 1 :], c[n - 1 :: -1]))
    return mats


def simulate_direction(
    geometry: SystemGeometry,
    ofdm: OfdmConfig,
    schedule: TmSchedule,
    direction: Direction,
    link: LinkConfig,
    stream_index: int = 0,
    operators: list[np.ndarray] | None = None,
) -> BerEstimate:
    """Estimate BER toward ``direction`` over ``ofdm.n_symbols`` OFDM symbols.

    ``operators`` may carry precomputed ``N_s x N_s`` matrices, one per grid in
    ``schedule.grids``; they are built here otherwise.
    """
    n_sc = ofdm.n_subcarriers
    n_sym = ofdm.n_symbols
    if operators is None:
        operators = hop_operators(geometry, ofdm, schedule, direction)
    if len(operators) != len(schedule.grids):
        raise ValueError("need one operator per schedule grid")

    rng = stream_rng(link.master_seed, stream_index)
    # table lookup on symbol indices is the same Gray map as qpsk_modulate, just cheaper
    tx_idx = rng.integers(0, 4, size=(n_sym, n_sc), dtype=np.int8)
    tx = _QPSK_TABLE[tx_idx]

    # equalise by folding 1/gain into each operator and into the noise scale per symbol
    equalized = np.empty_like(tx)
    inv_gain = np.empty(n_sym, dtype=complex)
    symbol_grid = schedule_grid_indices(schedule, n_sym)
    for k, (grid, mat) in enumerate(zip(schedule.grids, operators)):
        sel = symbol_grid == k
        if not sel.any():
            continue
        if link.equalizer is Equalizer.LEGIT_GAIN:
            gain = theoretical_legit_gain(geometry, grid)
        else:
            gain = mat[0, 0]
        g = 1.0 / gain if gain != 0 else 1.0
        inv_gain[sel] = g
        equalized[sel] = tx[sel] @ (g * mat.T)
    if link.noise_variance > 0:
        noise = complex_noise(rng, tx.shape, link.noise_variance)
        noise *= inv_gain[:, None]
        equalized += noise

    errors = np.count_nonzero((equalized.real < 0) != (tx_idx >= 2))
    errors += np.count_nonzero((equalized.imag < 0) != (tx_idx & 1).astype(bool))
    return BerEstimate(direction, int(errors), 2 * tx_idx.size)
