"""Randomised cross-check of the harmonic engine against the time-domain oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignMode, design_enhanced, design_linear, design_planar
from .geometry import Direction, OfdmConfig, SystemGeometry
from .harmonics import TmGrid, scramble, scrambling_operator
from .oracle import demod_exact, relative_error

MODES = tuple(DesignMode)


@dataclass(frozen=True)
class Instance:
    geometry: SystemGeometry
    ofdm: OfdmConfig
    grid: TmGrid
    direction: Direction
    symbols: np.ndarray
    mode: DesignMode


def _random_direction(rng: np.random.Generator) -> Direction:
    return Direction(rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi))


def random_instance(rng: np.random.Generator, mode: DesignMode | None = None) -> Instance:
    """A small random link: ``2 <= M, N <= 8``, ``2 <= N_s <= 16``, random angles and symbols."""
    mode = mode or MODES[rng.integers(len(MODES))]
    tx = _random_direction(rng)
    legit = _random_direction(rng)
    geometry = SystemGeometry(
        irs_rows=int(rng.integers(2, 9)),
        irs_cols=int(rng.integers(2, 9)),
        tx_elements=int(rng.integers(1, 9)),
        tx_elevation_from_irs=tx.elevation,
        tx_azimuth_from_irs=tx.azimuth,
        legit_elevation=legit.elevation,
        legit_azimuth=legit.azimuth,
        path_loss=complex(rng.uniform(0.2, 2.0) * np.exp(2j * np.pi * rng.random())),
    )
    ofdm = OfdmConfig(n_subcarriers=int(rng.integers(2, 17)), n_symbols=1)
    seed = int(rng.integers(2**31))
    if mode is DesignMode.PLANAR:
        grid = design_planar(geometry, seed, delta_tau=float(rng.uniform(0.05, 1.0))).grid
    elif mode is DesignMode.ENHANCED_LINEAR:
        sched = design_enhanced(geometry, MODES[int(rng.integers(2))], hop_period=4, n_hops=3, rng_seed=seed)
        grid = sched.grids[int(rng.integers(len(sched.grids)))]
    else:
        grid = design_linear(geometry, mode, seed).grid
    d = rng.standard_normal(ofdm.n_subcarriers) + 1j * rng.standard_normal(ofdm.n_subcarriers)
    # observe either the legitimate direction or a random one
    direction = legit if rng.random() < 0.25 else _random_direction(rng)
    return Instance(geometry, ofdm, grid, direction, d, mode)


def engine_vs_oracle(inst: Instance) -> float:
    op = scrambling_operator(inst.geometry, inst.ofdm, inst.grid, inst.direction)
    fast = scramble(op, inst.symbols)
    exact = demod_exact(inst.geometry, inst.ofdm, inst.grid, inst.direction, inst.symbols)
    return relative_error(fast, exact)


def equivalence_errors(n_instances: int = 200, seed: int = 0) -> list[tuple[DesignMode, float]]:
    """Relative engine/oracle mismatch for ``n_instances`` random instances, cycling through all modes."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_instances):
        inst = random_instance(rng, MODES[k % len(MODES)])
        out.append((inst.mode, engine_vs_oracle(inst)))
    return out
