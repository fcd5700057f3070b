"""Switching-schedule design for directional modulation.

Turn-on instants are laid out so that, at the legitimate direction, every
in-band harmonic sums to zero over a line of the surface (linear modes) or
over the whole surface (planar mode):

* ``linear_column``: for each row ``m`` the ``N`` units get
  ``offset_m + perm_m(q)/N``; on-duration is shared within the row.
* ``linear_row``: the same along each column, with ``M``.
* ``planar``: all ``M*N`` units get ``offset + perm(q)/(M*N)`` and one
  common on-duration.
* ``enhanced_linear``: a linear mode redrawn every ``hop_period`` symbols.

Harmonics at offsets that are multiples of the line length survive in the
linear modes; they are attenuated only by the gate's sinc envelope.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .geometry import Direction, OfdmConfig, SystemGeometry, array_factor_grid
from .harmonics import TmGrid, TmSchedule, toeplitz_coeffs_many

DEFAULT_DURATION_RANGE = (0.3, 0.9)
MIN_DURATION_SEPARATION = 1e-3
CANONICAL_QUANTUM = 1e-12
CANCELLATION_TOL = 1e-10
_MAX_DRAWS = 100_000


class DesignMode(str, enum.Enum):
    LINEAR_COLUMN = "linear_column"
    LINEAR_ROW = "linear_row"
    PLANAR = "planar"
    ENHANCED_LINEAR = "enhanced_linear"

    @classmethod
    def parse(cls, value: "str | DesignMode") -> "DesignMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"column": "linear_column", "row": "linear_row", "enhanced": "enhanced_linear"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown design mode {value!r}; expected one of {names}") from None


@dataclass
class DesignReport:
    """Outcome of checking a schedule at the legitimate direction.

    ``max_offdiag_residual`` is ``max |T[k]|/|T[0]|`` over all ``k != 0``
    and all hop grids; ``structural_residual`` is the same maximum restricted
    to offsets that the mode must cancel (those that are not multiples of
    the line length, or of ``M*N`` for planar). ``surviving_offsets`` lists the
    positive offsets where a line (or surface) root-of-unity sum does not
    vanish; sums at ``-k`` are the conjugates of those at ``k``.
    """

    mode: str
    max_offdiag_residual: float
    structural_residual: float
    surviving_offsets: list[int]
    diagonal: list[complex] = field(default_factory=list)
    tolerance: float = CANCELLATION_TOL

    @property
    def passed(self) -> bool:
        return self.structural_residual < self.tolerance

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "max_offdiag_residual": self.max_offdiag_residual,
            "structural_residual": self.structural_residual,
            "surviving_offsets": list(self.surviving_offsets),
            "diagonal": [[z.real, z.imag] for z in self.diagonal],
        }


def _rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def design_weights(geometry: SystemGeometry) -> np.ndarray:
    """Unit weights that phase-align every unit toward the legitimate direction."""
    legit = array_factor_grid(geometry, geometry.legit_elevation, geometry.legit_azimuth)
    tx = array_factor_grid(geometry, geometry.tx_elevation_from_irs, geometry.tx_azimuth_from_irs)
    return np.conj(legit * tx)


def draw_distinct_durations(
    count: int,
    duration_range: tuple[float, float],
    rng: np.random.Generator,
    min_separation: float = MIN_DURATION_SEPARATION,
) -> np.ndarray:
    """Uniform draws from ``duration_range`` that stay ``min_separation`` apart."""
    lo, hi = duration_range
    if not 0.0 < lo < hi < 1.0:
        raise ValueError(f"duration_range must satisfy 0 < lo < hi < 1, got {duration_range}")
    if (hi - lo) < min_separation * (count - 1):
        raise ValueError(
            f"duration_range {duration_range} cannot hold {count} durations separated by "
            f"{min_separation}; widen it or reduce the number of lines"
        )
    out: list[float] = []
    for _ in range(_MAX_DRAWS):
        if len(out) == count:
            break
        x = float(rng.uniform(lo, hi))
        if all(abs(x - y) >= min_separation for y in out):
            out.append(x)
    if len(out) < count:
        raise ValueError(
            f"could not draw {count} separated durations from {duration_range} "
            f"in {_MAX_DRAWS} attempts; widen the range"
        )
    return np.array(out)


def design_linear(
    geometry: SystemGeometry,
    mode: DesignMode | str = DesignMode.LINEAR_COLUMN,
    rng_seed: int | np.random.Generator | None = 0,
    *,
    delta_tau: float | None = None,
    duration_range: tuple[float, float] = DEFAULT_DURATION_RANGE,
    shared_order: bool = False,
    random_offsets: bool = True,
) -> TmSchedule:
    """Linear-mode schedule (per-row for ``linear_column``, per-column for ``linear_row``).

    By default each line gets its own permutation, offset in ``[0, 1/L)`` and
    on-duration drawn from ``duration_range`` (distinct across lines). Passing
    ``delta_tau`` fixes one common duration, ``shared_order`` reuses a single
    permutation for every line and ``random_offsets=False`` zeroes the offsets.
    """
    mode = DesignMode.parse(mode)
    if mode not in (DesignMode.LINEAR_COLUMN, DesignMode.LINEAR_ROW):
        raise ValueError(f"design_linear needs a linear mode, got {mode.value}")
    rng = _rng(rng_seed)
    rows, cols = geometry.shape
    # work in (lines, units-per-line) and transpose for the row variant
    n_lines, per_line = (rows, cols) if mode is DesignMode.LINEAR_COLUMN else (cols, rows)
    if per_line < 2:
        raise ValueError(
            f"{mode.value} needs at least 2 units per line to cancel harmonics, got {per_line}"
        )

    if shared_order:
        perm = rng.permutation(per_line)
        perms = np.tile(perm, (n_lines, 1))
    else:
        perms = np.stack([rng.permutation(per_line) for _ in range(n_lines)])
    offsets = rng.uniform(0.0, 1.0 / per_line, n_lines) if random_offsets else np.zeros(n_lines)
    if delta_tau is None:
        durations = draw_distinct_durations(n_lines, duration_range, rng)
    else:
        if not 0.0 < delta_tau <= 1.0:
            raise ValueError("delta_tau must lie in (0, 1]")
        durations = np.full(n_lines, float(delta_tau))

    tau = offsets[:, None] + perms / per_line
    dur = np.repeat(durations[:, None], per_line, axis=1)
    if mode is DesignMode.LINEAR_ROW:
        tau, dur = tau.T, dur.T
    grid = TmGrid(tau, dur, design_weights(geometry))
    seed = rng_seed if isinstance(rng_seed, int) else None
    return TmSchedule(grid, mode=mode.value, seed=seed)


def design_planar(
    geometry: SystemGeometry,
    rng_seed: int | np.random.Generator | None = 0,
    *,
    delta_tau: float = 0.7,
    random_offset: bool = True,
) -> TmSchedule:
    """Planar-mode schedule: a random permutation of ``{q/(M*N)}`` plus one global offset."""
    total = geometry.n_units
    if total < 2:
        raise ValueError("planar mode needs at least 2 IRS units")
    if not 0.0 < delta_tau <= 1.0:
        raise ValueError("delta_tau must lie in (0, 1]")
    rng = _rng(rng_seed)
    perm = rng.permutation(total)
    offset = rng.uniform(0.0, 1.0 / total) if random_offset else 0.0
    tau = (offset + perm / total).reshape(geometry.shape)
    grid = TmGrid(tau, np.full(geometry.shape, float(delta_tau)), design_weights(geometry))
    seed = rng_seed if isinstance(rng_seed, int) else None
    return TmSchedule(grid, mode=DesignMode.PLANAR.value, seed=seed)


def canonical_key(grid: TmGrid, quantum: float = CANONICAL_QUANTUM) -> bytes:
    """Quantised parameter tuple used to decide whether two grids are the same design."""
    parts = [
        np.round(np.asarray(a) / quantum).astype(np.int64)
        for a in (grid.tau_on, grid.delta_tau, grid.weights.real, grid.weights.imag)
    ]
    return b"".join(p.tobytes() for p in parts)


def check_unique_hops(grids) -> None:
    """Reject a hop sequence in which any parameter set repeats."""
    seen: dict[bytes, int] = {}
    for k, g in enumerate(grids):
        key = canonical_key(g)
        if key in seen:
            raise ValueError(f"hop {k} repeats the parameter set of hop {seen[key]}")
        seen[key] = k


def design_enhanced(
    geometry: SystemGeometry,
    base_mode: DesignMode | str = DesignMode.LINEAR_COLUMN,
    hop_period: int = 256,
    n_hops: int = 64,
    duration_range: tuple[float, float] = DEFAULT_DURATION_RANGE,
    rng_seed: int | None = 0,
) -> TmSchedule:
    """Hopping linear schedule with a fresh parameter draw every ``hop_period`` symbols."""
    if int(n_hops) != n_hops or n_hops < 1:
        raise ValueError("n_hops must be an integer >= 1")
    if int(hop_period) != hop_period or hop_period < 1:
        raise ValueError("hop_period must be an integer >= 1")
    base_mode = DesignMode.parse(base_mode)
    rng = _rng(rng_seed)
    grids: list[TmGrid] = []
    keys: set[bytes] = set()
    attempts = 0
    while len(grids) < n_hops:
        attempts += 1
        if attempts > 10 * n_hops + 100:
            raise ValueError("could not draw enough distinct hop grids; widen duration_range")
        g = design_linear(geometry, base_mode, rng, duration_range=duration_range).grid
        key = canonical_key(g)
        if key in keys:
            continue
        keys.add(key)
        grids.append(g)
    if n_hops == 1:
        return TmSchedule(grids[0], mode=base_mode.value, seed=rng_seed)
    check_unique_hops(grids)
    return TmSchedule(
        grids[0],
        hop_sequence=tuple(grids),
        hop_period=int(hop_period),
        mode=DesignMode.ENHANCED_LINEAR.value,
        seed=rng_seed,
    )


def _line_groups(mode: str) -> str:
    if mode in (DesignMode.LINEAR_COLUMN.value, DesignMode.LINEAR_ROW.value):
        return mode
    if mode == DesignMode.ENHANCED_LINEAR.value:
        return "lines"
    return "surface"


def root_of_unity_sums(tau_on: np.ndarray, offset: int, grouping: str) -> np.ndarray:
    """``sum exp(-j 2 pi k tau)`` over each row (``linear_column``), each column
    (``linear_row``) or the whole surface (anything else)."""
    phases = np.exp(-2j * np.pi * offset * np.asarray(tau_on))
    if grouping == DesignMode.LINEAR_COLUMN.value:
        return phases.sum(axis=1)
    if grouping == DesignMode.LINEAR_ROW.value:
        return phases.sum(axis=0)
    return np.atleast_1d(phases.sum())


def _detect_line_mode(grid: TmGrid) -> str:
    rows_shared = np.all(grid.delta_tau == grid.delta_tau[:, :1])
    return DesignMode.LINEAR_COLUMN.value if rows_shared else DesignMode.LINEAR_ROW.value


def structural_modulus(shape: tuple[int, int], grouping: str) -> int:
    """Line (or surface) length whose multiples are allowed to survive cancellation."""
    rows, cols = shape
    if grouping == DesignMode.LINEAR_COLUMN.value:
        return cols
    if grouping == DesignMode.LINEAR_ROW.value:
        return rows
    return rows * cols


def surviving_offsets(grid: TmGrid, n_subcarriers: int, grouping: str) -> list[int]:
    out = []
    for k in range(1, n_subcarriers):
        sums = root_of_unity_sums(grid.tau_on, k, grouping)
        line_len = grid.tau_on.size / sums.size
        if np.max(np.abs(sums)) > CANCELLATION_TOL * line_len:
            out.append(k)
    return out


def validate_schedule(
    geometry: SystemGeometry,
    ofdm: OfdmConfig,
    schedule: TmSchedule,
    legit_dir: Direction | None = None,
) -> DesignReport:
    """Check that the operator at the legitimate direction is diagonal up to structural offsets."""
    legit_dir = legit_dir or geometry.legit_direction
    n = ofdm.n_subcarriers
    grouping = _line_groups(schedule.mode)
    survivors: set[int] = set()
    max_res = 0.0
    struct_res = 0.0
    diag: list[complex] = []
    for grid in schedule.grids:
        g = _detect_line_mode(grid) if grouping == "lines" else grouping
        surv = surviving_offsets(grid, n, g)
        survivors.update(surv)
        coeffs = toeplitz_coeffs_many(geometry, ofdm, grid, legit_dir.elevation, legit_dir.azimuth)
        d0 = coeffs[n - 1]
        diag.append(complex(d0))
        rel = np.abs(coeffs) / abs(d0) if abs(d0) > 0 else np.where(np.abs(coeffs) > 0, np.inf, 0.0)
        offs = ofdm.offsets
        off_mask = offs != 0
        max_res = max(max_res, float(rel[off_mask].max()))
        struct_mask = off_mask & (offs % structural_modulus(grid.shape, g) != 0)
        if struct_mask.any():
            struct_res = max(struct_res, float(rel[struct_mask].max()))
    return DesignReport(
        mode=schedule.mode,
        max_offdiag_residual=max_res,
        structural_residual=struct_res,
        surviving_offsets=sorted(survivors),
        diagonal=diag,
    )


def theoretical_legit_gain(geometry: SystemGeometry, grid: TmGrid | TmSchedule) -> complex:
    """Diagonal operator coefficient at the legitimate direction: ``beta*K*sum(delta_tau)``."""
    if isinstance(grid, TmSchedule):
        grid = grid.grid
    if grid.shape != geometry.shape:
        raise ValueError(f"grid shape {grid.shape} does not match IRS shape {geometry.shape}")
    return geometry.path_loss * geometry.tx_elements * float(np.sum(grid.delta_tau))


# --- JSON layout -----------------------------------------------------------------------------

SCHEDULE_FORMAT = "tmirs-schedule/1"


def geometry_to_dict(geometry: SystemGeometry) -> dict[str, Any]:
    return {
        "irs_rows": geometry.irs_rows,
        "irs_cols": geometry.irs_cols,
        "carrier_wavelength": geometry.carrier_wavelength,
        "unit_spacing_x": geometry.unit_spacing_x,
        "unit_spacing_y": geometry.unit_spacing_y,
        "tx_elements": geometry.tx_elements,
        "tx_spacing": geometry.tx_spacing,
        "irs_angle_from_tx": math.degrees(geometry.irs_angle_from_tx),
        "tx_elevation_from_irs": math.degrees(geometry.tx_elevation_from_irs),
        "tx_azimuth_from_irs": math.degrees(geometry.tx_azimuth_from_irs),
        "legit_elevation": math.degrees(geometry.legit_elevation),
        "legit_azimuth": math.degrees(geometry.legit_azimuth),
        "path_loss": [geometry.path_loss.real, geometry.path_loss.imag],
    }


def geometry_from_dict(data: dict[str, Any]) -> SystemGeometry:
    """Inverse of :func:`geometry_to_dict`; angle fields are in degrees."""
    data = dict(data)
    pl = data.pop("path_loss", 1.0)
    if isinstance(pl, (list, tuple)):
        pl = complex(pl[0], pl[1])
    angle_keys = (
        "irs_angle_from_tx",
        "tx_elevation_from_irs",
        "tx_azimuth_from_irs",
        "legit_elevation",
        "legit_azimuth",
    )
    angles = {k: float(data.pop(k)) for k in angle_keys if k in data}
    known = {
        "irs_rows", "irs_cols", "carrier_wavelength", "unit_spacing_x",
        "unit_spacing_y", "tx_elements", "tx_spacing",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown geometry keys: {sorted(unknown)}")
    return SystemGeometry.from_degrees(path_loss=complex(pl), **angles, **data)


def _grid_to_list(grid: TmGrid) -> list[list[dict[str, float]]]:
    rows, cols = grid.shape
    return [
        [
            {
                "tau_on": float(grid.tau_on[m, n]),
                "delta_tau": float(grid.delta_tau[m, n]),
                "weight_re": float(grid.weights[m, n].real),
                "weight_im": float(grid.weights[m, n].imag),
            }
            for n in range(cols)
        ]
        for m in range(rows)
    ]


def _grid_from_list(units: list[list[dict[str, float]]]) -> TmGrid:
    tau = np.array([[u["tau_on"] for u in row] for row in units], dtype=float)
    dur = np.array([[u["delta_tau"] for u in row] for row in units], dtype=float)
    w = np.array([[complex(u["weight_re"], u["weight_im"]) for u in row] for row in units])
    return TmGrid(tau, dur, w)


def schedule_to_dict(geometry: SystemGeometry, schedule: TmSchedule) -> dict[str, Any]:
    return {
        "format": SCHEDULE_FORMAT,
        "geometry": geometry_to_dict(geometry),
        "mode": schedule.mode,
        "seed": schedule.seed,
        "units": _grid_to_list(schedule.grid),
        "hop_period": schedule.hop_period,
        "hops": [_grid_to_list(g) for g in schedule.hop_sequence],
    }


def schedule_from_dict(data: dict[str, Any]) -> tuple[SystemGeometry, TmSchedule]:
    if data.get("format") != SCHEDULE_FORMAT:
        raise ValueError(f"not a {SCHEDULE_FORMAT} document")
    geometry = geometry_from_dict(data["geometry"])
    grid = _grid_from_list(data["units"])
    hops = tuple(_grid_from_list(h) for h in data.get("hops") or [])
    schedule = TmSchedule(
        grid,
        hop_sequence=hops,
        hop_period=data.get("hop_period"),
        mode=data.get("mode", "custom"),
        seed=data.get("seed"),
    )
    if grid.shape != geometry.shape:
        raise ValueError("schedule grid does not match the echoed geometry")
    return geometry, schedule


def dump_schedule(geometry: SystemGeometry, schedule: TmSchedule, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schedule_to_dict(geometry, schedule), fh, indent=1)


def load_schedule(path) -> tuple[SystemGeometry, TmSchedule]:
    with open(path, encoding="utf-8") as fh:
        return schedule_from_dict(json.load(fh))
