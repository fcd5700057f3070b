"""Angular BER sweeps and their file outputs (CSV, JSON metadata, PGM heatmap)."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from scipy.linalg import toeplitz

from .design import (
    DEFAULT_DURATION_RANGE,
    DesignMode,
    DesignReport,
    design_enhanced,
    design_linear,
    design_planar,
    geometry_from_dict,
    geometry_to_dict,
    schedule_to_dict,
    validate_schedule,
)
from .geometry import Direction, OfdmConfig, SystemGeometry, transmit_gain
from .harmonics import TmSchedule, gate_harmonics, unit_phases
from .link import Equalizer, LinkConfig, simulate_direction

logger = logging.getLogger(__name__)

BER_FLOOR = 1e-10
DEFAULT_MAX_POINTS = 1_000_000
FULL_SCALE_SYMBOLS = 2**14
_BATCH = 32


@dataclass(frozen=True)
class AngleRange:
    """Inclusive degree range ``start, start + step, ... <= stop``."""

    start: float
    stop: float
    step: float

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if self.stop < self.start:
            raise ValueError(f"empty angle range [{self.start}, {self.stop}]")

    def values(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 9)

    def __len__(self) -> int:
        return len(self.values())


@dataclass
class DesignSpec:
    mode: DesignMode = DesignMode.PLANAR
    seed: int = 0
    delta_tau: float | None = 0.7
    hop_period: int = 256
    n_hops: int | None = None
    duration_range: tuple[float, float] = DEFAULT_DURATION_RANGE
    shared_order: bool = True
    random_offsets: bool = False


@dataclass
class SweepSpec:
    geometry: SystemGeometry = field(default_factory=SystemGeometry)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    design: DesignSpec = field(default_factory=DesignSpec)
    link: LinkConfig = field(default_factory=LinkConfig)
    elevation: AngleRange = AngleRange(0.0, 90.0, 1.0)
    azimuth: AngleRange = AngleRange(-90.0, 90.0, 1.0)
    max_points: int = DEFAULT_MAX_POINTS
    workers: int | None = None
    out_csv: str | None = None
    out_json: str | None = None
    out_pgm: str | None = None
    out_schedule: str | None = None

    def __post_init__(self) -> None:
        el = self.elevation.values()
        az = self.azimuth.values()
        if el.min() < 0 or el.max() > 90:
            raise ValueError("elevation grid must stay within [0, 90] degrees")
        if az.min() < -180 or az.max() >= 180:
            raise ValueError("azimuth grid must stay within [-180, 180) degrees")

    @property
    def n_points(self) -> int:
        return len(self.elevation) * len(self.azimuth)


@dataclass
class BerMap:
    elevations_deg: np.ndarray
    azimuths_deg: np.ndarray
    bit_errors: np.ndarray
    bits_total: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def ber(self) -> np.ndarray:
        return self.bit_errors / self.bits_total

    def points(self):
        """``(theta_deg, phi_deg, ber)`` in row-major (elevation-major) order."""
        ber = self.ber
        for r, th in enumerate(self.elevations_deg):
            for c, ph in enumerate(self.azimuths_deg):
                yield float(th), float(ph), float(ber[r, c])


def build_schedule(geometry: SystemGeometry, ofdm: OfdmConfig, design: DesignSpec) -> TmSchedule:
    mode = DesignMode.parse(design.mode)
    if mode is DesignMode.PLANAR:
        return design_planar(geometry, design.seed, delta_tau=design.delta_tau or 0.7)
    if mode is DesignMode.ENHANCED_LINEAR:
        n_hops = design.n_hops or max(1, math.ceil(ofdm.n_symbols / design.hop_period))
        return design_enhanced(
            geometry,
            DesignMode.LINEAR_COLUMN,
            hop_period=design.hop_period,
            n_hops=n_hops,
            duration_range=tuple(design.duration_range),
            rng_seed=design.seed,
        )
    return design_linear(
        geometry,
        mode,
        design.seed,
        delta_tau=design.delta_tau,
        duration_range=tuple(design.duration_range),
        shared_order=design.shared_order,
        random_offsets=design.random_offsets,
    )


def schedule_digest(geometry: SystemGeometry, schedule: TmSchedule) -> str:
    blob = json.dumps(schedule_to_dict(geometry, schedule), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# --- evaluation ------------------------------------------------------------------------------

_worker_state: dict[str, Any] = {}


def _init_worker(geometry, ofdm, schedule, link) -> None:
    gain = transmit_gain(geometry)
    harmonics = [gain * gate_harmonics(g, ofdm.offsets) for g in schedule.grids]
    _worker_state.update(geometry=geometry, ofdm=ofdm, schedule=schedule, link=link, harmonics=harmonics)


def _evaluate_batch(batch: list[tuple[int, float, float]]) -> list[tuple[int, int, int]]:
    st = _worker_state
    geometry, ofdm, schedule, link = st["geometry"], st["ofdm"], st["schedule"], st["link"]
    n = ofdm.n_subcarriers
    idx = [b[0] for b in batch]
    el = np.radians([b[1] for b in batch])
    az = np.radians([b[2] for b in batch])
    coeffs = [unit_phases(geometry, g, el, az) @ h for g, h in zip(schedule.grids, st["harmonics"])]
    out = []
    for j, index in enumerate(idx):
        direction = Direction(float(el[j]), float(az[j]))
        ops = [toeplitz(c[j, n - 1 :], c[j, n - 1 :: -1]) for c in coeffs]
        est = simulate_direction(geometry, ofdm, schedule, direction, link, stream_index=index, operators=ops)
        out.append((index, est.bit_errors, est.bits_total))
    return out


def evaluate_grid(
    geometry: SystemGeometry,
    ofdm: OfdmConfig,
    schedule: TmSchedule,
    link: LinkConfig,
    elevations_deg: np.ndarray,
    azimuths_deg: np.ndarray,
    workers: int | None = None,
) -> tuple[np.ndarray, int]:
    """Bit-error counts on the ``(elevation, azimuth)`` grid; point ``(r, c)`` uses stream ``r*n_az + c``."""
    n_az = len(azimuths_deg)
    points = [
        (r * n_az + c, float(th), float(ph))
        for r, th in enumerate(elevations_deg)
        for c, ph in enumerate(azimuths_deg)
    ]
    batches = [points[i : i + _BATCH] for i in range(0, len(points), _BATCH)]
    errors = np.zeros(len(points), dtype=np.int64)
    bits_total = 2 * ofdm.n_subcarriers * ofdm.n_symbols
    workers = workers or os.cpu_count() or 1
    init_args = (geometry, ofdm, schedule, link)
    if workers <= 1 or len(batches) == 1:
        _init_worker(*init_args)
        results = map(_evaluate_batch, batches)
        for chunk in results:
            for index, errs, _ in chunk:
                errors[index] = errs
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=init_args) as pool:
            for chunk in pool.map(_evaluate_batch, batches):
                for index, errs, _ in chunk:
                    errors[index] = errs
    return errors.reshape(len(elevations_deg), n_az), bits_total


def run_sweep(spec: SweepSpec, schedule: TmSchedule | None = None) -> BerMap:
    """Design (unless given) a schedule, sweep the BER map and write requested outputs."""
    if spec.n_points > spec.max_points:
        raise ValueError(f"sweep has {spec.n_points} grid points, above the cap of {spec.max_points}")
    for path in (spec.out_csv, spec.out_json, spec.out_pgm, spec.out_schedule):
        if path:
            _check_writable(path)
    if schedule is None:
        schedule = build_schedule(spec.geometry, spec.ofdm, spec.design)
    el = spec.elevation.values()
    az = spec.azimuth.values()
    logger.info("sweeping %d points, mode %s, %d symbols", spec.n_points, schedule.mode, spec.ofdm.n_symbols)
    t0 = time.perf_counter()
    errors, bits_total = evaluate_grid(spec.geometry, spec.ofdm, schedule, spec.link, el, az, spec.workers)
    runtime = time.perf_counter() - t0
    metadata = {
        "seed": spec.design.seed,
        "link_seed": spec.link.master_seed,
        "mode": schedule.mode,
        "schedule_digest": schedule_digest(spec.geometry, schedule),
        "runtime_s": runtime,
        "n_symbols": spec.ofdm.n_symbols,
        "n_subcarriers": spec.ofdm.n_subcarriers,
        "symbol_snr_db": spec.link.symbol_snr_db,
        "equalizer": spec.link.equalizer.value,
        "hop_period": schedule.hop_period,
        "n_hops": len(schedule.hop_sequence),
        "elevation_deg": [spec.elevation.start, spec.elevation.stop, spec.elevation.step],
        "azimuth_deg": [spec.azimuth.start, spec.azimuth.stop, spec.azimuth.step],
        "grid_shape": [len(el), len(az)],
        "bits_per_point": bits_total,
        "ber_floor": BER_FLOOR,
    }
    bermap = BerMap(el, az, errors, bits_total, metadata)
    if spec.out_csv:
        write_csv(bermap, spec.out_csv)
    if spec.out_pgm:
        write_pgm(bermap, spec.out_pgm)
    if spec.out_schedule:
        with open(spec.out_schedule, "w", encoding="utf-8") as fh:
            json.dump(schedule_to_dict(spec.geometry, schedule), fh, indent=1)
    if spec.out_json:
        with open(spec.out_json, "w", encoding="utf-8") as fh:
            json.dump(metadata, fh, indent=2)
    return bermap


def run_validate(spec: SweepSpec, out_json: str | None = None) -> DesignReport:
    schedule = build_schedule(spec.geometry, spec.ofdm, spec.design)
    report = validate_schedule(spec.geometry, spec.ofdm, schedule)
    if out_json:
        _check_writable(out_json)
        with open(out_json, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    return report


# --- output formats --------------------------------------------------------------------------


def _check_writable(path: str) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path}")


def _fmt(x: float) -> str:
    return format(x, ".9g")


def write_csv(bermap: BerMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("theta_deg,phi_deg,ber\n")
        for th, ph, ber in bermap.points():
            fh.write(f"{_fmt(th)},{_fmt(ph)},{ber!r}\n")


def read_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def heatmap_levels(ber: np.ndarray) -> np.ndarray:
    """8-bit grey levels, linear in ``log10(ber + 1e-10)`` over ``[-10, 0]``; black is lowest BER."""
    logv = np.clip(np.log10(np.asarray(ber, dtype=float) + BER_FLOOR), -10.0, 0.0)
    return np.rint((logv + 10.0) * 25.5).astype(np.uint8)


def write_pgm(bermap: BerMap, path) -> None:
    """Binary PGM (P5): row ``r`` is elevation index ``r``, column ``c`` azimuth index ``c``."""
    levels = heatmap_levels(bermap.ber)
    rows, cols = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(levels.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PGM supported")
    pixels = np.frombuffer(parts[4][: rows * cols], dtype=np.uint8)
    return pixels.reshape(rows, cols)


# --- analysis helpers ------------------------------------------------------------------------


def angular_distance_deg(el1, az1, el2, az2) -> np.ndarray:
    """Great-circle angle between far-field directions, all in degrees."""
    a = np.radians(np.asarray(el1, dtype=float))
    b = np.radians(np.asarray(az1, dtype=float))
    c = math.radians(el2)
    d = math.radians(az2)
    cosang = np.sin(a) * math.sin(c) * np.cos(b - d) + np.cos(a) * math.cos(c)
    return np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))


def offcap_low_ber(bermap: BerMap, center_deg: tuple[float, float], radius_deg: float = 5.0,
                   threshold: float = 0.1) -> tuple[int, int]:
    """``(count, total)`` of grid points farther than ``radius_deg`` from ``center_deg`` with BER below ``threshold``."""
    th, ph = np.meshgrid(bermap.elevations_deg, bermap.azimuths_deg, indexing="ij")
    outside = angular_distance_deg(th, ph, *center_deg) > radius_deg
    low = bermap.ber < threshold
    return int(np.count_nonzero(outside & low)), int(np.count_nonzero(outside))


# --- config files ----------------------------------------------------------------------------


def _angle_range(value, default: AngleRange) -> AngleRange:
    if value is None:
        return default
    if isinstance(value, dict):
        return AngleRange(float(value["start"]), float(value["stop"]), float(value["step"]))
    start, stop, step = value
    return AngleRange(float(start), float(stop), float(step))


def spec_from_config(cfg: dict[str, Any]) -> SweepSpec:
    """Build a :class:`SweepSpec` from the documented JSON layout (angles in degrees)."""
    allowed = {"geometry", "ofdm", "design", "link", "sweep", "output"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    ofdm_cfg = dict(cfg.get("ofdm", {}))
    ofdm = OfdmConfig(
        n_subcarriers=ofdm_cfg.pop("n_subcarriers", 64),
        subcarrier_spacing=ofdm_cfg.pop("subcarrier_spacing", 120e3),
        carrier_freq=ofdm_cfg.pop("carrier_freq", 24e9),
        n_symbols=ofdm_cfg.pop("n_symbols", 1024),
    )
    if ofdm_cfg:
        raise ValueError(f"unknown ofdm keys: {sorted(ofdm_cfg)}")
    geo_cfg = dict(cfg.get("geometry", {}))
    geo_cfg.setdefault("carrier_wavelength", 299_792_458.0 / ofdm.carrier_freq)
    geometry = geometry_from_dict(geo_cfg)

    d = dict(cfg.get("design", {}))
    design = DesignSpec(
        mode=DesignMode.parse(d.pop("mode", "planar")),
        seed=int(d.pop("seed", 0)),
        delta_tau=d.pop("delta_tau", 0.7),
        hop_period=int(d.pop("hop_period", 256)),
        n_hops=d.pop("n_hops", None),
        duration_range=tuple(d.pop("duration_range", DEFAULT_DURATION_RANGE)),
        shared_order=bool(d.pop("shared_order", True)),
        random_offsets=bool(d.pop("random_offsets", False)),
    )
    if d:
        raise ValueError(f"unknown design keys: {sorted(d)}")

    lk = dict(cfg.get("link", {}))
    link = LinkConfig(
        symbol_snr_db=float(lk.pop("symbol_snr_db", 0.0)),
        equalizer=Equalizer.parse(lk.pop("equalizer", "genie")),
        master_seed=int(lk.pop("master_seed", design.seed)),
    )
    if lk:
        raise ValueError(f"unknown link keys: {sorted(lk)}")

    sw = dict(cfg.get("sweep", {}))
    out = dict(cfg.get("output", {}))
    spec = SweepSpec(
        geometry=geometry,
        ofdm=ofdm,
        design=design,
        link=link,
        elevation=_angle_range(sw.pop("elevation", None), AngleRange(0.0, 90.0, 1.0)),
        azimuth=_angle_range(sw.pop("azimuth", None), AngleRange(-90.0, 90.0, 1.0)),
        max_points=int(sw.pop("max_points", DEFAULT_MAX_POINTS)),
        workers=sw.pop("workers", None),
        out_csv=out.pop("csv", None),
        out_json=out.pop("json", None),
        out_pgm=out.pop("pgm", None),
        out_schedule=out.pop("schedule", None),
    )
    if sw or out:
        raise ValueError(f"unknown sweep/output keys: {sorted(sw) + sorted(out)}")
    return spec


def spec_to_config(spec: SweepSpec) -> dict[str, Any]:
    return {
        "geometry": geometry_to_dict(spec.geometry),
        "ofdm": {
            "n_subcarriers": spec.ofdm.n_subcarriers,
            "subcarrier_spacing": spec.ofdm.subcarrier_spacing,
            "carrier_freq": spec.ofdm.carrier_freq,
            "n_symbols": spec.ofdm.n_symbols,
        },
        "design": {
            "mode": DesignMode.parse(spec.design.mode).value,
            "seed": spec.design.seed,
            "delta_tau": spec.design.delta_tau,
            "hop_period": spec.design.hop_period,
            "n_hops": spec.design.n_hops,
            "duration_range": list(spec.design.duration_range),
            "shared_order": spec.design.shared_order,
            "random_offsets": spec.design.random_offsets,
        },
        "link": {
            "symbol_snr_db": spec.link.symbol_snr_db,
            "equalizer": spec.link.equalizer.value,
            "master_seed": spec.link.master_seed,
        },
        "sweep": {
            "elevation": [spec.elevation.start, spec.elevation.stop, spec.elevation.step],
            "azimuth": [spec.azimuth.start, spec.azimuth.stop, spec.azimuth.step],
            "max_points": spec.max_points,
            "workers": spec.workers,
        },
    }


def with_symbols(spec: SweepSpec, n_symbols: int) -> SweepSpec:
    ofdm = OfdmConfig(spec.ofdm.n_subcarriers, spec.ofdm.subcarrier_spacing, spec.ofdm.carrier_freq, n_symbols)
    return replace(spec, ofdm=ofdm)
