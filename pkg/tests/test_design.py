import json
import math

import numpy as np
import pytest

from tmirs.design import (
    DesignMode,
    canonical_key,
    check_unique_hops,
    design_enhanced,
    design_linear,
    design_planar,
    design_weights,
    draw_distinct_durations,
    load_schedule,
    dump_schedule,
    root_of_unity_sums,
    theoretical_legit_gain,
    validate_schedule,
)
from tmirs.geometry import OfdmConfig, SystemGeometry, array_factor
from tmirs.harmonics import TmGrid, TmSchedule, scrambling_operator

from .conftest import random_direction


def geometric_row_sum(n_units, offset):
    # brute force sum_q exp(-j 2 pi offset q / N)
    return sum(complex(math.cos(-2 * math.pi * offset * q / n_units), math.sin(-2 * math.pi * offset * q / n_units))
               for q in range(n_units))


class TestWeights:
    def test_origin_unit(self, default_geometry):
        assert design_weights(default_geometry)[0, 0] == pytest.approx(1 + 0j, abs=1e-15)

    def test_broadside(self):
        g = SystemGeometry(tx_elevation_from_irs=0.0, legit_elevation=0.0)
        assert np.allclose(design_weights(g), 1.0, atol=1e-15)

    def test_conjugate_of_factor_product(self, rng):
        for _ in range(10):
            tx, legit = random_direction(rng), random_direction(rng)
            g = SystemGeometry(
                irs_rows=6, irs_cols=5,
                tx_elevation_from_irs=tx.elevation, tx_azimuth_from_irs=tx.azimuth,
                legit_elevation=legit.elevation, legit_azimuth=legit.azimuth,
            )
            w = design_weights(g)
            m, n = int(rng.integers(6)), int(rng.integers(5))
            prod = array_factor(g, m, n, legit) * array_factor(g, m, n, tx)
            assert w[m, n] == pytest.approx(prod.conjugate(), abs=1e-12)
            assert abs(prod * w[m, n] - 1) < 1e-12
            assert np.allclose(np.abs(w), 1.0, atol=1e-12)


class TestLinear:
    def test_identity_permutation_instants(self):
        g = SystemGeometry(irs_rows=1, irs_cols=4)
        sched = design_linear(g, "linear_column", 0, delta_tau=0.7, random_offsets=False)
        assert sorted(sched.grid.tau_on[0]) == [0.0, 0.25, 0.5, 0.75]

    def test_quarter_roots_cancel(self):
        tau = np.array([[0.0, 0.25, 0.5, 0.75]])
        for k in range(1, 12):
            s = root_of_unity_sums(tau, k, "linear_column")[0]
            if k % 4:
                assert abs(s) < 1e-12
            else:
                assert abs(s) == pytest.approx(4)

    def test_sixteen_units_offset_sixteen_survives(self):
        assert abs(geometric_row_sum(16, 16)) == pytest.approx(16, abs=1e-12)
        g = SystemGeometry()
        sched = design_linear(g, "linear_column", 3)
        sums = root_of_unity_sums(sched.grid.tau_on, 16, "linear_column")
        assert np.allclose(np.abs(sums), 16, atol=1e-10)

    @pytest.mark.parametrize("mode", ["linear_column", "linear_row"])
    def test_structure(self, mode):
        g = SystemGeometry(irs_rows=6, irs_cols=9)
        sched = design_linear(g, mode, 11)
        tau, dur = sched.grid.tau_on, sched.grid.delta_tau
        if mode == "linear_row":
            tau, dur = tau.T, dur.T
        per_line = tau.shape[1]
        for line_tau, line_dur in zip(tau, dur):
            off = line_tau.min()
            assert 0 <= off < 1 / per_line
            assert np.allclose(np.sort(line_tau) - off, np.arange(per_line) / per_line, atol=1e-15)
            assert np.all(line_dur == line_dur[0])
        line_durations = dur[:, 0]
        gaps = np.abs(line_durations[:, None] - line_durations[None, :])[~np.eye(len(line_durations), dtype=bool)]
        assert gaps.min() >= 1e-3
        assert np.all((line_durations >= 0.3) & (line_durations <= 0.9))

    def test_needs_two_units_per_line(self):
        with pytest.raises(ValueError):
            design_linear(SystemGeometry(irs_rows=4, irs_cols=1), "linear_column", 0)
        with pytest.raises(ValueError):
            design_linear(SystemGeometry(irs_rows=1, irs_cols=4), "linear_row", 0)

    def test_determinism(self):
        g = SystemGeometry()
        a = design_linear(g, "linear_column", 5).grid
        b = design_linear(g, "linear_column", 5).grid
        assert a == b
        assert canonical_key(a) == canonical_key(b)

    def test_diversity_coverage(self):
        g = SystemGeometry(irs_rows=4, irs_cols=4)
        orders, durations, offsets = set(), set(), set()
        for seed in range(100):
            grid = design_linear(g, "linear_column", seed).grid
            orders.add(tuple(np.argsort(grid.tau_on[0])))
            durations.add(float(grid.delta_tau[0, 0]))
            offsets.add(float(grid.tau_on[0].min()))
        assert len(orders) > 1 and len(durations) > 1 and len(offsets) > 1


class TestPlanar:
    def test_full_surface_cancels(self, default_geometry):
        sched = design_planar(default_geometry, 1)
        for k in range(1, 64):
            s = root_of_unity_sums(sched.grid.tau_on, k, "planar")[0]
            assert abs(s) < 1e-10 * 256

    def test_multiple_of_surface_survives(self):
        sched = design_planar(SystemGeometry(irs_rows=2, irs_cols=2), 0)
        assert abs(root_of_unity_sums(sched.grid.tau_on, 4, "planar")[0]) == pytest.approx(4)

    def test_sorted_instants(self):
        g = SystemGeometry(irs_rows=3, irs_cols=5)
        tau = np.sort(design_planar(g, 9).grid.tau_on.ravel())
        offset = tau[0]
        assert 0 <= offset < 1 / 15
        assert np.allclose(tau - offset, np.arange(15) / 15, atol=1e-15)
        diffs = np.abs(tau[:, None] - tau[None, :])[~np.eye(15, dtype=bool)]
        assert np.allclose(diffs * 15, np.round(diffs * 15), atol=1e-12) and diffs.min() > 0

    def test_degenerate(self):
        with pytest.raises(ValueError):
            design_planar(SystemGeometry(irs_rows=1, irs_cols=1), 0)


class TestEnhanced:
    def test_full_scale_hop_plan(self, default_geometry):
        sched = design_enhanced(default_geometry, "linear_column", hop_period=256, n_hops=64, rng_seed=2)
        assert len(sched.hop_sequence) == 64 and sched.hop_period == 256
        assert len({canonical_key(g) for g in sched.hop_sequence}) == 64
        assert sched.grid_index(2**14 - 1) == 63

    def test_single_hop_equals_linear(self, default_geometry):
        one = design_enhanced(default_geometry, "linear_column", n_hops=1, rng_seed=4)
        assert not one.hop_sequence
        assert one.grid == design_linear(default_geometry, "linear_column", 4).grid

    def test_duplicate_hops_rejected(self, default_geometry):
        g = design_linear(default_geometry, "linear_column", 8).grid
        with pytest.raises(ValueError, match="repeats"):
            check_unique_hops([g, design_linear(default_geometry, "linear_column", 8).grid])

    def test_range_too_narrow(self, default_geometry):
        with pytest.raises(ValueError, match="cannot hold"):
            design_enhanced(default_geometry, duration_range=(0.5, 0.505), n_hops=2)

    def test_distinct_duration_sampler(self, rng):
        x = draw_distinct_durations(16, (0.3, 0.9), rng)
        assert len(set(x)) == 16


class TestValidate:
    def test_planar_default_surface(self, default_geometry, default_ofdm):
        rep = validate_schedule(default_geometry, default_ofdm, design_planar(default_geometry, 0))
        assert rep.max_offdiag_residual < 1e-10
        assert rep.surviving_offsets == []
        assert rep.passed

    def test_linear_column_offsets(self, default_geometry, default_ofdm):
        sched = design_linear(default_geometry, "linear_column", 0, delta_tau=0.7, shared_order=True,
                              random_offsets=False)
        rep = validate_schedule(default_geometry, default_ofdm, sched)
        assert set(rep.surviving_offsets) <= {16, 32, 48}
        assert rep.surviving_offsets == [16, 32, 48]
        assert rep.structural_residual < 1e-10
        assert rep.max_offdiag_residual == pytest.approx(abs(math.sin(16 * math.pi * 0.7) / (16 * math.pi * 0.7)),
                                                         rel=1e-9)
        assert rep.passed

    def test_always_on_residual_zero(self, default_geometry, default_ofdm, rng):
        grid = TmGrid(rng.random((16, 16)), np.ones((16, 16)), design_weights(default_geometry))
        rep = validate_schedule(default_geometry, default_ofdm, TmSchedule(grid))
        assert rep.max_offdiag_residual < 1e-12

    def test_broken_schedule_fails(self, default_geometry, default_ofdm, rng):
        grid = TmGrid(rng.random((16, 16)), np.full((16, 16), 0.7), design_weights(default_geometry))
        rep = validate_schedule(default_geometry, default_ofdm, TmSchedule(grid, mode="planar"))
        assert not rep.passed


class TestLegitGain:
    def test_default_surface(self, default_geometry):
        assert theoretical_legit_gain(default_geometry, design_planar(default_geometry, 0)) == pytest.approx(1433.6)

    def test_trivial(self):
        g = SystemGeometry(irs_rows=1, irs_cols=1, tx_elements=1)
        grid = TmGrid(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
        assert theoretical_legit_gain(g, grid) == 1

    def test_per_row_sum(self):
        g = SystemGeometry(irs_rows=2, irs_cols=16, tx_elements=8)
        dur = np.repeat(np.array([[0.5], [0.7]]), 16, axis=1)
        tau = np.tile(np.arange(16) / 16, (2, 1))
        grid = TmGrid(tau, dur, design_weights(g))
        assert theoretical_legit_gain(g, grid) == pytest.approx(153.6, abs=1e-12)
        op = scrambling_operator(g, OfdmConfig(n_subcarriers=8), grid, g.legit_direction)
        assert op.diagonal == pytest.approx(153.6, rel=1e-9)

    @pytest.mark.parametrize("mode", list(DesignMode))
    def test_matches_operator_diagonal(self, mode, default_geometry, default_ofdm):
        if mode is DesignMode.PLANAR:
            sched = design_planar(default_geometry, 3)
        elif mode is DesignMode.ENHANCED_LINEAR:
            sched = design_enhanced(default_geometry, n_hops=3, rng_seed=3)
        else:
            sched = design_linear(default_geometry, mode, 3)
        for grid in sched.grids:
            op = scrambling_operator(default_geometry, default_ofdm, grid, default_geometry.legit_direction)
            assert op.diagonal == pytest.approx(theoretical_legit_gain(default_geometry, grid), rel=1e-9)

    def test_mismatch(self):
        grid = TmGrid(np.zeros((2, 2)), np.ones((2, 2)), np.ones((2, 2)))
        with pytest.raises(ValueError):
            theoretical_legit_gain(SystemGeometry(irs_rows=3, irs_cols=3), grid)


def test_schedule_json_roundtrip(tmp_path, default_geometry):
    sched = design_enhanced(default_geometry, hop_period=16, n_hops=3, rng_seed=1)
    path = tmp_path / "s.json"
    dump_schedule(default_geometry, sched, path)
    geo, back = load_schedule(path)
    assert geo.shape == default_geometry.shape
    assert geo.legit_elevation == pytest.approx(default_geometry.legit_elevation)
    assert back.hop_period == 16 and back.mode == "enhanced_linear" and back.seed == 1
    assert all(a == b for a, b in zip(back.hop_sequence, sched.hop_sequence))
    unit = json.loads(path.read_text())["units"][0][0]
    assert set(unit) == {"tau_on", "delta_tau", "weight_re", "weight_im"}
