import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from tmirs.design import design_planar, design_weights
from tmirs.geometry import Direction, OfdmConfig, SystemGeometry, array_factor, transmit_gain
from tmirs.harmonics import (
    ScramblingOperator,
    TmGrid,
    TmSchedule,
    UnitTmParams,
    gate_fourier_coeff,
    harmonic_coeff,
    scramble,
    scrambling_operator,
)
from tmirs.oracle import gate_intervals

from .conftest import random_direction


def gate_coeff_by_quadrature(h, tau_on, delta_tau):
    """Fourier coefficient of the 0/1 gate by numerical integration over one period."""
    total = 0j
    for iv in gate_intervals(tau_on, delta_tau):
        re = quad(lambda u: math.cos(2 * math.pi * h * u), iv.start, iv.end, limit=200)[0]
        im = quad(lambda u: -math.sin(2 * math.pi * h * u), iv.start, iv.end, limit=200)[0]
        total += re + 1j * im
    return total


def random_grid(rng, shape, full_on=False):
    tau = rng.random(shape)
    dur = np.ones(shape) if full_on else rng.uniform(0.05, 1.0, shape)
    w = np.exp(2j * np.pi * rng.random(shape))
    return TmGrid(tau, dur, w)


class TestGateCoefficient:
    def test_dc_is_duty_cycle(self):
        assert gate_fourier_coeff(0, 0.37, 0.42) == pytest.approx(0.42, abs=1e-15)

    def test_always_on_has_no_harmonics(self):
        assert gate_fourier_coeff(3, 0.2, 1.0) == 0
        assert np.all(gate_fourier_coeff(np.arange(1, 200), 0.71, 1.0) == 0)
        assert np.all(gate_fourier_coeff(np.array([2, 4, 6]), 0.3, 0.5) == 0)

    def test_half_duty_first_harmonic(self):
        # (1/T) int_0^{T/2} exp(-j 2 pi t / T) dt = -j/pi
        expected = gate_coeff_by_quadrature(1, 0.0, 0.5)
        assert expected == pytest.approx(-1j / math.pi, abs=1e-12)
        assert gate_fourier_coeff(1, 0.0, 0.5) == pytest.approx(-1j / math.pi, abs=1e-15)

    @pytest.mark.parametrize("bad", [0.0, -0.1, 1.01])
    def test_rejects_bad_duration(self, bad):
        with pytest.raises(ValueError):
            gate_fourier_coeff(1, 0.1, bad)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(-20, 20),
        st.floats(0, 1, exclude_max=True),
        st.floats(0.01, 1.0),
    )
    def test_matches_wrapped_piecewise_integral(self, h, tau_on, delta_tau):
        ref = gate_coeff_by_quadrature(h, tau_on, delta_tau)
        assert abs(gate_fourier_coeff(h, tau_on, delta_tau) - ref) < 1e-12

    def test_wrap_cases_explicitly(self):
        for tau_on, dt in [(15 / 16, 0.7), (0.9, 0.5), (0.5, 1.0)]:
            for h in range(-5, 6):
                ref = gate_coeff_by_quadrature(h, tau_on, dt)
                assert abs(gate_fourier_coeff(h, tau_on, dt) - ref) < 1e-12

    @pytest.mark.parametrize("dt", [0.1, 0.3, 0.7, 0.95])
    def test_parseval_bound(self, dt):
        h = np.arange(-10_000, 10_001)
        power = np.sum(np.abs(gate_fourier_coeff(h, 0.123, dt)) ** 2)
        assert power <= dt + 1e-6
        assert power > dt - 1e-4


class TestUnitParams:
    def test_valid(self):
        p = UnitTmParams(0.9, 0.7, 1j)
        assert p.tau_off == pytest.approx(0.6)

    @pytest.mark.parametrize("args", [(1.0, 0.5, 1), (-0.1, 0.5, 1), (0.1, 0.0, 1), (0.1, 0.5, 0.9)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            UnitTmParams(*args)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            TmGrid(np.zeros((2, 2)), np.ones((2, 3)), np.ones((2, 2)))
        with pytest.raises(ValueError):
            TmGrid(np.zeros((2, 2)), np.ones((2, 2)), 2 * np.ones((2, 2)))

    def test_schedule_hop_lookup(self):
        g0 = TmGrid(np.zeros((1, 2)), np.full((1, 2), 0.5), np.ones((1, 2)))
        g1 = TmGrid(np.full((1, 2), 0.5), np.full((1, 2), 0.5), np.ones((1, 2)))
        sched = TmSchedule(g0, hop_sequence=(g0, g1), hop_period=3)
        assert [sched.grid_index(mu) for mu in range(8)] == [0, 0, 0, 1, 1, 1, 0, 0]
        with pytest.raises(ValueError):
            TmSchedule(g0, hop_sequence=(g0, g1), hop_period=0)


class TestHarmonicCoeff:
    def test_legit_dc_equals_duration(self):
        g = SystemGeometry()
        w = design_weights(g)
        for m, n in [(0, 0), (3, 11), (15, 15)]:
            p = UnitTmParams(0.3, 0.7, complex(w[m, n]))
            b = harmonic_coeff(g, m, n, p, 0, g.legit_direction)
            assert b == pytest.approx(0.7, abs=1e-12)

    def test_always_on_unit(self):
        g = SystemGeometry()
        p = UnitTmParams(0.2, 1.0, 1j)
        assert abs(harmonic_coeff(g, 2, 3, p, 4, Direction(0.3, 0.2))) < 1e-15

    def test_factorwise(self, rng):
        g = SystemGeometry(irs_rows=5, irs_cols=6)
        for _ in range(20):
            m, n = int(rng.integers(5)), int(rng.integers(6))
            p = UnitTmParams(rng.random(), rng.uniform(0.05, 1), np.exp(2j * np.pi * rng.random()))
            h = int(rng.integers(-10, 11))
            d = random_direction(rng)
            tx = Direction(g.tx_elevation_from_irs, g.tx_azimuth_from_irs)
            expected = (
                array_factor(g, m, n, d)
                * array_factor(g, m, n, tx)
                * p.weight
                * gate_coeff_by_quadrature(h, p.tau_on, p.delta_tau)
            )
            b = harmonic_coeff(g, m, n, p, h, d)
            assert b == pytest.approx(expected, abs=1e-12)
            assert abs(b) <= p.delta_tau + 1e-15


class TestScramblingOperator:
    def test_matches_brute_force_entries(self, rng):
        # every (i, s) entry from the per-unit double sum, on 8x8 IRS and 16 subcarriers
        g = SystemGeometry(irs_rows=8, irs_cols=8, tx_elements=3, path_loss=0.5 - 0.2j)
        ofdm = OfdmConfig(n_subcarriers=16)
        for _ in range(3):
            grid = random_grid(rng, (8, 8))
            d = random_direction(rng)
            op = scrambling_operator(g, ofdm, grid, d)
            full = np.zeros((16, 16), dtype=complex)
            for i in range(16):
                for s in range(16):
                    full[i, s] = transmit_gain(g) * sum(
                        harmonic_coeff(g, m, n, p, i - s, d) for m, n, p in grid.units()
                    )
            assert np.max(np.abs(op.matrix() - full)) <= 1e-12 * np.max(np.abs(full))

    def test_planar_default_is_diagonal_at_legit(self, default_geometry, default_ofdm):
        sched = design_planar(default_geometry, 7)
        op = scrambling_operator(default_geometry, default_ofdm, sched.grid, default_geometry.legit_direction)
        assert op.diagonal == pytest.approx(1433.6, abs=1e-6)
        off = np.delete(np.abs(op.toeplitz_coeffs), 63)
        assert off.max() < 1e-9 * abs(op.diagonal)

    def test_always_on_never_scrambles(self, rng):
        g = SystemGeometry(irs_rows=4, irs_cols=4)
        ofdm = OfdmConfig(n_subcarriers=12)
        grid = random_grid(rng, (4, 4), full_on=True)
        for _ in range(10):
            op = scrambling_operator(g, ofdm, grid, random_direction(rng))
            off = np.delete(np.abs(op.toeplitz_coeffs), 11)
            assert off.max() < 1e-13 * max(abs(op.diagonal), 1.0)

    def test_dimension_mismatch(self, rng):
        g = SystemGeometry(irs_rows=4, irs_cols=4)
        with pytest.raises(ValueError):
            scrambling_operator(g, OfdmConfig(), random_grid(rng, (4, 5)), Direction(0.1, 0.1))

    def test_coeff_indexing(self):
        op = ScramblingOperator(Direction(0, 0), np.arange(-2, 3) + 0j)
        assert op.coeff(-2) == -2 and op.coeff(2) == 2
        # T[i, s] = c[i - s]
        assert op.matrix()[2, 0] == 2 and op.matrix()[0, 2] == -2
        with pytest.raises(IndexError):
            op.coeff(3)


class TestScramble:
    def test_identity_like(self, rng):
        c = np.zeros(15, dtype=complex)
        c[7] = 2.5 - 1j
        op = ScramblingOperator(Direction(0, 0), c)
        d = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert np.allclose(scramble(op, d), (2.5 - 1j) * d, atol=0, rtol=1e-15)

    def test_zero_input(self, rng):
        op = ScramblingOperator(Direction(0, 0), rng.standard_normal(15) + 0j)
        assert np.all(scramble(op, np.zeros(8)) == 0)

    def test_length_mismatch(self):
        op = ScramblingOperator(Direction(0, 0), np.ones(15, dtype=complex))
        with pytest.raises(ValueError):
            scramble(op, np.ones(7))

    def test_matches_triple_sum(self, rng):
        g = SystemGeometry(irs_rows=3, irs_cols=4, tx_elements=2)
        ofdm = OfdmConfig(n_subcarriers=6)
        grid = random_grid(rng, (3, 4))
        direction = random_direction(rng)
        d = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        out = scramble(scrambling_operator(g, ofdm, grid, direction), d)
        for i in range(6):
            ref = transmit_gain(g) * sum(
                d[s] * harmonic_coeff(g, m, n, p, i - s, direction)
                for s in range(6)
                for m, n, p in grid.units()
            )
            assert out[i] == pytest.approx(ref, abs=1e-12 * np.abs(out).max())

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        op = ScramblingOperator(Direction(0, 0), rng.standard_normal(31) + 1j * rng.standard_normal(31))
        a, b = (rng.standard_normal(16) + 1j * rng.standard_normal(16) for _ in range(2))
        alpha, beta = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        lhs = scramble(op, alpha * a + beta * b)
        rhs = alpha * scramble(op, a) + beta * scramble(op, b)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)

    def test_block_of_symbols(self, rng):
        op = ScramblingOperator(Direction(0, 0), rng.standard_normal(9) + 0j)
        block = rng.standard_normal((7, 5)) + 0j
        out = scramble(op, block)
        for row_in, row_out in zip(block, out):
            assert np.allclose(scramble(op, row_in), row_out)
