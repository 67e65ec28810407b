import numpy as np
import pytest

from sspif import semidiscrete as sd
from sspif.semidiscrete import (
    GridFunction,
    PeriodicGrid,
    initial_condition,
    total_variation,
    upwind_matrix,
    weno5_divergence,
)


class TestGridTypes:
    def test_minimum_size(self):
        with pytest.raises(ValueError):
            PeriodicGrid(4)

    def test_dx(self):
        assert PeriodicGrid(100).dx == 0.01

    def test_gridfunction_validation(self):
        g = PeriodicGrid(8)
        with pytest.raises(ValueError):
            GridFunction(g, np.zeros(9))
        with pytest.raises(ValueError):
            GridFunction(g, np.full(8, np.inf))


class TestUpwind:
    def test_zero_wavespeed(self):
        assert np.all(upwind_matrix(0.0, PeriodicGrid(16)) == 0.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            upwind_matrix(-1.0, PeriodicGrid(16))

    def test_row_sums_vanish(self):
        for a, m in ((1.0, 16), (7.3, 33)):
            L = upwind_matrix(a, PeriodicGrid(m))
            assert np.abs(L.sum(axis=1)).max() == 0.0

    def test_forward_euler_tvd_at_bound(self):
        # dt = dx/a keeps the step initial data's TV at exactly 2
        g = PeriodicGrid(64)
        a = 3.7
        L = upwind_matrix(a, g)
        u = initial_condition("advection_step", g).values
        u1 = u + (g.dx / a) * (L @ u)
        assert total_variation(u1) <= total_variation(u) + 1e-13

    def test_forward_euler_tvd_random(self):
        rng = np.random.default_rng(1)
        g = PeriodicGrid(48)
        for _ in range(100):
            a = rng.uniform(0.0, 10.0)
            L = upwind_matrix(a, g)
            u = rng.standard_normal(g.m)
            dt = rng.uniform(0.0, 1.0) * g.dx / max(a, 1e-12)
            u1 = u + dt * (L @ u)
            assert total_variation(u1) <= total_variation(u) + 1e-13


class TestTotalVariation:
    def test_constant(self):
        assert total_variation(np.full(16, 3.2)) == 0.0

    def test_step_values(self):
        g = PeriodicGrid(16)
        assert total_variation(initial_condition("advection_step", g)) == 2.0
        assert total_variation(initial_condition("burgers_step", g)) == 2.0

    def test_cyclic_shift_invariance(self):
        rng = np.random.default_rng(3)
        u = rng.standard_normal(32)
        tv = total_variation(u)
        for shift in (1, 5, 17):
            assert abs(total_variation(np.roll(u, shift)) - tv) <= 1e-12


class TestInitialConditions:
    def test_advection_step_m8(self):
        g = PeriodicGrid(8)
        got = initial_condition("advection_step", g).values
        assert np.array_equal(got, [0, 0, 1, 1, 1, 1, 0, 0])

    def test_burgers_step_membership(self):
        # closed interval [0, 1/2]: the point x = 1/2 is included
        g = PeriodicGrid(8)
        got = initial_condition("burgers_step", g).values
        assert np.array_equal(got, [1, 1, 1, 1, 1, 0, 0, 0])

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            initial_condition("bump", PeriodicGrid(8))


class TestWeno5:
    def test_constant_field_zero(self):
        for m in (8, 40, 321):
            g = PeriodicGrid(m)
            out = weno5_divergence(GridFunction(g, np.full(m, 0.7))).values
            assert np.abs(out).max() <= 1e-14

    def test_smooth_convergence_order(self):
        errs = []
        ms = (40, 80, 160, 320)
        for m in ms:
            g = PeriodicGrid(m)
            x = g.points()
            u = np.sin(2 * np.pi * x)
            exact = -u * 2 * np.pi * np.cos(2 * np.pi * x)
            got = weno5_divergence(GridFunction(g, u)).values
            errs.append(np.abs(got - exact).max())
        slope = np.polyfit(np.log10([1.0 / m for m in ms]), np.log10(errs), 1)[0]
        assert slope >= 4.5

    def test_step_forward_euler_tv_controlled(self):
        g = PeriodicGrid(400)
        u = initial_condition("burgers_step", g)
        div = weno5_divergence(u)
        u1 = u.values + 0.1 * g.dx * div.values
        change = abs(total_variation(u1) - total_variation(u))
        assert change <= 1e-3

    def test_eno_limit_step_march_is_tv_clean(self):
        # the TVD-protocol regularization: iterated forward Euler steps on
        # the step data never raise TV beyond roundoff
        g = PeriodicGrid(400)
        N = sd.burgers_weno5_operator(g, eps=sd.WENO_EPS_TVD)
        u = initial_condition("burgers_step", g).values
        tvs = [total_variation(u)]
        for _ in range(25):
            u = u + 0.3 * g.dx * N(u)
            tvs.append(total_variation(u))
        assert max(np.diff(tvs)) <= 1e-13

    def test_mixed_sign_uses_split_fallback(self):
        # any finite answer with the analytic value on smooth data
        g = PeriodicGrid(128)
        x = g.points()
        u = np.sin(2 * np.pi * x)
        out = weno5_divergence(GridFunction(g, u)).values
        exact = -u * 2 * np.pi * np.cos(2 * np.pi * x)
        assert np.abs(out - exact).max() <= 1e-3

    def test_wavespeed_bound_floors_alpha(self):
        g = PeriodicGrid(64)
        u = GridFunction(g, np.zeros(64))
        out = weno5_divergence(u, wavespeed_bound=2.0).values
        assert np.abs(out).max() <= 1e-14
