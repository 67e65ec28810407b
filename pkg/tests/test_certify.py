import numpy as np
import pytest

from sspif import certify, tableau
from sspif.certify import (
    CertifyError,
    abscissa_monotone,
    feasible_at,
    ssp_coefficient,
)
from sspif.tableau import TsrkMethod, get_method, load_registry, to_spijker


def linear_scan_coefficient(f, r_max, step=1e-4):
    r = 0.0
    while r + step <= r_max and feasible_at(f, r + step):
        r += step
    return r


class TestSspCoefficient:
    def test_essprk33_golden(self):
        C = ssp_coefficient(to_spijker(get_method("essprk33")))
        assert abs(C - 1.0) <= 1e-6

    def test_eq10_base_golden(self):
        C = ssp_coefficient(to_spijker(get_method("essprk33p")))
        assert abs(C - 0.75) <= 1e-6

    def test_zero_T_capped(self):
        # u^{n+1} = u^n: no derivative use at all, feasibility is vacuous
        m = TsrkMethod(
            name="copy", k=2, s=1, order=0,
            D=[[0.0, 1.0]], Ahat=np.zeros((1, 1)), A=np.zeros((1, 1)),
            theta=[0.0, 1.0], bhat=[0.0], b=[0.0],
        )
        f = to_spijker(m)
        assert ssp_coefficient(f, r_max=7.5) == 7.5

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            d = np.array([0.0, rng.uniform(0, 1)])
            m = TsrkMethod(
                name="rand", k=2, s=2, order=0,
                D=np.column_stack([d, 1 - d]),
                Ahat=[[0.0], [rng.uniform(0, 0.3)]],
                A=[[0, 0], [rng.uniform(0, 0.6), 0]],
                theta=[0.3, 0.7], bhat=[rng.uniform(0, 0.3)],
                b=rng.uniform(0, 0.6, 2),
            )
            f = to_spijker(m)
            C_bis = ssp_coefficient(f, tol=1e-8)
            C_scan = linear_scan_coefficient(f, certify.default_r_max(2))
            assert abs(C_bis - C_scan) <= 1e-4 + 1e-12

    def test_infeasible_at_zero_raises(self):
        # negative step weight: S has a negative entry, violating the
        # certifier's precondition
        m = TsrkMethod(
            name="neg", k=2, s=1, order=0,
            D=[[0.0, 1.0]], Ahat=np.zeros((1, 1)), A=np.zeros((1, 1)),
            theta=[-0.5, 1.5], bhat=[0.0], b=[1.0],
        )
        with pytest.raises(CertifyError):
            ssp_coefficient(to_spijker(m))

    def test_embedding_invariance(self):
        # certifying the one-step method in k=1 or embedded k=2 form agrees
        m1 = TsrkMethod(
            name="essprk33_k1", k=1, s=3, order=3,
            D=np.ones((3, 1)), Ahat=np.zeros((3, 0)),
            A=[[0, 0, 0], [1, 0, 0], [0.25, 0.25, 0]],
            theta=[1.0], bhat=np.zeros(0), b=[1 / 6, 1 / 6, 2 / 3],
        )
        C1 = ssp_coefficient(to_spijker(m1))
        C2 = ssp_coefficient(to_spijker(get_method("essprk33")))
        assert abs(C1 - 1.0) <= 1e-6 and abs(C1 - C2) <= 1e-6

    def test_registry_certified_values_reproduce(self):
        for name, m in load_registry().items():
            C = ssp_coefficient(to_spijker(m))
            assert abs(C - m.certified_C) <= 1e-4, name


class TestFeasibleAt:
    def test_consistent_method_feasible_at_zero(self):
        chk = feasible_at(to_spijker(get_method("essprk43")), 0.0)
        assert chk

    def test_essprk33_just_past_boundary(self):
        f = to_spijker(get_method("essprk33"))
        assert feasible_at(f, 0.99)
        chk = feasible_at(f, 1.01)
        assert not chk
        assert chk.min_entry < -1e-12

    def test_tsrk22_table_boundary(self):
        f = to_spijker(get_method("tsrk22"))
        assert feasible_at(f, 1.414)
        assert not feasible_at(f, 1.415)

    def test_monotone_feasibility(self):
        rng = np.random.default_rng(17)
        for name in ("essprk33", "tsrk33", "tsrk54"):
            f = to_spijker(get_method(name))
            C = ssp_coefficient(f)
            for r in rng.uniform(0.0, C, 20):
                assert feasible_at(f, r), (name, r)

    def test_negative_r_rejected(self):
        with pytest.raises(ValueError):
            feasible_at(to_spijker(get_method("essprk33")), -0.1)


class TestAbscissaMonotone:
    def test_eq10_chain(self):
        assert abscissa_monotone(np.array([0.0, 2 / 3, 2 / 3, 1.0]))

    def test_essprk33_chain_decreasing(self):
        assert not abscissa_monotone(np.array([0.0, 1.0, 0.5, 1.0]))

    def test_forward_euler_chain(self):
        assert abscissa_monotone(np.array([0.0, 1.0]))

    def test_full_vector_with_history_slot(self):
        c = tableau.abscissas(get_method("essprk33p"))
        assert abscissa_monotone(c)
        c2 = tableau.abscissas(get_method("essprk33"))
        assert not abscissa_monotone(c2)

    def test_endpoint_violations(self):
        assert not abscissa_monotone(np.array([0.0, 0.5, 0.9]))
        assert not abscissa_monotone(np.array([0.1, 0.5, 1.0]))
