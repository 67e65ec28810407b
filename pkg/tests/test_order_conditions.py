import numpy as np
import pytest

from sspif import order_conditions as oc
from sspif.tableau import TsrkMethod, get_method, load_registry


def essprk33_as_one_step():
    """The Shu-Osher method in genuine k=1 storage."""
    return TsrkMethod(
        name="essprk33_k1", k=1, s=3, order=3,
        D=np.ones((3, 1)), Ahat=np.zeros((3, 0)),
        A=[[0, 0, 0], [1, 0, 0], [0.25, 0.25, 0]],
        theta=[1.0], bhat=np.zeros(0), b=[1 / 6, 1 / 6, 2 / 3],
    )


class TestStageResiduals:
    def test_forward_euler_tau2(self):
        tau2 = oc.stage_residual(get_method("forward_euler"), 2)
        assert np.array_equal(tau2, [0.0])

    def test_essprk33_tau2_hand_value(self):
        tau2 = oc.stage_residual(get_method("essprk33"), 2)
        assert np.allclose(tau2, [0.0, 0.5, -0.125], atol=1e-15)

    def test_rho_below_two_rejected(self):
        with pytest.raises(ValueError):
            oc.stage_residual(get_method("essprk33"), 1)

    def test_clean_stage_is_zero_for_all_rho(self):
        # first stage has c = 0 and zero coefficient rows
        m = get_method("essprk43")
        for rho in range(2, 8):
            assert oc.stage_residual(m, rho)[0] == 0.0


class TestResidualReports:
    def test_forward_euler(self):
        rep = oc.residuals_up_to(get_method("forward_euler"), 2)
        by_name = {c.name: c.value for c in rep.conditions}
        assert abs(by_name["b'e"]) == 0.0
        assert abs(by_name["b'c"]) == 0.5

    def test_essprk33(self):
        rep = oc.residuals_up_to(get_method("essprk33"), 4)
        assert rep.max_abs(up_to=3) <= 1e-15
        order4 = {c.name: abs(c.value) for c in rep.at_order(4)}
        assert abs(order4["b'C tau2"] - 1 / 24) <= 1e-15
        assert max(order4.values()) > 1e-3

    def test_condition_count_audit(self):
        rep = oc.residuals_up_to(get_method("essprk33"), 8)
        counts = tuple(len(rep.at_order(p)) for p in range(1, 9))
        assert counts == oc.CONDITION_COUNTS

    def test_p_out_of_range(self):
        with pytest.raises(ValueError):
            oc.residuals_up_to(get_method("essprk33"), 9)
        with pytest.raises(ValueError):
            oc.residuals_up_to(get_method("essprk33"), 0)

    def test_optimized_methods_meet_design_order(self):
        reg = load_registry()
        for name in ("tsrk22", "tsrk33", "tsrk34", "tsrk43", "tsrk44", "tsrk54"):
            m = reg[name]
            rep = oc.residuals_up_to(m, m.order)
            assert rep.max_abs() <= 1e-10, name


class TestAttainedOrder:
    def test_forward_euler(self):
        assert oc.attained_order(get_method("forward_euler"), 1e-12) == 1

    def test_essprk33(self):
        assert oc.attained_order(get_method("essprk33"), 1e-12) == 3

    def test_perturbation_drops_order(self):
        m = get_method("essprk33")
        b = m.b.copy()
        b[1] += 1e-3
        pert = TsrkMethod(
            name="pert", k=2, s=3, order=3,
            D=m.D, Ahat=m.Ahat, A=m.A, theta=m.theta, bhat=m.bhat, b=b,
        )
        assert oc.attained_order(pert, 1e-12) <= 2

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            oc.attained_order(get_method("essprk33"), 0.0)


class TestEmbeddingInvariance:
    def test_k1_matches_k2_embedding(self):
        rep1 = oc.residuals_up_to(essprk33_as_one_step(), 8)
        rep2 = oc.residuals_up_to(get_method("essprk33"), 8)
        vals1 = [c.value for c in rep1.conditions]
        vals2 = [c.value for c in rep2.conditions]
        assert len(vals1) == len(vals2)
        assert np.allclose(vals1, vals2, atol=1e-14)

    def test_k1_stage_residuals_match(self):
        t1 = oc.stage_residual(essprk33_as_one_step(), 2)
        t2 = oc.stage_residual(get_method("essprk33"), 2)
        assert np.allclose(t1, t2, atol=1e-15)
