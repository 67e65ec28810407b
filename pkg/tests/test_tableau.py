import numpy as np
import pytest

from sspif import certify, tableau
from sspif.tableau import (
    MethodFileError,
    TableauError,
    TsrkMethod,
    abscissas,
    from_spijker,
    get_method,
    load_method,
    load_registry,
    save_method,
    to_canonical,
    to_spijker,
)


def forward_euler():
    return get_method("forward_euler")


def random_method(rng, s, consistent_order1=True):
    """Random structurally valid k=2 tableau with nonnegative step weights."""
    d = np.concatenate([[0.0], rng.uniform(0.0, 1.0, s - 1)])
    D = np.column_stack([d, 1.0 - d])
    Ahat = np.zeros((s, 1))
    Ahat[1:, 0] = rng.uniform(0.0, 0.5, s - 1)
    A = np.tril(rng.uniform(0.0, 0.5, (s, s)), k=-1)
    A[0] = 0.0
    t1 = rng.uniform(0.0, 1.0)
    theta = np.array([t1, 1.0 - t1])
    bhat = rng.uniform(0.0, 0.3, 1)
    b = rng.uniform(0.0, 0.5, s)
    if consistent_order1:
        # enforce bhat + sum b = 1 + theta_1 by scaling
        target = 1.0 + t1
        scale = target / (bhat.sum() + b.sum())
        bhat, b = bhat * scale, b * scale
    return TsrkMethod(
        name="random", k=2, s=s, order=0,
        D=D, Ahat=Ahat, A=A, theta=theta, bhat=bhat, b=b,
    )


class TestSpijker:
    def test_forward_euler_blocks(self):
        f = to_spijker(forward_euler())
        assert np.array_equal(f.S, [[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        T = np.zeros((3, 3))
        T[2, 1] = 1.0
        assert np.array_equal(f.T, T)

    def test_row_sums_identity(self):
        rng = np.random.default_rng(2)
        for s in (1, 2, 4):
            f = to_spijker(random_method(rng, s))
            assert np.abs(f.S.sum(axis=1) - 1.0).max() <= 1e-12

    def test_essprk33_embedding_blocks(self):
        # hand block assembly: zero u^{n-1} weights, Butcher A inside T
        m = get_method("essprk33")
        f = to_spijker(m)
        assert np.all(np.triu(f.T) == 0.0)
        want_A = np.array([[0, 0, 0], [1, 0, 0], [0.25, 0.25, 0]])
        assert np.array_equal(f.T[1:4, 1:4], want_A)
        assert np.array_equal(f.T[4, 1:4], [1 / 6, 1 / 6, 2 / 3])
        assert np.all(f.T[:, 0] == 0.0)  # no F(u^{n-1}) use

    def test_block_extraction_roundtrip(self):
        rng = np.random.default_rng(4)
        m = random_method(rng, 3)
        back = from_spijker(to_spijker(m))
        for label in ("D", "Ahat", "A", "theta", "bhat", "b"):
            assert np.array_equal(getattr(m, label), getattr(back, label))


class TestAbscissas:
    def test_forward_euler(self):
        # (u^{n-1}, y_1, u^{n+1}) rows
        assert np.array_equal(abscissas(forward_euler()), [-1.0, 0.0, 1.0])

    def test_eq10_base_method(self):
        c = abscissas(get_method("essprk33p"))
        assert np.allclose(c, [-1.0, 0.0, 2 / 3, 2 / 3, 1.0], atol=1e-15)

    def test_random_consistent_final_abscissa(self):
        rng = np.random.default_rng(6)
        for s in (1, 2, 5):
            c = abscissas(random_method(rng, s))
            assert abs(c[-1] - 1.0) <= 1e-12


class TestCanonical:
    def test_r_zero_degenerates(self):
        m = get_method("essprk43")
        can = to_canonical(m, 0.0)
        f = to_spijker(m)
        assert np.array_equal(can.R, f.S)
        assert np.all(can.P == 0.0)

    def test_essprk33_at_r1_matches_shu_osher_weights(self):
        can = to_canonical(get_method("essprk33"), 1.0)
        # stage rows: u^(1) = 1*(u^n + dt F); u^(2) = 3/4 u^n + 1/4 (...);
        # u^{n+1} = 1/3 u^n + 2/3 (...)
        assert np.allclose(can.R[:, 1], [0, 1, 0, 0.75, 1 / 3], atol=1e-14)
        want_P = np.zeros((5, 5))
        want_P[2, 1] = 1.0
        want_P[3, 2] = 0.25
        want_P[4, 3] = 2 / 3
        assert np.allclose(can.P, want_P, atol=1e-14)

    def test_row_sum_identity_random(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            m = random_method(rng, 3)
            can = to_canonical(m, rng.uniform(0.0, 0.5))
            assert can.row_sum_defect() <= 1e-12

    def test_registered_methods_canonical_at_certified(self):
        for name, m in load_registry().items():
            can = to_canonical(m, m.certified_C)
            assert can.row_sum_defect() <= 1e-12, name
            assert can.R.min() >= -1e-12, name
            assert can.P.min() >= -1e-12, name


class TestMethodFiles:
    def test_roundtrip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(10)
        m = random_method(rng, 4)
        path = tmp_path / "m.txt"
        save_method(m, path)
        back = load_method(path)
        for label in ("D", "Ahat", "A", "theta", "bhat", "b"):
            assert np.array_equal(getattr(m, label), getattr(back, label))

    def test_non_lower_triangular_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(
            "name = bad\nk = 2\ns = 2\norder = 1\n"
            "D = 0 1 0 1\nAhat = 0 0\n"
            "A = 0 0.5 0.5 0\n"  # upper entry nonzero
            "theta = 0 1\nbhat = 0\nb = 0.5 0.5\n"
        )
        with pytest.raises(MethodFileError):
            load_method(path)

    def test_wrong_count_diagnostic(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(
            "name = bad\nk = 2\ns = 2\norder = 1\n"
            "D = 0 1 0\nAhat = 0 0\nA = 0 0 0 0\n"
            "theta = 0 1\nbhat = 0\nb = 1 0\n"
        )
        with pytest.raises(MethodFileError, match="D"):
            load_method(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("name = bad\nk = 2\ns = 1\n")
        with pytest.raises(MethodFileError, match="order"):
            load_method(path)

    def test_non_numeric_entry(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(
            "name = bad\nk = 2\ns = 1\norder = 1\n"
            "D = 0 1\nAhat = q\nA = 0\ntheta = 0 1\nbhat = 0\nb = 1\n"
        )
        with pytest.raises(MethodFileError, match="Ahat"):
            load_method(path)

    def test_comments_and_unknown_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# comment\njust some words\n")
        with pytest.raises(MethodFileError, match="key = value"):
            load_method(path)

    def test_user_dir_shadows_builtin(self, tmp_path):
        m = get_method("forward_euler")
        shadow = TsrkMethod(
            name="forward_euler", k=2, s=1, order=1,
            D=[[0.0, 1.0]], Ahat=np.zeros((1, 1)), A=np.zeros((1, 1)),
            theta=[0.0, 1.0], bhat=[0.5], b=[0.5],
        )
        save_method(shadow, tmp_path / "forward_euler.txt")
        got = get_method("forward_euler", [str(tmp_path)])
        assert got.bhat[0] == 0.5 and m.bhat[0] == 0.0


class TestRegistryContents:
    def test_paper_base_methods_shipped(self):
        reg = load_registry()
        # non-decreasing abscissa third-order base method, C = 3/4
        assert abs(reg["essprk33p"].certified_C - 0.75) <= 1e-6
        # Shu-Osher method, C = 1
        assert abs(reg["essprk33"].certified_C - 1.0) <= 1e-6
        for name in ("forward_euler", "essprk43", "tsrk22", "tsrk33",
                     "tsrk34", "tsrk43", "tsrk44", "tsrk54"):
            assert name in reg

    def test_optimized_methods_monotone(self):
        reg = load_registry()
        for name in ("tsrk22", "tsrk33", "tsrk34", "tsrk43", "tsrk44", "tsrk54"):
            c = abscissas(reg[name])
            chain = c[1:]
            assert np.all(np.diff(chain) >= -1e-12), name
            assert certify.abscissa_monotone(c), name

    def test_unknown_method(self):
        with pytest.raises(KeyError):
            get_method("no_such_method")


class TestValidation:
    def test_rejects_upper_triangular_A(self):
        with pytest.raises(TableauError):
            TsrkMethod(
                name="x", k=2, s=2, order=1,
                D=[[0, 1], [0, 1]], Ahat=np.zeros((2, 1)),
                A=[[0.0, 0.1], [0.5, 0.0]],
                theta=[0, 1], bhat=[0], b=[0.5, 0.5],
            )

    def test_rejects_bad_row_sums(self):
        with pytest.raises(TableauError):
            TsrkMethod(
                name="x", k=2, s=1, order=1,
                D=[[0.0, 0.9]], Ahat=np.zeros((1, 1)), A=np.zeros((1, 1)),
                theta=[0, 1], bhat=[0], b=[1.0],
            )

    def test_rejects_dirty_first_stage(self):
        with pytest.raises(TableauError):
            TsrkMethod(
                name="x", k=2, s=2, order=1,
                D=[[0.5, 0.5], [0, 1]], Ahat=np.zeros((2, 1)),
                A=np.zeros((2, 2)), theta=[0, 1], bhat=[0], b=[0.5, 0.5],
            )
