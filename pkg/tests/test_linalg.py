import numpy as np
import pytest

from mpca import as_matrix, center_columns, frobenius_norm, svd
from mpca.errors import NumericalError
from mpca.linalg import largest_principal_angle, rank_mask


class TestAsMatrix:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_matrix([[1.0, np.nan]])

    def test_rejects_inf(self):
        with pytest.raises(ValueError):
            as_matrix([[np.inf], [0.0]])

    def test_rejects_empty_and_1d(self):
        with pytest.raises(ValueError):
            as_matrix(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            as_matrix([1.0, 2.0])


class TestCenterColumns:
    def test_hand_example(self):
        centered, mean = center_columns([[1.0, 3.0], [2.0, 2.0]])
        np.testing.assert_allclose(centered, [[-1.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(mean, [2.0, 2.0])

    def test_identical_columns_center_to_zero(self):
        x = np.tile(np.array([[3.0], [7.0], [-1.0]]), (1, 5))
        centered, _ = center_columns(x)
        assert np.all(centered == 0.0)

    def test_row_sums_vanish(self, rng):
        x = rng.standard_normal((5, 7))
        centered, _ = center_columns(x)
        bound = 1e-9 * x.shape[1] * np.abs(x).max()
        assert np.abs(centered.sum(axis=1)).max() < bound

    def test_idempotent(self, rng):
        x = rng.standard_normal((6, 9)) * 10
        once, _ = center_columns(x)
        twice, _ = center_columns(once)
        np.testing.assert_allclose(twice, once, atol=1e-12)


class TestSvd:
    def test_diagonal_input(self):
        res = svd([[2.0, 0.0], [0.0, 1.0]], 2)
        np.testing.assert_allclose(res.s, [2.0, 1.0])
        np.testing.assert_allclose(np.abs(res.u), np.eye(2), atol=1e-12)
        np.testing.assert_allclose(np.abs(res.v), np.eye(2), atol=1e-12)

    def test_exchange_input(self):
        res = svd([[0.0, 1.0], [1.0, 0.0]], 2)
        np.testing.assert_allclose(res.s, [1.0, 1.0])

    def test_reconstruction(self, rng):
        a = rng.standard_normal((6, 4))
        res = svd(a, 4)
        np.testing.assert_allclose(res.u @ np.diag(res.s) @ res.v.T, a, atol=1e-8)

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError):
            svd(np.eye(3), 0)
        with pytest.raises(ValueError):
            svd(np.eye(3), 4)

    def test_sign_convention_deterministic(self, rng):
        a = rng.standard_normal((5, 5))
        res = svd(a, 5)
        for j in range(5):
            col = res.u[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_orthonormality_and_reconstruction_random(self):
        # >= 100 random matrices with shapes up to 50x50
        gen = np.random.default_rng(42)
        for _ in range(100):
            m = int(gen.integers(1, 51))
            n = int(gen.integers(1, 51))
            a = gen.standard_normal((m, n))
            r = min(m, n)
            res = svd(a, r)
            assert np.abs(res.u.T @ res.u - np.eye(r)).max() <= 1e-10
            assert np.abs(res.v.T @ res.v - np.eye(r)).max() <= 1e-10
            assert np.all(np.diff(res.s) <= 0) and np.all(res.s >= 0)
            err = np.linalg.norm(a - res.u @ np.diag(res.s) @ res.v.T)
            assert err <= 1e-8 * max(1.0, np.linalg.norm(a))

    def test_eckart_young(self):
        gen = np.random.default_rng(5)
        a = gen.standard_normal((12, 9))
        for r in (1, 3, 5):
            res = svd(a, r)
            best = np.linalg.norm(a - res.u @ np.diag(res.s) @ res.v.T)
            for _ in range(50):
                q, _ = np.linalg.qr(gen.standard_normal((12, r)))
                rival = np.linalg.norm(a - q @ (q.T @ a))
                assert best <= rival + 1e-12

    def test_transpose_same_singular_values(self, rng):
        a = rng.standard_normal((8, 5))
        s1 = svd(a, 5).s
        s2 = svd(a.T, 5).s
        np.testing.assert_allclose(s1, s2, atol=1e-10)

    def test_nonconvergence_surfaces_numerical_error(self, monkeypatch):
        def always_fail(*args, **kwargs):
            raise np.linalg.LinAlgError("SVD did not converge")

        monkeypatch.setattr(np.linalg, "svd", always_fail)
        with pytest.raises(NumericalError, match="2 attempts"):
            svd(np.eye(3), 2)

    def test_transposed_retry_recovers(self, rng, monkeypatch):
        real_svd = np.linalg.svd
        a = rng.standard_normal((6, 4))
        calls = {"n": 0}

        def fail_once(mat, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise np.linalg.LinAlgError("SVD did not converge")
            return real_svd(mat, **kwargs)

        monkeypatch.setattr(np.linalg, "svd", fail_once)
        res = svd(a, 4)
        np.testing.assert_allclose(res.u @ np.diag(res.s) @ res.v.T, a, atol=1e-8)


class TestFrobeniusNorm:
    def test_three_four_five(self):
        assert frobenius_norm([[3.0, 4.0]]) == pytest.approx(5.0, abs=1e-12)

    def test_zero(self):
        assert frobenius_norm(np.zeros((3, 2))) == 0.0

    def test_matches_summation_oracle(self, rng):
        a = rng.standard_normal((4, 4))
        oracle = np.sqrt(sum(float(v) ** 2 for v in a.ravel()))
        assert frobenius_norm(a) == pytest.approx(oracle, rel=1e-12)


def test_rank_mask_zero_matrix():
    assert not rank_mask(np.zeros(3)).any()


def test_largest_principal_angle_bounds(rng):
    q, _ = np.linalg.qr(rng.standard_normal((7, 2)))
    assert largest_principal_angle(q, q) == pytest.approx(0.0, abs=1e-7)
    other = np.zeros((7, 1))
    other[6, 0] = 1.0
    assert largest_principal_angle(q[:, :1], other) <= np.pi / 2 + 1e-12
