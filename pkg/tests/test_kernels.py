"""Baseline kernel formulas and their vectorized batch paths."""

import math

import numpy as np
import pytest

from isokernel.dataset import SparseVector, l1_distance
from isokernel.errors import ParameterError
from isokernel.kernels import Gaussian, Laplacian, gaussian, laplacian, make_kernel

from helpers import rand_sparse


class TestLaplacian:
    def test_zero_distance_gives_one(self):
        rng = np.random.default_rng(0)
        x = rand_sparse(rng, 8)
        assert laplacian(x, x, psi=16, dim=8) == 1.0

    def test_lambda_formula_unit_check(self):
        # d=1 and psi=e make lambda exactly 1, so unit distance -> e^-1
        x = SparseVector([1], [2.0], 1)
        y = SparseVector([1], [3.0], 1)
        assert laplacian(x, y, psi=math.e, dim=1) == pytest.approx(
            math.exp(-1.0), abs=1e-15
        )

    def test_matches_dense_two_pass_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            dim = int(rng.integers(1, 20))
            x = rand_sparse(rng, dim, density=rng.uniform(0, 1))
            y = rand_sparse(rng, dim, density=rng.uniform(0, 1))
            psi = float(rng.uniform(2, 4096))
            lam = math.log(psi) / dim
            d1 = float(np.abs(x.densify(dim) - y.densify(dim)).sum())
            assert laplacian(x, y, psi=psi, dim=dim) == pytest.approx(
                math.exp(-lam * d1), abs=1e-12
            )

    def test_monotone_decreasing_in_l1(self):
        rng = np.random.default_rng(2)
        x = rand_sparse(rng, 6, density=1.0)
        pairs = []
        for _ in range(50):
            y = rand_sparse(rng, 6, density=1.0)
            pairs.append((l1_distance(x, y), laplacian(x, y, psi=64, dim=6)))
        pairs.sort()
        ks = [k for _, k in pairs]
        assert all(a >= b for a, b in zip(ks, ks[1:]))

    def test_parameter_validation(self):
        x = SparseVector([1], [1.0], 1)
        with pytest.raises(ParameterError):
            laplacian(x, x, psi=1.5, dim=1)
        with pytest.raises(ParameterError):
            laplacian(x, x, psi=4, dim=0)
        with pytest.raises(ParameterError):
            Laplacian(1, 3)


class TestGaussian:
    def test_zero_distance_gives_one(self):
        rng = np.random.default_rng(3)
        x = rand_sparse(rng, 5)
        assert gaussian(x, x, gamma=0.7) == 1.0

    def test_vanishing_bandwidth_limit(self):
        rng = np.random.default_rng(4)
        x, y = rand_sparse(rng, 5), rand_sparse(rng, 5)
        assert gaussian(x, y, gamma=1e-12) == pytest.approx(1.0, abs=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            x, y = rand_sparse(rng, 9), rand_sparse(rng, 9)
            gamma = float(rng.uniform(0.01, 3.0))
            sq = float(((x.densify(9) - y.densify(9)) ** 2).sum())
            assert gaussian(x, y, gamma=gamma) == pytest.approx(
                math.exp(-gamma * sq), abs=1e-12
            )

    def test_parameter_validation(self):
        x = SparseVector([1], [1.0], 1)
        with pytest.raises(ParameterError):
            gaussian(x, x, gamma=0.0)
        with pytest.raises(ParameterError):
            Gaussian(-1.0, 3)


class TestSharedProperties:
    @pytest.mark.parametrize(
        "k",
        [
            lambda x, y: laplacian(x, y, psi=32, dim=7),
            lambda x, y: gaussian(x, y, gamma=0.5),
        ],
    )
    def test_range_and_symmetry(self, k):
        rng = np.random.default_rng(6)
        for _ in range(50):
            x, y = rand_sparse(rng, 7), rand_sparse(rng, 7)
            v = k(x, y)
            assert 0.0 < v <= 1.0
            assert v == k(y, x)


class TestBatchPaths:
    @pytest.mark.parametrize(
        "kernel_obj",
        [Laplacian(psi=16, dim=6), Gaussian(gamma=0.4, dim=6)],
    )
    def test_batch_agrees_with_scalar_calls(self, kernel_obj):
        rng = np.random.default_rng(7)
        xs = [rand_sparse(rng, 6, density=0.7) for _ in range(9)]
        zs = [rand_sparse(rng, 6, density=0.7) for _ in range(13)]
        X = np.stack([kernel_obj.point_to_row(x) for x in xs])
        Z = np.stack([kernel_obj.point_to_row(z) for z in zs])
        K = kernel_obj.matrix(X, Z)
        for i, x in enumerate(xs):
            rows = kernel_obj.row_scores(X[i], Z)
            for j, z in enumerate(zs):
                expected = kernel_obj(x, z)
                assert K[i, j] == pytest.approx(expected, abs=1e-12)
                assert rows[j] == pytest.approx(expected, abs=1e-12)

    def test_params_round_trip(self):
        for obj in (Laplacian(psi=8, dim=4), Gaussian(gamma=1.1, dim=4)):
            clone = make_kernel(obj.params())
            assert clone.params() == obj.params()
