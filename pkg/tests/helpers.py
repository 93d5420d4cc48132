"""Shared generators for randomized tests. All take an explicit rng."""

import numpy as np

from isokernel.dataset import Dataset, LabeledPoint, SparseVector


def rand_sparse(rng, dim, density=0.5, scale=1.0):
    """Random sparse vector with ~density*dim nonzero normal entries."""
    nnz = int(rng.binomial(dim, density))
    if nnz == 0:
        return SparseVector([], [], dim)
    idx = np.sort(rng.choice(dim, size=nnz, replace=False)) + 1
    vals = rng.standard_normal(nnz) * scale
    vals[vals == 0.0] = 1.0
    return SparseVector(idx, vals, dim)


def rand_dataset(rng, n, dim, density=0.5, name="random"):
    points = [
        LabeledPoint(rand_sparse(rng, dim, density), int(rng.choice([-1, 1])))
        for _ in range(n)
    ]
    return Dataset(points, dim=dim, name=name)


def uniform_dataset(rng, n, dim, name="uniform"):
    """Dense points uniform on [0, 1]^dim."""
    X = rng.uniform(size=(n, dim))
    points = []
    for row in X:
        nz = np.flatnonzero(row)
        points.append(
            LabeledPoint(SparseVector(nz + 1, row[nz], dim), 1)
        )
    return Dataset(points, dim=dim, name=name)
