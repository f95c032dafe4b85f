"""Standard test spaces used across the test-suite, the CLI and the experiments."""

from __future__ import annotations

import numpy as np

from .shtspace import QuasiMetricSpace, euclidean_distances, verify_axioms


def one_point() -> QuasiMetricSpace:
    return verify_axioms([[0.0]], [1.0])


def two_point(d: float = 1.0) -> QuasiMetricSpace:
    return verify_axioms([[0.0, d], [d, 0.0]], [1.0, 1.0])


def path(n: int, masses=None) -> QuasiMetricSpace:
    """PATH(n): points 0..n-1 on a line, dist |i - j|, unit masses by default."""
    x = np.arange(n, dtype=float)
    mass = np.ones(n) if masses is None else masses
    return verify_axioms(np.abs(x[:, None] - x[None, :]), mass)


def rand2d(n: int = 64, seed: int = 0) -> QuasiMetricSpace:
    """RAND2D-n: n uniform points in the unit square, Euclidean, unit masses."""
    pts = np.random.default_rng(seed).random((n, 2))
    return verify_axioms(euclidean_distances(pts), np.ones(n))


def binary_ultrametric(depth: int = 3, scale: float = 0.9) -> QuasiMetricSpace:
    """2**depth points with d(i, j) = scale * 2**h, h the bit length of i XOR j.

    With delta = 1/2 the seed-0 grid on this space is the uniform binary tree.
    """
    n = 2**depth
    idx = np.arange(n)
    h = np.vectorize(lambda v: int(v).bit_length())(idx[:, None] ^ idx[None, :])
    dist = np.where(h > 0, scale * 2.0**h, 0.0)
    return verify_axioms(dist, np.ones(n))
