"""Finite spaces of homogeneous type.

A space is a finite point set ``0..n-1`` with a symmetric quasi-metric and
positive point masses. ``verify_axioms`` certifies the axioms and computes
the smallest quasi-triangle constant ``kappa`` and the doubling constant
``c_mu`` exactly, so every downstream constant is sound on the given data.

Balls are strict: ``y in B(x, r)`` iff ``dist(x, y) < r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    AsymmetricDistance,
    MalformedDocument,
    NegativeMass,
    NonpositiveRadius,
    ZeroDistanceDistinctPoints,
)


@dataclass(frozen=True, eq=False)
class QuasiMetricSpace:
    dist: np.ndarray
    mass: np.ndarray
    kappa: float
    c_mu: float
    n_bound: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_bound", geometric_doubling_bound(self.kappa, self.c_mu))

    @property
    def n(self) -> int:
        return len(self.mass)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    def measure(self, members) -> float:
        idx = np.fromiter(members, dtype=int) if not isinstance(members, np.ndarray) else members
        if idx.dtype == bool:
            return float(self.mass[idx].sum())
        return float(self.mass[idx].sum()) if idx.size else 0.0

    @cached_property
    def _sorted(self):
        # Per-center sorted distances; a prefix ending at a tie-group end is a ball.
        order = np.argsort(self.dist, axis=1, kind="stable")
        sdist = np.take_along_axis(self.dist, order, axis=1)
        group_end = np.ones_like(sdist, dtype=bool)
        group_end[:, :-1] = sdist[:, :-1] < sdist[:, 1:]
        return order, sdist, group_end


def geometric_doubling_bound(kappa: float, c_mu: float) -> float:
    return c_mu ** (6.0 + 3.0 * math.log2(kappa))


def _min_plus_detour(dist: np.ndarray) -> np.ndarray:
    """min_j dist(i,j) + dist(j,k), accumulated one pivot at a time."""
    n = len(dist)
    best = np.full_like(dist, np.inf)
    tmp = np.empty_like(dist)
    for j in range(n):
        np.add(dist[:, j, None], dist[None, j, :], out=tmp)
        np.minimum(best, tmp, out=best)
    return best


def quasi_triangle_constant(dist: np.ndarray) -> float:
    """Smallest kappa >= 1 with d(i,k) <= kappa (d(i,j) + d(j,k)) for all triples."""
    if len(dist) < 2:
        return 1.0
    detour = _min_plus_detour(dist)
    off = ~np.eye(len(dist), dtype=bool)
    ratio = dist[off] / detour[off]
    return max(1.0, float(ratio.max()))


def verify_axioms(dist, mass) -> QuasiMetricSpace:
    dist = np.array(dist, dtype=float)
    mass = np.array(mass, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or mass.shape != (dist.shape[0],):
        raise MalformedDocument(f"distance matrix {dist.shape} and masses {mass.shape} disagree")
    if dist.shape[0] < 1:
        raise MalformedDocument("a space needs at least one point")
    if not (np.all(np.isfinite(dist)) and np.all(np.isfinite(mass))):
        raise MalformedDocument("distances and masses must be finite")
    if np.any(dist < 0):
        i, j = np.argwhere(dist < 0)[0]
        raise MalformedDocument(f"negative distance d({i},{j})")
    bad = np.argwhere(mass <= 0)
    if bad.size:
        raise NegativeMass(f"mass({bad[0][0]}) = {mass[bad[0][0]]} is not positive")
    if np.any(np.diag(dist) != 0):
        i = int(np.flatnonzero(np.diag(dist) != 0)[0])
        raise MalformedDocument(f"d({i},{i}) must be 0")
    zero = (dist == 0) & ~np.eye(len(dist), dtype=bool)
    if zero.any():
        i, j = np.argwhere(zero)[0]
        raise ZeroDistanceDistinctPoints(f"d({i},{j}) = 0 for distinct points")
    asym = dist != dist.T
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise AsymmetricDistance(f"d({i},{j}) = {dist[i, j]} but d({j},{i}) = {dist[j, i]}")
    dist.setflags(write=False)
    mass.setflags(write=False)
    kappa = quasi_triangle_constant(dist)
    return QuasiMetricSpace(dist=dist, mass=mass, kappa=kappa, c_mu=_doubling(dist, mass))


def _doubling(dist: np.ndarray, mass: np.ndarray) -> float:
    # mu(B(x, r)) is constant for r in (d_a, d_{a+1}] while mu(B(x, 2r)) grows
    # with r, so the supremum over r is attained at r = d(x, y) for some y.
    best = 1.0
    for x in range(len(mass)):
        d = dist[x]
        order = np.argsort(d, kind="stable")
        sd = d[order]
        cum = np.concatenate([[0.0], np.cumsum(mass[order])])
        radii = np.unique(sd[sd > 0])
        if radii.size == 0:
            continue
        inner = cum[np.searchsorted(sd, radii, side="left")]
        outer = cum[np.searchsorted(sd, 2.0 * radii, side="left")]
        best = max(best, float((outer / inner).max()))
    return best


def doubling_constant(space: QuasiMetricSpace) -> float:
    return space.c_mu


def ball(space: QuasiMetricSpace, x: int, r: float) -> frozenset[int]:
    if not r > 0:
        raise NonpositiveRadius(f"radius must be positive, got {r}")
    return frozenset(np.flatnonzero(space.dist[x] < r).tolist())


def ball_mask(space: QuasiMetricSpace, x: int, r: float) -> np.ndarray:
    if not r > 0:
        raise NonpositiveRadius(f"radius must be positive, got {r}")
    return space.dist[x] < r


def enumerate_distinct_balls(space: QuasiMetricSpace) -> list[frozenset[int]]:
    """Every set of the form B(x, r), once, ordered by (size, members)."""
    order, _, group_end = space._sorted
    seen = set()
    for x in range(space.n):
        for end in np.flatnonzero(group_end[x]):
            seen.add(frozenset(order[x, : end + 1].tolist()))
    return sorted(seen, key=lambda s: (len(s), sorted(s)))


def _greedy_cover(target: np.ndarray, cover_balls: np.ndarray) -> int:
    """Greedy set cover of ``target`` (bool mask) by rows of ``cover_balls``."""
    left = target.copy()
    count = 0
    while left.any():
        gain = (cover_balls & left).sum(axis=1)
        pick = int(np.argmax(gain))
        left &= ~cover_balls[pick]
        count += 1
    return count


def geometric_doubling(space: QuasiMetricSpace) -> tuple[float, int]:
    """(bound C_mu^(6 + 3 log2 kappa), largest greedy half-radius cover).

    For a center x the ball B(x, r) equals {d(x, .) <= d_a} on r in (d_a, d_{a+1}];
    the half-radius balls are smallest as r decreases to d_a, so each
    (x, d_a) pair is covered with closed balls {d(c, .) <= d_a / 2}.
    """
    empirical = 1
    d = space.dist
    for x in range(space.n):
        for da in np.unique(d[x]):
            target = d[x] <= da
            if target.sum() <= empirical:
                continue
            empirical = max(empirical, _greedy_cover(target, d <= da / 2.0))
    return space.n_bound, empirical


def greedy_cover_count(space: QuasiMetricSpace, x: int, r: float) -> int:
    """Greedy cover size of the strict ball B(x, r) by strict balls of radius r/2."""
    target = ball_mask(space, x, r)
    return _greedy_cover(target, space.dist < r / 2.0)


def euclidean_distances(coords) -> np.ndarray:
    pts = np.asarray(coords, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))
