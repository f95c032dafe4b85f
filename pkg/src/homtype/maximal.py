"""Exact maximal functions on finite spaces and operator-norm probing.

Every supremum here is a maximum over finitely many sets, so the values are
exact. ``hl_maximal`` runs in O(n^2 log n): for each center the balls are the
prefixes of the distance-sorted point list that end on a tie-group boundary,
and a point is in every prefix reaching its tie group, so a suffix maximum
over prefix averages gives each center's contribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import AdjacentSystem, DyadicGrid
from .shtspace import QuasiMetricSpace, enumerate_distinct_balls


def as_function(f, n: int | None = None) -> np.ndarray:
    """Sampled function as a float array of moduli."""
    arr = np.abs(np.asarray(f))
    arr = arr.astype(float)
    if arr.ndim != 1 or (n is not None and arr.shape[0] != n):
        raise ValueError(f"expected {n} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("function values must be finite")
    return arr


def hl_maximal(space: QuasiMetricSpace, f) -> np.ndarray:
    f = as_function(f, space.n)
    order, _, group_end = space._sorted
    m = space.mass[order]
    avg = np.cumsum(f[order] * m, axis=1) / np.cumsum(m, axis=1)
    avg[~group_end] = -np.inf
    reach = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    contrib = np.empty_like(reach)
    np.put_along_axis(contrib, order, reach, axis=1)
    return contrib.max(axis=0)


def dyadic_maximal(grid: DyadicGrid, f) -> np.ndarray:
    f = as_function(f, grid.space.n)
    avg = grid.averages(f)
    return avg[grid.point_cube].max(axis=0)


def localized_maximal(grid: DyadicGrid, cube_id: int, f) -> np.ndarray:
    """M_Q f: the maximal function over subcubes of Q, zero off Q."""
    f = as_function(f, grid.space.n)
    avg = grid.averages(f)
    q = grid.cubes[cube_id]
    out = np.zeros(grid.space.n)
    rows = grid.point_cube[q.level - grid.k_min :, q.members]
    out[q.members] = avg[rows].max(axis=0)
    return out


@dataclass
class Comparison:
    c_upper: float
    c_lower: float

    @property
    def c_hk(self) -> float:
        return max(self.c_upper, self.c_lower)


def _ratio_max(num: np.ndarray, den: np.ndarray) -> float:
    # 0/0 counts as 0
    pos = den > 0
    if not pos.any():
        return 0.0
    return float((num[pos] / den[pos]).max())


def comparison_check(system: AdjacentSystem, f) -> Comparison:
    mf = hl_maximal(system.space, f)
    mds = np.array([dyadic_maximal(g, f) for g in system.grids])
    c_upper = max(_ratio_max(md, mf) for md in mds)
    return Comparison(c_upper, _ratio_max(mf, mds.sum(axis=0)))


class MaximalOperator:
    """A maximal operator together with the sets whose indicators it is probed on."""

    name = "M"

    def __init__(self, space: QuasiMetricSpace):
        self.space = space

    def __call__(self, f) -> np.ndarray:
        return hl_maximal(self.space, f)

    def indicator_sets(self) -> list[np.ndarray]:
        return [np.fromiter(sorted(b), dtype=int) for b in enumerate_distinct_balls(self.space)]


class DyadicMaximalOperator(MaximalOperator):
    name = "MD"

    def __init__(self, grid: DyadicGrid):
        super().__init__(grid.space)
        self.grid = grid

    def __call__(self, f) -> np.ndarray:
        return dyadic_maximal(self.grid, f)

    def indicator_sets(self) -> list[np.ndarray]:
        seen, out = set(), []
        for c in self.grid.cubes:
            key = c.members.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(c.members)
        return out


@dataclass
class ProbeResult:
    lower_bound: float
    witness: np.ndarray
    probes: int


def operator_norm_probe(
    operator: MaximalOperator,
    norm,
    trials: int = 16,
    seed: int = 0,
    *,
    max_set_probes: int | None = None,
    ascent_sweeps: int = 2,
) -> ProbeResult:
    """Certified lower bound on sup ||T f|| / ||f|| over a deterministic probe set.

    Probes: coordinate indicators, constants, cube/ball indicators (a seeded
    sample of ``max_set_probes`` of them when given), ``trials`` random
    nonnegative vectors, then coordinate ascent on the best probe.
    """
    n = operator.space.n
    rng = np.random.default_rng(seed)
    best, best_f, count = 0.0, np.ones(n), 0

    def score(f):
        nf = norm(f)
        return norm(operator(f)) / nf if nf > 0 else 0.0

    candidates = [np.ones(n)]
    candidates.extend(np.eye(1, n, i).ravel() for i in range(n))
    sets = operator.indicator_sets()
    if max_set_probes is not None and len(sets) > max_set_probes:
        pick = rng.choice(len(sets), size=max_set_probes, replace=False)
        sets = [sets[i] for i in sorted(pick)]
    for s in sets:
        v = np.zeros(n)
        v[s] = 1.0
        candidates.append(v)
    for _ in range(trials):
        candidates.append(rng.random(n) ** rng.uniform(1, 8))
    for f in candidates:
        r = score(f)
        count += 1
        if r > best:
            best, best_f = r, f

    f = best_f.copy()
    for _ in range(ascent_sweeps):
        improved = False
        for i in rng.permutation(n):
            old = f[i]
            for new in (0.0, old * 0.5, old * 2.0 + 1e-3 * f.max()):
                f[i] = new
                r = score(f)
                count += 1
                if r > best * (1 + 1e-12):
                    best, old, improved = r, new, True
                    best_f = f.copy()
            f[i] = old
        if not improved:
            break
    return ProbeResult(best, best_f, count)
