"""Dyadic grids and adjacent systems on finite spaces of homogeneous type.

A grid is built top-down from nested nets. The root level ``k_min`` is the
finest level whose scale ``delta**k`` still reaches the diameter; every
further level picks a maximal ``delta**(k+1)``-separated net inside each
cube, keeping the parent's center, and assigns each member to its nearest
net point (ties to the smallest point id). Levels are added until every
cube is a singleton, so each level partitions X and levels are nested by
construction.

Seed 0 scans points in id order; any other seed scans them in a seeded
random order, which yields a different family of nets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDelta
from .shtspace import QuasiMetricSpace


@dataclass(eq=False)
class Cube:
    id: int
    level: int
    center: int
    members: np.ndarray
    parent: int | None
    children: list[int]
    sidelength: float
    grid_tag: int = 1

    @property
    def size(self) -> int:
        return len(self.members)

    def __repr__(self):
        pts = self.members.tolist()
        return f"Cube(id={self.id}, level={self.level}, center={self.center}, members={pts})"


class DyadicGrid:
    """Forest of nested cubes with per-level lookup tables.

    ``point_cube[i, x]`` is the id of the cube at level ``k_min + i`` that
    contains ``x``.
    """

    def __init__(self, space: QuasiMetricSpace, delta: float, cubes: list[Cube], *, seed=0, tag=1):
        self.space = space
        self.delta = delta
        self.seed = seed
        self.tag = tag
        self.cubes = cubes
        self.k_min = min(c.level for c in cubes)
        self.k_max = max(c.level for c in cubes)
        self.levels: dict[int, list[int]] = {k: [] for k in range(self.k_min, self.k_max + 1)}
        for c in cubes:
            self.levels[c.level].append(c.id)
        self.mode = "theoretical" if 96 * space.kappa**2 * delta <= 1 else "relaxed"
        self._index()

    def _index(self):
        n, L = self.space.n, self.k_max - self.k_min + 1
        self.point_cube = np.full((L, n), -1, dtype=int)
        for c in self.cubes:
            self.point_cube[c.level - self.k_min, c.members] = c.id
        self.cube_mass = np.array([self.space.mass[c.members].sum() for c in self.cubes])
        self.cube_level = np.array([c.level for c in self.cubes])

    @property
    def root(self) -> Cube:
        return self.cubes[self.levels[self.k_min][0]]

    @property
    def n_levels(self) -> int:
        return self.k_max - self.k_min + 1

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __getitem__(self, cube_id: int) -> Cube:
        return self.cubes[cube_id]

    def level_partition(self, k: int) -> list[frozenset[int]]:
        return [frozenset(self.cubes[i].members.tolist()) for i in self.levels[k]]

    def cube_of(self, x: int, k: int) -> Cube:
        k = min(max(k, self.k_min), self.k_max)
        return self.cubes[self.point_cube[k - self.k_min, x]]

    def find(self, members, level: int | None = None) -> Cube:
        """Coarsest cube (or the one at ``level``) whose member set equals ``members``."""
        target = frozenset(int(m) for m in members)
        for c in self.cubes:
            if (level is None or c.level == level) and len(c.members) == len(target):
                if frozenset(c.members.tolist()) == target:
                    return c
        raise KeyError(f"no cube with members {sorted(target)}")

    def ancestors(self, cube_id: int) -> list[int]:
        out = []
        p = self.cubes[cube_id].parent
        while p is not None:
            out.append(p)
            p = self.cubes[p].parent
        return out

    def subcubes(self, cube_id: int) -> list[int]:
        """The cube itself and all its descendants."""
        out, stack = [], [cube_id]
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(self.cubes[c].children)
        return sorted(out)

    def integrals(self, f) -> np.ndarray:
        """Integral of ``f`` over every cube, one bincount per level."""
        fm = np.asarray(f, dtype=float) * self.space.mass
        out = np.zeros(len(self.cubes))
        for row in self.point_cube:
            out += np.bincount(row, weights=fm, minlength=len(self.cubes))
        return out

    def averages(self, f) -> np.ndarray:
        return self.integrals(f) / self.cube_mass

    def mask(self, cube_id: int) -> np.ndarray:
        m = np.zeros(self.space.n, dtype=bool)
        m[self.cubes[cube_id].members] = True
        return m

    def to_table(self) -> list[dict]:
        return [
            {
                "id": c.id,
                "level": c.level,
                "center": c.center,
                "sidelength": c.sidelength,
                "members": c.members.tolist(),
                "parent": c.parent,
            }
            for c in self.cubes
        ]


def _root_level(diam: float, delta: float) -> int:
    if diam == 0:
        return 0
    k = math.floor(math.log(diam) / math.log(delta))
    while delta ** (k + 1) >= diam:
        k += 1
    while delta**k < diam:
        k -= 1
    return k


def _net(space, members: np.ndarray, center: int, sep: float, rank: np.ndarray) -> list[int]:
    d = space.dist
    chosen = [center]
    closest = d[center, members].copy()
    for pos in np.argsort(rank[members], kind="stable"):
        if closest[pos] >= sep:
            p = int(members[pos])
            chosen.append(p)
            np.minimum(closest, d[p, members], out=closest)
    return sorted(chosen)


def build_grid(space: QuasiMetricSpace, delta: float, seed: int = 0, tag: int = 1) -> DyadicGrid:
    if not 0 < delta < 1:
        raise DegenerateDelta(f"delta must lie in (0, 1), got {delta}")
    n = space.n
    order = np.arange(n) if seed == 0 else np.random.default_rng(seed).permutation(n)
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)

    k = _root_level(space.diameter, delta)
    cubes = [Cube(0, k, int(order[0]), np.arange(n), None, [], delta**k, tag)]
    current = [0]
    while any(cubes[c].size > 1 for c in current):
        k += 1
        sep = delta**k
        nxt = []
        for cid in current:
            parent = cubes[cid]
            if parent.size == 1:
                groups = [(parent.center, parent.members)]
            else:
                net = _net(space, parent.members, parent.center, sep, rank)
                # argmin picks the first minimum, i.e. the smallest center id
                owner = np.argmin(space.dist[np.ix_(parent.members, net)], axis=1)
                groups = [(net[i], parent.members[owner == i]) for i in range(len(net))]
            for center, members in groups:
                child = Cube(len(cubes), k, int(center), members, cid, [], sep, tag)
                members.setflags(write=False)
                cubes.append(child)
                parent.children.append(child.id)
                nxt.append(child.id)
        current = sorted(nxt, key=lambda c: int(cubes[c].members[0]))
    # order each level by smallest member id
    by_level: dict[int, list[Cube]] = {}
    for c in cubes:
        by_level.setdefault(c.level, []).append(c)
    ordered = [c for lvl in sorted(by_level) for c in sorted(by_level[lvl], key=lambda c: int(c.members[0]))]
    remap = {c.id: i for i, c in enumerate(ordered)}
    for c in ordered:
        c.id = remap[c.id]
        c.parent = None if c.parent is None else remap[c.parent]
        c.children = sorted(remap[ch] for ch in c.children)
    return DyadicGrid(space, delta, ordered, seed=seed, tag=tag)


@dataclass
class GridReport:
    partition: bool
    nesting: bool
    parent_child: bool
    c_empirical: float
    C_empirical: float
    mode: str
    sandwich: bool | None = None
    c1: float | None = None
    C1: float | None = None
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.partition and self.nesting and self.parent_child and self.sandwich is not False

    def as_dict(self) -> dict:
        return {
            "partition": self.partition,
            "nesting": self.nesting,
            "parent_child": self.parent_child,
            "sandwich": self.sandwich,
            "c_empirical": self.c_empirical,
            "C_empirical": self.C_empirical,
            "c1": self.c1,
            "C1": self.C1,
            "mode": self.mode,
            "witnesses": self.witnesses,
        }


def verify_grid(grid: DyadicGrid) -> GridReport:
    """Check the grid laws from the cube member sets alone (not cached tables)."""
    space, n = grid.space, grid.space.n
    sets = [frozenset(c.members.tolist()) for c in grid.cubes]
    witnesses: dict = {}

    partition = True
    owner: dict[int, list[list[int]]] = {}
    for k, ids in grid.levels.items():
        count = np.zeros(n, dtype=int)
        table: list[list[int]] = [[] for _ in range(n)]
        for i in ids:
            for x in sets[i]:
                count[x] += 1
                table[x].append(i)
        owner[k] = table
        if partition and not np.all(count == 1):
            partition = False
            x = int(np.flatnonzero(count != 1)[0])
            witnesses["partition"] = {"level": k, "point": x, "cubes_containing": int(count[x])}

    nesting = True
    levels = sorted(grid.levels)
    for j in levels:
        for p in grid.levels[j]:
            for i in levels:
                if i > j or not nesting:
                    continue
                meet = {q for x in sets[p] for q in owner[i][x]}
                for q in meet:
                    inter = sets[q] & sets[p]
                    if inter and inter != sets[q] and inter != sets[p]:
                        nesting = False
                        witnesses["nesting"] = {"cubes": [q, p]}
                        break

    parent_child = True
    for c in grid.cubes:
        problem = None
        if c.center not in sets[c.id] or not sets[c.id]:
            problem = "center outside cube"
        elif c.parent is None and c.level != grid.k_min:
            problem = "non-root cube without parent"
        elif c.parent is not None:
            par = grid.cubes[c.parent]
            if par.level != c.level - 1 or not sets[c.id] <= sets[par.id] or c.id not in par.children:
                problem = "parent does not contain cube"
        if problem is None and c.level < grid.k_max:
            if not c.children:
                problem = "non-leaf cube without children"
            else:
                union = [x for ch in c.children for x in sets[ch]]
                if len(union) != len(set(union)) or set(union) != sets[c.id]:
                    problem = "children do not partition cube"
        if problem:
            parent_child = False
            witnesses["parent_child"] = {"cube": c.id, "problem": problem}
            break

    c_emp, C_emp = math.inf, 0.0
    for c in grid.cubes:
        d = space.dist[c.center]
        inside = np.zeros(n, dtype=bool)
        inside[list(sets[c.id])] = True
        if (~inside).any():
            c_emp = min(c_emp, float(d[~inside].min()) / c.sidelength)
        C_emp = max(C_emp, float(d[inside].max()) / c.sidelength)

    report = GridReport(partition, nesting, parent_child, c_emp, C_emp, grid.mode, witnesses=witnesses)
    if grid.mode == "theoretical":
        kappa = space.kappa
        report.c1, report.C1 = 1.0 / (12 * kappa**4), 4 * kappa**2
        # B(z, C delta^k) is strict, so containment needs C_emp < C1
        report.sandwich = c_emp >= report.c1 and C_emp < report.C1
        if not report.sandwich:
            witnesses["sandwich"] = {"c_empirical": c_emp, "C_empirical": C_emp}
    return report


@dataclass
class CoverReport:
    total: int
    covered: int
    failures: list = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.covered / self.total if self.total else 1.0

    def as_dict(self) -> dict:
        return {"total": self.total, "covered": self.covered, "fraction": self.fraction,
                "failures": self.failures[:20]}


@dataclass
class AdjacentSystem:
    grids: list[DyadicGrid]
    cover_report: CoverReport

    @property
    def K(self) -> int:
        return len(self.grids)

    @property
    def space(self) -> QuasiMetricSpace:
        return self.grids[0].space


def radius_class_just_above(d: float, delta: float) -> int:
    """The k with delta**(k+1) < r <= delta**k for every r slightly larger than d > 0."""
    # equivalently delta**(k+1) <= d < delta**k
    k = math.floor(math.log(d) / math.log(delta))
    while delta ** (k + 1) > d:
        k += 1
    while d >= delta**k:
        k -= 1
    return k


def ball_cover(grids: list[DyadicGrid]) -> CoverReport:
    """Which balls B lie in a level-(k-1) cube of some grid, k the radius class of B.

    For a center x the radius interval (d_a, d_{a+1}] produces one ball; its
    finest radius class (r just above d_a) is the hardest case and is the one
    tested. Balls {x} (d_a = 0) use the finest grid level.
    """
    space, delta = grids[0].space, grids[0].delta
    order, sdist, group_end = space._sorted
    seen = {}
    for x in range(space.n):
        for end in np.flatnonzero(group_end[x]):
            da = float(sdist[x, end])
            k = None if da == 0 else radius_class_just_above(da, delta)
            members = order[x, : end + 1]
            key = (frozenset(members.tolist()), k)
            if key not in seen:
                seen[key] = members
    covered, failures = 0, []
    for (mset, k), members in seen.items():
        ok = False
        for g in grids:
            lvl = g.k_max if k is None else min(max(k - 1, g.k_min), g.k_max)
            ids = g.point_cube[lvl - g.k_min, members]
            if np.all(ids == ids[0]):
                ok = True
                break
        if ok:
            covered += 1
        else:
            failures.append({"ball": sorted(mset), "radius_class": k})
    return CoverReport(total=len(seen), covered=covered, failures=failures)


def build_adjacent_system(space: QuasiMetricSpace, delta: float, K_target: int, seeds=None) -> AdjacentSystem:
    seeds = list(range(K_target)) if seeds is None else list(seeds)
    if len(seeds) != K_target or len(set(seeds)) != K_target:
        raise ValueError("need K_target distinct seeds")
    grids = [build_grid(space, delta, seed=s, tag=t + 1) for t, s in enumerate(seeds)]
    return AdjacentSystem(grids, ball_cover(grids))


def single_grid_system(grid: DyadicGrid) -> AdjacentSystem:
    return AdjacentSystem([grid], ball_cover([grid]))


def gdp(grid: DyadicGrid, cube_id: int) -> tuple[int, bool]:
    """Generalized dyadic parent: the grandparent, or the root when that level is missing."""
    c = grid.cubes[cube_id]
    if c.parent is not None and grid.cubes[c.parent].parent is not None:
        return grid.cubes[c.parent].parent, False
    return grid.root.id, True


def constant_CD(grid: DyadicGrid) -> float:
    # Under nesting the only same-sidelength cube meeting Q is Q itself.
    best = 1.0
    for c in grid.cubes:
        star, _ = gdp(grid, c.id)
        best = max(best, grid.cube_mass[star] / grid.cube_mass[c.id])
    return float(best)


def neighbor_closure(grid: DyadicGrid) -> list[dict]:
    """Cubes whose gdp misses a same-level cube within set distance C1 * delta**k."""
    d = grid.space.dist
    C1 = 4 * grid.space.kappa**2
    misses = []
    for c in grid.cubes:
        star, _ = gdp(grid, c.id)
        star_mask = grid.mask(star)
        for other in grid.levels[c.level]:
            if other == c.id:
                continue
            om = grid.cubes[other].members
            if star_mask[om].all():
                continue
            if d[np.ix_(c.members, om)].min() < C1 * c.sidelength:
                misses.append({"cube": c.id, "neighbor": other, "gdp": star})
    return misses


@dataclass
class EpsilonReport:
    empirical: float
    theoretical: float
    s: int
    witness: tuple[int, int] | None
    mode: str

    @property
    def ok(self) -> bool:
        return self.mode != "theoretical" or self.empirical >= self.theoretical


def theoretical_epsilon(kappa: float, c_mu: float, delta: float) -> tuple[float, int]:
    """(C_mu**-s, s) with s the smallest natural number >= log2(12 kappa^6 (4 kappa + 2) / delta)."""
    target = 12 * kappa**6 * (4 * kappa + 2) / delta
    s = max(0, math.ceil(math.log2(target)))
    while s > 0 and 2.0 ** (s - 1) >= target:
        s -= 1
    while 2.0**s < target:
        s += 1
    return c_mu ** (-s), s


def child_parent_epsilon(grid: DyadicGrid) -> EpsilonReport:
    empirical, witness = 1.0, None
    for c in grid.cubes:
        if c.parent is not None:
            r = grid.cube_mass[c.id] / grid.cube_mass[c.parent]
            if r < empirical:
                empirical, witness = float(r), (c.id, c.parent)
    eps, s = theoretical_epsilon(grid.space.kappa, grid.space.c_mu, grid.delta)
    return EpsilonReport(empirical, eps, s, witness, grid.mode)
