"""Calderon-Zygmund level sets and the sparse families and operators built from them.

Level sets are Omega_t = {M^D f > t}. A cube is *maximal* for t when its
average exceeds t and no strict ancestor's does; since cubes are stored
parents-first, one top-down pass finds them, and a cube repeated across
levels is picked at its coarsest occurrence.

On a finite space the stopping levels start at k0, the least k with
a**k > 2 avg_X f, and the root joins the family with witness X minus
Omega_{k0}. For bookkeeping the root sits at level k0 - 1 and
Omega_k = X for every k < k0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicGrid, child_parent_epsilon
from .errors import CheckFailed, DivergentTail, LambdaTooSmall, MissingLevelData, SubcriticalA, ZeroFunction
from .maximal import as_function, dyadic_maximal

REL = 1e-12


def maximal_cubes(grid: DyadicGrid, avg: np.ndarray, threshold: float) -> list[int]:
    above = avg > threshold
    blocked = np.zeros(len(grid), dtype=bool)
    picked = []
    for c in grid.cubes:
        if c.parent is not None:
            blocked[c.id] = blocked[c.parent] or above[c.parent]
        if above[c.id] and not blocked[c.id]:
            picked.append(c.id)
    return picked


def _global_average(grid: DyadicGrid, f: np.ndarray) -> float:
    return float((f * grid.space.mass).sum() / grid.space.total_mass)


@dataclass
class LevelDecomposition:
    lam: float
    omega: np.ndarray
    cubes: list[int]
    epsilon_used: float
    averages: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "omega": self.omega.tolist(), "cubes": self.cubes,
                "averages": self.averages, "epsilon": self.epsilon_used}


def level_set_decomposition(grid: DyadicGrid, f, lam: float) -> LevelDecomposition:
    f = as_function(f, grid.space.n)
    avg_x = _global_average(grid, f)
    if not lam > avg_x:
        raise LambdaTooSmall(f"lambda = {lam} must exceed the global average {avg_x}")
    eps = child_parent_epsilon(grid).empirical
    avg = grid.averages(f)
    omega = np.flatnonzero(avg[grid.point_cube].max(axis=0) > lam)
    cubes = maximal_cubes(grid, avg, lam)

    covered = np.zeros(grid.space.n, dtype=int)
    for cid in cubes:
        covered[grid.cubes[cid].members] += 1
    if np.any(covered > 1) or not np.array_equal(np.flatnonzero(covered), omega):
        raise CheckFailed("maximal cubes do not tile the level set",
                          {"omega": omega.tolist(), "cubes": cubes})
    for cid in cubes:
        if not lam < avg[cid] <= lam / eps * (1 + REL):
            raise CheckFailed("cube average outside (lambda, lambda/eps]",
                              {"cube": cid, "average": float(avg[cid]), "lambda": lam, "epsilon": eps})
    return LevelDecomposition(lam, omega, cubes, eps, [float(avg[c]) for c in cubes])


@dataclass
class FamilyEntry:
    cube: int
    witness: np.ndarray
    level: int
    index: int


@dataclass
class SparseFamily:
    grid: DyadicGrid
    entries: list[FamilyEntry]
    origin: str = "manual"
    a: float | None = None
    k0: int | None = None
    mdf: np.ndarray | None = None

    @property
    def levels(self) -> list[int]:
        return sorted({e.level for e in self.entries})

    def __len__(self):
        return len(self.entries)

    def omega(self, k: int) -> np.ndarray:
        """Boolean mask of Omega_k (cz families only)."""
        if self.origin != "cz":
            raise MissingLevelData("level sets are only known for families built from a decomposition")
        if k < self.k0:
            return np.ones(self.grid.space.n, dtype=bool)
        return self.mdf > self.a**k

    def as_dict(self) -> dict:
        return {
            "origin": self.origin,
            "levels": self.levels,
            "entries": [{"cube": e.cube, "level": e.level, "index": e.index,
                         "members": self.grid.cubes[e.cube].members.tolist(),
                         "witness": e.witness.tolist()} for e in self.entries],
        }


def family_violations(family: SparseFamily) -> list[dict]:
    """Broken invariants: a witness outside its cube, overlapping witnesses, or mu(Q) > 2 mu(E(Q))."""
    grid, mass = family.grid, family.grid.space.mass
    owner = np.full(grid.space.n, -1)
    bad = []
    for i, e in enumerate(family.entries):
        inside = grid.mask(e.cube)
        if not inside[e.witness].all():
            bad.append({"entry": i, "cube": e.cube, "reason": "witness leaves its cube"})
        clash = e.witness[owner[e.witness] >= 0]
        if clash.size:
            bad.append({"entry": i, "cube": e.cube, "reason": "witnesses overlap",
                        "points": clash.tolist(), "other": int(owner[clash[0]])})
        owner[e.witness] = i
        mq, me = grid.cube_mass[e.cube], mass[e.witness].sum()
        if mq > 2 * me * (1 + REL):
            bad.append({"entry": i, "cube": e.cube, "reason": "mu(Q) > 2 mu(E(Q))",
                        "mu_Q": float(mq), "mu_E": float(me)})
    return bad


def manual_family(grid: DyadicGrid, pairs, validate: bool = True) -> SparseFamily:
    entries = [FamilyEntry(int(cid), np.asarray(sorted(w), dtype=int), grid.cubes[cid].level, j)
               for j, (cid, w) in enumerate(pairs)]
    fam = SparseFamily(grid, entries)
    if validate:
        bad = family_violations(fam)
        if bad:
            raise CheckFailed("not a sparse family", bad[0])
    return fam


def _require_a(grid: DyadicGrid, a: float) -> float:
    eps = child_parent_epsilon(grid).empirical
    if not a > 2.0 / eps:
        raise SubcriticalA(f"a = {a} must exceed 2/eps = {2.0 / eps}")
    return eps


def first_level(a: float, t: float) -> int:
    """Least integer k with a**k > t (t > 0)."""
    k = math.floor(math.log(t) / math.log(a)) + 1
    while a ** (k - 1) > t:
        k -= 1
    while not a**k > t:
        k += 1
    return k


def cz_sparse_family(grid: DyadicGrid, f, a: float) -> SparseFamily:
    f = as_function(f, grid.space.n)
    _require_a(grid, a)
    if not np.any(f > 0):
        raise ZeroFunction("f vanishes identically")
    avg = grid.averages(f)
    mdf = avg[grid.point_cube].max(axis=0)
    avg_x = _global_average(grid, f)
    k0 = first_level(a, 2.0 * avg_x)

    everything = np.arange(grid.space.n)
    entries = [FamilyEntry(grid.root.id, everything[~(mdf > a**k0)], k0 - 1, 0)]
    k = k0
    while np.any(mdf > a**k):
        inner = mdf > a ** (k + 1)
        for j, cid in enumerate(maximal_cubes(grid, avg, a**k)):
            m = grid.cubes[cid].members
            entries.append(FamilyEntry(cid, m[~inner[m]], k, j))
        k += 1
    fam = SparseFamily(grid, entries, "cz", a, k0, mdf)
    bad = family_violations(fam)
    if bad:
        raise CheckFailed("sparse family invariant failed", bad[0])
    return fam


@dataclass
class DecayReport:
    checked: int
    worst_slack: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def level_decay_check(grid: DyadicGrid, f, a: float, ell_max: int = 6) -> DecayReport:
    """mu(Q ∩ Omega_{k+l}) <= mu(Q) / (a**l eps) for every maximal cube of every level k with a**k > avg."""
    f = as_function(f, grid.space.n)
    eps = _require_a(grid, a)
    mass = grid.space.mass
    avg = grid.averages(f)
    mdf = avg[grid.point_cube].max(axis=0)
    report = DecayReport(0, math.inf)
    avg_x = _global_average(grid, f)
    if not avg_x > 0:
        return report
    k = first_level(a, avg_x)
    while np.any(mdf > a**k):
        for cid in maximal_cubes(grid, avg, a**k):
            m = grid.cubes[cid].members
            mq = grid.cube_mass[cid]
            for ell in range(ell_max + 1):
                lhs = mass[m][mdf[m] > a ** (k + ell)].sum()
                rhs = mq / (a**ell * eps)
                report.checked += 1
                report.worst_slack = min(report.worst_slack, float(rhs - lhs))
                if lhs > rhs * (1 + REL):
                    report.violations.append({"cube": cid, "level": k, "ell": ell,
                                              "lhs": float(lhs), "rhs": float(rhs)})
        k += 1
    return report


@dataclass
class Domination:
    family: SparseFamily
    coefficients: dict[int, float]
    slack: float
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def ok(self) -> bool:
        return self.slack >= -1e-12 * max(1.0, float(self.lhs.max()))


def sparse_domination(grid: DyadicGrid, f, a: float) -> Domination:
    """M^D f <= a sum avg_Q f chi_E(Q), with 2a on the root term."""
    f = as_function(f, grid.space.n)
    fam = cz_sparse_family(grid, f, a)
    avg = grid.averages(f)
    rhs = np.zeros(grid.space.n)
    coeffs = {}
    for i, e in enumerate(fam.entries):
        coeffs[e.cube] = float(avg[e.cube])
        rhs[e.witness] += (2 * a if i == 0 else a) * avg[e.cube]
    lhs = fam.mdf
    return Domination(fam, coeffs, float((rhs - lhs).min()), lhs, rhs)


def _masses(family: SparseFamily):
    grid = family.grid
    return grid.space.mass, grid.cube_mass


def sparse_operator(family: SparseFamily, f) -> np.ndarray:
    mass, cube_mass = _masses(family)
    f = np.asarray(f, dtype=float)
    out = np.zeros(len(mass))
    for e in family.entries:
        m = family.grid.cubes[e.cube].members
        out[e.witness] += (f[m] * mass[m]).sum() / cube_mass[e.cube]
    return out


def sparse_adjoint(family: SparseFamily, g) -> np.ndarray:
    mass, cube_mass = _masses(family)
    g = np.asarray(g, dtype=float)
    out = np.zeros(len(mass))
    for e in family.entries:
        m = family.grid.cubes[e.cube].members
        out[m] += (g[e.witness] * mass[e.witness]).sum() / cube_mass[e.cube]
    return out


def duality_check(family: SparseFamily, f, g) -> float:
    mass = family.grid.space.mass
    f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
    left = float((sparse_operator(family, f) * g * mass).sum())
    right = float((f * sparse_adjoint(family, g) * mass).sum())
    return abs(left - right)


def nu_for(C: float, gamma: float, epsilon: float, a: float) -> int:
    """Least nu >= 0 with C eps^-gamma a^(-nu gamma) / (1 - a^-gamma) <= 1/2."""
    if not (C > 0 and gamma > 0 and 0 < epsilon <= 1):
        raise ValueError("need C > 0, gamma > 0 and 0 < epsilon <= 1")
    q = a ** (-gamma)
    if not q < 1:
        raise DivergentTail(f"a^-gamma = {q} >= 1, the tail does not converge")
    lead = C * epsilon ** (-gamma) / (1 - q)

    def fits(nu):
        return lead * q**nu <= 0.5 * (1 + REL)

    nu = max(0, math.ceil(math.log(0.5 / lead) / math.log(q)))
    while nu > 0 and fits(nu - 1):
        nu -= 1
    while not fits(nu):
        nu += 1
    return nu


def sigma_split(family: SparseFamily, g, nu: int) -> tuple[np.ndarray, np.ndarray]:
    """Split sum alpha_Q chi_Q by whether x has left Omega_{k+nu}; alpha_Q = int_E |g| / mu(Q).

    Raises CheckFailed if the near part exceeds nu M^D g somewhere.
    """
    if family.origin != "cz":
        raise MissingLevelData("sigma_split needs a family built by cz_sparse_family")
    grid = family.grid
    g = as_function(g, grid.space.n)
    mass = grid.space.mass
    near = np.zeros(grid.space.n)
    far = np.zeros(grid.space.n)
    for e in family.entries:
        m = grid.cubes[e.cube].members
        alpha = (g[e.witness] * mass[e.witness]).sum() / grid.cube_mass[e.cube]
        deep = family.omega(e.level + nu)[m]
        near[m[~deep]] += alpha
        far[m[deep]] += alpha
    mdg = dyadic_maximal(grid, g)
    excess = near - nu * mdg
    if np.any(excess > REL * (1 + mdg)):
        x = int(np.argmax(excess))
        raise CheckFailed("near part exceeds nu M^D g",
                          {"point": x, "sigma1": float(near[x]), "bound": float(nu * mdg[x])})
    return near, far


@dataclass
class AdjointBoundReport:
    nu: int
    epsilon: float
    family_size: int
    samples: int
    worst_ratio: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"nu": self.nu, "epsilon": self.epsilon, "family_size": self.family_size,
                "samples": self.samples, "worst_ratio": self.worst_ratio,
                "bound": 2 * self.nu, "violations": self.violations[:20]}


def adjoint_norm_bound_check(grid: DyadicGrid, f, a: float, norm, C: float, gamma: float,
                             samples: int = 100, seed: int = 0, gs=None) -> AdjointBoundReport:
    """||A*_S g|| <= 2 nu ||M^D g|| over seeded g, S the decomposition family of f.

    The caller vouches that (C, gamma) is an A-infinity pair for ``norm``.
    """
    eps = _require_a(grid, a)
    fam = cz_sparse_family(grid, f, a)
    nu = nu_for(C, gamma, eps, a)
    rng = np.random.default_rng(seed)
    n = grid.space.n
    if gs is None:
        gs = [np.ones(n)] + [rng.random(n) ** rng.uniform(0.5, 6) for _ in range(samples - 1)]
    report = AdjointBoundReport(nu, eps, len(fam), 0, 0.0)
    for i, g in enumerate(gs):
        g = as_function(g, n)
        sigma_split(fam, g, nu)
        top, bottom = norm(sparse_adjoint(fam, g)), norm(dyadic_maximal(grid, g))
        report.samples += 1
        if bottom == 0:
            continue
        ratio = top / bottom
        report.worst_ratio = max(report.worst_ratio, ratio)
        if ratio > 2 * nu * (1 + REL):
            report.violations.append({"sample": i, "ratio": ratio, "g": g.tolist()})
    return report
