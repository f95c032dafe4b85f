"""Dyadic A1 / A-infinity constants, reverse Hoelder checks and the Rubio de Francia iteration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicGrid, constant_CD, gdp
from .errors import CheckFailed, EtaOutOfRange, InvalidNormBound, NonPositiveWeight, ZeroFunction
from .maximal import DyadicMaximalOperator, dyadic_maximal, operator_norm_probe
from .norms import BanachNorm, norm_eval


def as_weight(w, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weight values, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise NonPositiveWeight("weights must be finite and strictly positive")
    return w


def weight_of(grid: DyadicGrid, w, members) -> float:
    """w(E) = sum over E of w * mu."""
    return float((np.asarray(w)[members] * grid.space.mass[members]).sum())


def a1_constant(grid: DyadicGrid, w) -> float:
    w = as_weight(w, grid.space.n)
    return float((dyadic_maximal(grid, w) / w).max())


def a1_witness(grid: DyadicGrid, w) -> int:
    w = as_weight(w, grid.space.n)
    return int(np.argmax(dyadic_maximal(grid, w) / w))


def ainfty_terms(grid: DyadicGrid, w) -> np.ndarray:
    """Per cube: integral of M_Q w divided by w(gdp(Q))."""
    w = as_weight(w, grid.space.n)
    avg = grid.averages(w)
    wint = grid.integrals(w)
    mass = grid.space.mass
    out = np.empty(len(grid))
    for c in grid.cubes:
        rows = grid.point_cube[c.level - grid.k_min :, c.members]
        local = avg[rows].max(axis=0)
        star, _ = gdp(grid, c.id)
        out[c.id] = (local * mass[c.members]).sum() / wint[star]
    return out


def ainfty_constant(grid: DyadicGrid, w) -> float:
    return float(ainfty_terms(grid, w).max())


def check_a1_dominates_ainfty(grid: DyadicGrid, w) -> bool:
    return ainfty_constant(grid, w) <= a1_constant(grid, w) + 1e-12


def eta_cap(grid: DyadicGrid, w, K_grids: int = 1, c_d: float | None = None) -> float:
    """Largest admissible reverse Hoelder exponent: 1 / (2 C_D^2 K [w]_A1)."""
    c_d = constant_CD(grid) if c_d is None else c_d
    return 1.0 / (2.0 * c_d**2 * K_grids * a1_constant(grid, w))


@dataclass
class RHIReport:
    eta: float
    c_d: float
    a1: float
    checked: int
    violations: list = field(default_factory=list)
    worst_slack: float = np.inf

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"eta": self.eta, "C_D": self.c_d, "a1": self.a1, "checked": self.checked,
                "worst_slack": self.worst_slack, "violations": self.violations[:20]}


def _require_eta(grid, w, eta, K_grids):
    c_d = constant_CD(grid)
    a1 = a1_constant(grid, w)
    cap = 1.0 / (2.0 * c_d**2 * K_grids * a1)
    if not 0 < eta <= cap:
        raise EtaOutOfRange(f"eta = {eta} outside (0, {cap}] for C_D = {c_d}, K = {K_grids}, [w]_A1 = {a1}")
    return c_d, a1


def reverse_holder_check(grid: DyadicGrid, w, eta: float, K_grids: int = 1) -> RHIReport:
    """((1/(2 mu(Q))) int_Q w^(1+eta))^(1/(1+eta)) <= C_D [w]_A1 avg_Q w for every cube."""
    w = as_weight(w, grid.space.n)
    c_d, a1 = _require_eta(grid, w, eta, K_grids)
    high = grid.integrals(w ** (1.0 + eta))
    lhs = (high / (2.0 * grid.cube_mass)) ** (1.0 / (1.0 + eta))
    rhs = c_d * a1 * grid.averages(w)
    slack = rhs - lhs
    report = RHIReport(eta, c_d, a1, len(grid), worst_slack=float(slack.min()))
    for cid in np.flatnonzero(lhs > rhs * (1 + 1e-12)):
        report.violations.append({"cube": int(cid), "lhs": float(lhs[cid]), "rhs": float(rhs[cid])})
    return report


def rhi_subset_check(grid: DyadicGrid, w, eta: float, subsets: int = 1000, seed: int = 0,
                     K_grids: int = 1) -> RHIReport:
    """w(E)/w(Q) <= 2^(1/(1+eta)) C_D [w]_A1 (mu(E)/mu(Q))^(eta/(1+eta)) on sampled E inside Q.

    Every singleton of every cube is tested, plus ``subsets`` seeded random (Q, E) pairs.
    """
    w = as_weight(w, grid.space.n)
    c_d, a1 = _require_eta(grid, w, eta, K_grids)
    mass = grid.space.mass
    wint = grid.integrals(w)
    const = 2.0 ** (1.0 / (1.0 + eta)) * c_d * a1
    gamma = eta / (1.0 + eta)
    report = RHIReport(eta, c_d, a1, 0)
    worst = np.inf

    def test(cid, E):
        nonlocal worst
        q_mass = grid.cube_mass[cid]
        lhs = (w[E] * mass[E]).sum() / wint[cid]
        rhs = const * (mass[E].sum() / q_mass) ** gamma
        report.checked += 1
        worst = min(worst, rhs - lhs)
        if lhs > rhs * (1 + 1e-12):
            report.violations.append({"cube": int(cid), "E": np.asarray(E).tolist(),
                                      "lhs": float(lhs), "rhs": float(rhs)})

    for c in grid.cubes:
        for x in c.members:
            test(c.id, np.array([x]))
    rng = np.random.default_rng(seed)
    for _ in range(subsets):
        c = grid.cubes[rng.integers(len(grid))]
        keep = rng.random(c.size) < rng.uniform(0.05, 1.0)
        test(c.id, c.members[keep])
    report.worst_slack = float(worst)
    return report


@dataclass
class RdFResult:
    Rg: np.ndarray
    terms_used: int
    tail_bound: float
    norm_bound_A: float
    probe_lower: float
    checks: dict[str, bool]
    details: dict[str, float]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def rubio_de_francia(grid: DyadicGrid, g, norm: BanachNorm, A: float, tol: float = 2.0**-20,
                     *, probe_trials: int = 16, seed: int = 0, strict: bool = True,
                     max_terms: int = 10_000) -> RdFResult:
    """Truncated series R g = sum_k (M^D)^k g / (2A)^k with certified truncation.

    With ||M^D|| <= A the terms obey ||t_{k+1}|| <= ||t_k|| / 2, so everything
    after term K has norm at most ||t_K||. Summation stops at the first K with
    ||t_K|| < tol, sup t_{K+1} < tol and t_{K+1} < tol * R_K pointwise; the last
    two make M^D(R g) <= 2A R g + 2A tol and [R g]_A1 <= 2A (1 + tol) hold
    for the truncated sum.
    """
    n = grid.space.n
    g = np.abs(np.asarray(g, dtype=float))
    if g.shape != (n,):
        raise ValueError(f"expected {n} values")
    if not np.any(g > 0):
        raise ZeroFunction("g vanishes identically")
    if not tol > 0:
        raise ValueError("tol must be positive")
    probe = operator_norm_probe(DyadicMaximalOperator(grid), norm, trials=probe_trials, seed=seed)
    if A < probe.lower_bound:
        raise InvalidNormBound(f"A = {A} is below the probed lower bound {probe.lower_bound} on ||M^D||")

    two_a = 2.0 * A
    term = g.copy()
    total = g.copy()
    terms_used = 1
    while True:
        nxt = dyadic_maximal(grid, term) / two_a
        t_norm = norm_eval(norm, term)
        if t_norm < tol and nxt.max() < tol and np.all(nxt < tol * total):
            break
        if terms_used >= max_terms:
            raise CheckFailed("Rubio de Francia series did not reach the tolerance",
                              {"terms": terms_used, "last_norm": t_norm})
        total += nxt
        term = nxt
        terms_used += 1
    tail = t_norm

    g_norm = norm_eval(norm, g)
    r_norm = norm_eval(norm, total)
    m_r = dyadic_maximal(grid, total)
    a1 = float((m_r / total).max())
    checks = {
        "majorizes_g": bool(np.all(g <= total)),
        "norm_at_most_2g": r_norm <= 2.0 * g_norm + tol,
        "a1_pointwise": bool(np.all(m_r <= two_a * total + two_a * tol)),
        "tail_below_tol": tail < tol,
    }
    details = {"norm_g": g_norm, "norm_Rg": r_norm, "a1_Rg": a1, "tail": tail}
    result = RdFResult(total, terms_used, tail, A, probe.lower_bound, checks, details)
    if strict and not result.ok:
        raise CheckFailed("Rubio de Francia postcondition failed",
                          {k: v for k, v in checks.items() if not v} | details)
    return result
