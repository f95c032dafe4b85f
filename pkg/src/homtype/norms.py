"""Banach function norms on a finite measure space together with their associate norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoClosedForm
from .shtspace import QuasiMetricSpace


@dataclass(frozen=True, eq=False)
class BanachNorm:
    """A function norm rho bound to the point masses of a space.

    ``rho`` is the raw functional; ``norm_eval`` (and calling the object)
    evaluates ``rho(|f|)``.
    """

    tag: str
    mass: np.ndarray
    p: float | None = None
    weight: np.ndarray | None = None
    exponent: np.ndarray | None = None
    evaluator: Callable | None = field(default=None, repr=False)
    label: str = ""

    def __call__(self, f) -> float:
        return norm_eval(self, f)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.tag == "Linf":
            return "Linf"
        if self.tag == "Lp":
            return f"L{self.p:g}"
        if self.tag == "weighted-Lp":
            return f"weighted-L{self.p:g}"
        return self.tag

    def rho(self, f) -> float:
        f = np.asarray(f, dtype=float)
        if self.tag == "custom":
            return float(self.evaluator(f))
        a = np.abs(f)
        if self.tag == "Linf":
            return float(a.max()) if a.size else 0.0
        if self.tag == "Lp":
            return _lp(a, self.p, self.mass)
        if self.tag == "weighted-Lp":
            return _lp(a, self.p, self.mass * self.weight)
        if self.tag == "variable-Lp":
            return luxemburg(a, self.exponent, self.mass)
        raise ValueError(f"unknown norm tag {self.tag!r}")


def _lp(a: np.ndarray, p: float, m: np.ndarray) -> float:
    if p == 1:
        return float((a * m).sum())
    top = a.max() if a.size else 0.0
    if top == 0:
        return 0.0
    # scale first so large p does not overflow
    return float(top * ((a / top) ** p * m).sum() ** (1.0 / p))


def luxemburg(a: np.ndarray, exponent: np.ndarray, m: np.ndarray, tol: float = 1e-12) -> float:
    """inf{lam > 0 : sum (a / lam)^p(x) m(x) <= 1}, by bisection on lam."""
    if not np.any(a > 0):
        return 0.0

    def modular(lam):
        return float(((a / lam) ** exponent * m).sum())

    lo = hi = float(a.max())
    while modular(hi) > 1.0:
        hi *= 2.0
    while modular(lo) <= 1.0:
        lo /= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if modular(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if 1.0 - tol <= modular(hi) <= 1.0 and hi - lo <= 1e-15 * hi:
            break
    return hi


def lp(space: QuasiMetricSpace, p: float) -> BanachNorm:
    if p == math.inf:
        return BanachNorm("Linf", space.mass)
    if p < 1:
        raise ValueError(f"Lp needs p >= 1, got {p}")
    return BanachNorm("Lp", space.mass, p=float(p))


def weighted_lp(space: QuasiMetricSpace, p: float, weight) -> BanachNorm:
    w = np.asarray(weight, dtype=float)
    if w.shape != (space.n,) or np.any(w <= 0):
        raise ValueError("weight must be strictly positive with one value per point")
    return BanachNorm("weighted-Lp", space.mass, p=float(p), weight=w)


def variable_lp(space: QuasiMetricSpace, exponent) -> BanachNorm:
    e = np.asarray(exponent, dtype=float)
    if e.shape != (space.n,) or np.any(e < 1):
        raise ValueError("exponent map must be >= 1 with one value per point")
    return BanachNorm("variable-Lp", space.mass, exponent=e)


def custom(space: QuasiMetricSpace, evaluator: Callable, label: str = "custom") -> BanachNorm:
    return BanachNorm("custom", space.mass, evaluator=evaluator, label=label)


def norm_eval(norm: BanachNorm, f) -> float:
    return norm.rho(np.abs(np.asarray(f, dtype=float)))


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def associate_norm(norm: BanachNorm) -> BanachNorm:
    """Closed-form associate; weighted Lp(w) pairs with L^p'(w^(1 - p'))."""
    if norm.tag == "Linf":
        return BanachNorm("Lp", norm.mass, p=1.0)
    if norm.tag == "Lp":
        q = conjugate(norm.p)
        return BanachNorm("Linf", norm.mass) if q == math.inf else BanachNorm("Lp", norm.mass, p=q)
    if norm.tag == "weighted-Lp" and 1 < norm.p < math.inf:
        q = conjugate(norm.p)
        return BanachNorm("weighted-Lp", norm.mass, p=q, weight=norm.weight ** (1.0 - q))
    raise NoClosedForm(f"no closed-form associate for {norm.name}; use numeric_associate")


def numeric_associate(norm: BanachNorm, g, restarts: int = 8, seed: int = 0, sweeps: int = 200) -> float:
    """Feasible-point lower bound on rho'(g) = sup{sum f |g| mu : rho(f) <= 1, f >= 0}."""
    g = np.abs(np.asarray(g, dtype=float))
    if not np.any(g > 0):
        return 0.0
    n, m = len(g), norm.mass
    rng = np.random.default_rng(seed)

    def value(f):
        r = norm_eval(norm, f)
        return float((f * g * m).sum()) / r if r > 0 else 0.0

    starts = [np.where(g > 0, g**s, 0.0) for s in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]
    starts.append(np.ones(n))
    starts.extend(np.eye(1, n, i).ravel() for i in range(n))
    starts.extend(rng.random(n) for _ in range(restarts))
    scored = sorted(((value(f), i) for i, f in enumerate(starts)), reverse=True)
    best = scored[0][0]
    for _, i in scored[: max(1, restarts)]:
        f = starts[i].copy()
        cur, step = value(f), 0.5
        for _ in range(sweeps):
            moved = False
            for j in range(n):
                old = f[j]
                for new in (old * (1 + step) + step * f.max(), old * (1 - step), 0.0):
                    f[j] = new
                    v = value(f)
                    if v > cur * (1 + 1e-15):
                        cur, old, moved = v, new, True
                f[j] = old
            if not moved:
                step *= 0.5
                if step < 1e-7:
                    break
        best = max(best, cur)
    return best


@dataclass
class AxiomReport:
    passed: dict[str, bool]
    witnesses: dict[str, dict]

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def as_dict(self) -> dict:
        return {"passed": self.passed, "witnesses": self.witnesses}


def axiom_check(norm: BanachNorm, samples: int = 100, seed: int = 0) -> AxiomReport:
    """Seeded checks of the Banach function norm axioms (A1)-(A5)."""
    rng = np.random.default_rng(seed)
    n = len(norm.mass)
    passed = {k: True for k in ("A1", "A2", "A3", "A4", "A5")}
    wit: dict[str, dict] = {}

    def fail(axiom, **info):
        if passed[axiom]:
            passed[axiom] = False
            wit[axiom] = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in info.items()}

    def sample():
        f = rng.random(n) ** rng.uniform(0.5, 4)
        f[rng.random(n) < 0.3] = 0.0
        return f * rng.uniform(0.1, 10)

    rho = norm.rho
    if rho(np.zeros(n)) != 0:
        fail("A1", reason="rho(0) != 0")
    for _ in range(samples):
        f, g = sample(), sample()
        rf, rg = rho(f), rho(g)
        if np.any(f > 0) and not rf > 0:
            fail("A1", reason="rho(f) = 0 for f != 0", f=f)
        signed = f * rng.choice([-1.0, 1.0], size=n)
        rs = rho(signed)
        if not (rs >= 0 and math.isclose(rs, rf, rel_tol=1e-12, abs_tol=1e-300)):
            fail("A1", reason="rho is not a nonnegative function of |f|", f=signed, value=rs)
        a = rng.uniform(0, 10)
        if not math.isclose(rho(a * f), a * rf, rel_tol=1e-10, abs_tol=1e-300):
            fail("A1", reason="homogeneity", f=f, a=a)
        if rho(f + g) > (rf + rg) * (1 + 1e-12):
            fail("A1", reason="triangle inequality", f=f, g=g)
        lower = np.minimum(f, rng.uniform(0, f.max() + 1e-12))
        if rho(lower) > rf * (1 + 1e-12):
            fail("A2", reason="lattice property", g=lower, f=f)
        h = rng.uniform(0.05, 1.0, size=n)
        steps = int(math.ceil(1.0 / h.min()))
        prev = 0.0
        for k in range(1, steps + 1):
            rk = rho(f * np.minimum(1.0, k * h))
            if rk < prev * (1 - 1e-12):
                fail("A3", reason="rho(f_n) not increasing", f=f, h=h, step=k)
                break
            prev = rk
        if abs(prev - rf) > 1e-10 * (1 + rf):
            fail("A3", reason="rho(f_n) does not reach rho(f)", f=f, h=h)

    try:
        dual = associate_norm(norm)
        c_of = lambda chi: norm_eval(dual, chi)  # noqa: E731
        slack = 1e-9
    except NoClosedForm:
        c_of = lambda chi: numeric_associate(norm, chi, restarts=2, seed=seed)  # noqa: E731
        slack = 0.02
    for _ in range(max(1, samples // 10)):
        E = rng.random(n) < 0.5
        if not E.any():
            E[rng.integers(n)] = True
        chi = E.astype(float)
        if not math.isfinite(rho(chi)):
            fail("A4", reason="rho(chi_E) infinite", E=np.flatnonzero(E))
        C_E = c_of(chi)
        f = sample()
        if (f * chi * norm.mass).sum() > C_E * rho(f) * (1 + slack) + 1e-300:
            fail("A5", reason="integral over E exceeds C_E rho(f)", E=np.flatnonzero(E), C_E=C_E, f=f)
    return AxiomReport(passed, wit)


def holder_gap(norm: BanachNorm, f, g) -> float:
    """rho(f) rho'(g) - |sum f g mu|; nonnegative when the associate is right."""
    dual = associate_norm(norm)
    pair = abs(float((np.asarray(f) * np.asarray(g) * norm.mass).sum()))
    return norm_eval(norm, f) * norm_eval(dual, g) - pair
