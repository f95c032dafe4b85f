"""Command line front end: ``homtype <group> <command> SPACE [FILES] [options]``.

Every command prints one JSON report (command, fixture, constants, checks,
data, witnesses, timing). Exit status: 0 when every check holds, 2 for
malformed input, 3 for a violated precondition, 4 when a check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bfspace, czd, dyadic, maximal, norms, shtspace, weights
from .errors import HomTypeError, InputError, MalformedDocument

TOL = 2.0**-20


# ---------------------------------------------------------------- input

def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise MalformedDocument(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"{path} is not valid JSON: {exc}") from exc


def parse_space_document(doc) -> shtspace.QuasiMetricSpace:
    if not isinstance(doc, dict):
        raise MalformedDocument("space document must be a JSON object")
    for key in ("metric", "measure"):
        if key not in doc:
            raise MalformedDocument(f"space document lacks {key!r}")
    metric = doc["metric"]
    try:
        measure = np.asarray(doc["measure"], dtype=float)
        kind = metric.get("type")
        if kind == "matrix":
            dist = np.asarray(metric["values"], dtype=float)
        elif kind == "euclidean":
            coords = np.asarray(metric["coords"], dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            dist = shtspace.euclidean_distances(coords)
        else:
            raise MalformedDocument(f"unknown metric type {kind!r}")
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, HomTypeError):
            raise
        raise MalformedDocument(f"bad metric or measure: {exc}") from exc
    n = len(measure)
    if measure.ndim != 1 or dist.shape != (n, n):
        raise MalformedDocument(f"metric shape {dist.shape} does not match {n} masses")
    points = doc.get("points", list(range(n)))
    if len(points) != n:
        raise MalformedDocument(f"{len(points)} point ids for {n} masses")
    return shtspace.verify_axioms(dist, measure)


def load_space(path):
    return parse_space_document(_read_json(path))


def load_vector(path, n):
    data = _read_json(path)
    try:
        v = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"{path} must be a flat array of numbers") from exc
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise MalformedDocument(f"{path} must hold {n} finite numbers, got shape {v.shape}")
    return v


# --------------------------------------------------------------- output

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return x


class Report:
    def __init__(self, command, fixture):
        self.command = command
        self.fixture = fixture
        self.constants: dict = {}
        self.checks: dict = {}
        self.data: dict = {}
        self.witnesses: dict = {}

    def check(self, name, passed, witness=None):
        self.checks[name] = bool(passed)
        if not passed and witness is not None:
            self.witnesses[name] = witness

    @property
    def ok(self):
        return all(self.checks.values())

    def as_dict(self, seconds):
        return _clean({
            "command": self.command,
            "fixture": self.fixture,
            "constants": self.constants,
            "checks": self.checks,
            "data": self.data,
            "witnesses": self.witnesses,
            "timing": {"seconds": seconds},
        })


# ------------------------------------------------------------- helpers

def _space(args, rep):
    space = load_space(args.space)
    rep.fixture.update({"space": str(args.space), "n": space.n})
    rep.constants.update({"kappa": space.kappa, "c_mu": space.c_mu})
    return space


def _grid(args, rep):
    space = _space(args, rep)
    grid = dyadic.build_grid(space, args.delta, seed=args.seed)
    rep.constants.update({"delta": args.delta, "seed": args.seed})
    return space, grid


def _epsilon(grid, rep):
    eps = dyadic.child_parent_epsilon(grid)
    rep.constants.update({"epsilon": eps.empirical, "epsilon_theoretical": eps.theoretical})
    return eps.empirical


def _a(args, grid, rep):
    eps = _epsilon(grid, rep)
    a = args.a if args.a is not None else 2.0 / eps + 1.0
    rep.constants["a"] = a
    return a


def _norm(space, p):
    return norms.lp(space, p)


# ------------------------------------------------------------ commands

def cmd_space_verify(args, rep):
    space = _space(args, rep)
    bound, empirical = shtspace.geometric_doubling(space)
    rep.constants.update({"geometric_doubling_bound": bound, "geometric_doubling_empirical": empirical,
                          "diameter": space.diameter, "total_mass": space.total_mass})
    rep.check("axioms", True)
    rep.check("geometric_doubling", empirical <= bound, {"empirical": empirical, "bound": bound})


def cmd_grid_build(args, rep):
    _, grid = _grid(args, rep)
    rep.constants.update({"k_min": grid.k_min, "k_max": grid.k_max, "cubes": len(grid), "mode": grid.mode})
    rep.data["cubes"] = grid.to_table()


def cmd_grid_verify(args, rep):
    _, grid = _grid(args, rep)
    r = dyadic.verify_grid(grid)
    eps = dyadic.child_parent_epsilon(grid)
    rep.constants.update({"mode": r.mode, "c_empirical": r.c_empirical, "C_empirical": r.C_empirical,
                          "c1": r.c1, "C1": r.C1, "epsilon": eps.empirical,
                          "epsilon_theoretical": eps.theoretical, "s": eps.s,
                          "C_D": dyadic.constant_CD(grid)})
    for name in ("partition", "nesting", "parent_child"):
        rep.check(name, getattr(r, name), r.witnesses.get(name))
    if r.sandwich is not None:
        rep.check("sandwich", r.sandwich, r.witnesses.get("sandwich"))
    rep.check("epsilon", eps.ok, {"pair": eps.witness})


def cmd_grid_adjacent(args, rep):
    space = _space(args, rep)
    system = dyadic.build_adjacent_system(space, args.delta, args.K)
    cover = system.cover_report
    rep.constants.update({"delta": args.delta, "K": system.K})
    rep.data["coverage"] = cover.as_dict()
    rep.check("ball_cover", cover.covered == cover.total, {"failures": cover.failures[:20]})


def cmd_maximal_hl(args, rep):
    space = _space(args, rep)
    rep.data["Mf"] = maximal.hl_maximal(space, load_vector(args.f, space.n))


def cmd_maximal_dyadic(args, rep):
    space, grid = _grid(args, rep)
    rep.data["MDf"] = maximal.dyadic_maximal(grid, load_vector(args.f, space.n))


def cmd_maximal_compare(args, rep):
    space = _space(args, rep)
    f = load_vector(args.f, space.n)
    system = dyadic.build_adjacent_system(space, args.delta, args.K)
    c = maximal.comparison_check(system, f)
    rep.constants.update({"delta": args.delta, "K": system.K, "c_upper": c.c_upper,
                          "c_lower": c.c_lower, "C_HK": c.c_hk})


def cmd_weights_a1(args, rep):
    space, grid = _grid(args, rep)
    w = load_vector(args.w, space.n)
    rep.constants["a1"] = weights.a1_constant(grid, w)
    rep.data["witness_point"] = weights.a1_witness(grid, w)


def cmd_weights_ainfty(args, rep):
    space, grid = _grid(args, rep)
    w = load_vector(args.w, space.n)
    a1, ainf = weights.a1_constant(grid, w), weights.ainfty_constant(grid, w)
    rep.constants.update({"a1": a1, "ainfty": ainf, "C_D": dyadic.constant_CD(grid)})
    rep.check("a1_dominates_ainfty", weights.check_a1_dominates_ainfty(grid, w), {"a1": a1, "ainfty": ainf})


def cmd_weights_rhi(args, rep):
    space, grid = _grid(args, rep)
    w = load_vector(args.w, space.n)
    eta = args.eta if args.eta is not None else weights.eta_cap(grid, w, args.K)
    r = weights.reverse_holder_check(grid, w, eta, args.K)
    s = weights.rhi_subset_check(grid, w, eta, subsets=args.trials, seed=args.seed, K_grids=args.K)
    rep.constants.update({"eta": eta, "C_D": r.c_d, "a1": r.a1, "K": args.K})
    rep.data.update({"cube_worst_slack": r.worst_slack, "subset_worst_slack": s.worst_slack,
                     "subsets_checked": s.checked})
    rep.check("reverse_holder", r.ok, r.violations[:20])
    rep.check("subset_bound", s.ok, s.violations[:20])


def cmd_weights_rdf(args, rep):
    space, grid = _grid(args, rep)
    g = load_vector(args.g, space.n)
    q = args.p
    A = args.A if args.A is not None else bfspace.doob_constant(q)
    if A is None:
        raise HomTypeError("no default norm bound on L1; pass --A")
    r = weights.rubio_de_francia(grid, g, _norm(space, q), A, args.tol, seed=args.seed, strict=False)
    rep.constants.update({"A": A, "p": q, "tol": args.tol, "terms": r.terms_used, "probe_lower": r.probe_lower})
    rep.data.update({"Rg": r.Rg, **r.details})
    for name, ok in r.checks.items():
        rep.check(name, ok, r.details)


def cmd_czd_levels(args, rep):
    space, grid = _grid(args, rep)
    d = czd.level_set_decomposition(grid, load_vector(args.f, space.n), args.lam)
    rep.constants.update({"lambda": args.lam, "epsilon": d.epsilon_used})
    rep.data.update(d.as_dict())
    rep.check("decomposition", True)


def cmd_czd_sparse(args, rep):
    space, grid = _grid(args, rep)
    a = _a(args, grid, rep)
    fam = czd.cz_sparse_family(grid, load_vector(args.f, space.n), a)
    rep.constants["k0"] = fam.k0
    rep.data["family"] = fam.as_dict()
    rep.check("sparse", True)


def cmd_czd_dominate(args, rep):
    space, grid = _grid(args, rep)
    a = _a(args, grid, rep)
    d = czd.sparse_domination(grid, load_vector(args.f, space.n), a)
    x = int(np.argmin(d.rhs - d.lhs))
    rep.constants["k0"] = d.family.k0
    rep.data.update({"slack": d.slack, "family": d.family.as_dict(),
                     "coefficients": {str(k): v for k, v in d.coefficients.items()}})
    rep.check("pointwise_domination", d.ok, {"point": x, "lhs": d.lhs[x], "rhs": d.rhs[x]})


def cmd_czd_duality(args, rep):
    space, grid = _grid(args, rep)
    a = _a(args, grid, rep)
    f, g = load_vector(args.f, space.n), load_vector(args.g, space.n)
    fam = czd.cz_sparse_family(grid, f, a)
    gap = czd.duality_check(fam, f, g)
    pair = float((czd.sparse_operator(fam, f) * g * space.mass).sum())
    rep.data.update({"gap": gap, "pairing": pair})
    rep.check("duality", gap <= 1e-12 * (1 + abs(pair)), {"gap": gap})


def cmd_czd_adjoint_bound(args, rep):
    space, grid = _grid(args, rep)
    a = _a(args, grid, rep)
    C = args.claimC if args.claimC is not None else 1.0
    gamma = args.claimGamma if args.claimGamma is not None else 1.0 / args.p
    r = czd.adjoint_norm_bound_check(grid, load_vector(args.f, space.n), a, _norm(space, args.p),
                                     C, gamma, samples=args.trials, seed=args.seed)
    rep.constants.update({"p": args.p, "C": C, "gamma": gamma, "nu": r.nu})
    rep.data.update(r.as_dict())
    rep.check("adjoint_bound", r.ok, r.violations[:5])


def cmd_bfs_axioms(args, rep):
    space = _space(args, rep)
    norm = _norm(space, args.p)
    r = norms.axiom_check(norm, samples=args.trials, seed=args.seed)
    rep.constants["p"] = args.p
    for k, ok in r.passed.items():
        rep.check(k, ok, r.witnesses.get(k))


def cmd_bfs_ainfty_probe(args, rep):
    space, grid = _grid(args, rep)
    claimed = None
    if args.claimC is not None or args.claimGamma is not None:
        claimed = (args.claimC if args.claimC is not None else 1.0,
                   args.claimGamma if args.claimGamma is not None else 1.0 / args.p)
    out = bfspace.ainfty_probe(grid, _norm(space, args.p), trials=args.trials, seed=args.seed, claimed=claimed)
    rep.constants["p"] = args.p
    if isinstance(out, bfspace.AInftyViolation):
        rep.constants.update({"C": out.C, "gamma": out.gamma})
        rep.check("ainfty", False, out.as_dict())
        return
    rep.constants.update({"C": out.C, "gamma": out.gamma})
    rep.data["certificate"] = out.as_dict()
    rep.check("ainfty", True)


def cmd_bfs_lerner(args, rep):
    sizes = args.sizes or [2**m for m in range(4, 11)]
    rows = bfspace.lerner_experiment(sizes, args.p, seed=args.seed, trials=args.trials)
    rep.fixture.update({"family": "PATH(n)", "sizes": sizes})
    rep.constants.update({"p": args.p, "delta": 0.5})
    rep.data["rows"] = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    for r in rows:
        for key in ("rdf_ok", "sparse_ok"):
            if r.get(key) is not None:
                rep.check(f"{key}[n={r['n']}]", r[key])
    if len(rows) > 1:
        col = [r["md_lp"] for r in rows]
        rep.check("bounded_lp", max(col) < 2 * min(col), {"column": col})


COMMANDS = {
    ("space", "verify"): (cmd_space_verify, []),
    ("grid", "build"): (cmd_grid_build, []),
    ("grid", "verify"): (cmd_grid_verify, []),
    ("grid", "adjacent"): (cmd_grid_adjacent, []),
    ("maximal", "hl"): (cmd_maximal_hl, ["f"]),
    ("maximal", "dyadic"): (cmd_maximal_dyadic, ["f"]),
    ("maximal", "compare"): (cmd_maximal_compare, ["f"]),
    ("weights", "a1"): (cmd_weights_a1, ["w"]),
    ("weights", "ainfty"): (cmd_weights_ainfty, ["w"]),
    ("weights", "rhi"): (cmd_weights_rhi, ["w"]),
    ("weights", "rdf"): (cmd_weights_rdf, ["g"]),
    ("czd", "levels"): (cmd_czd_levels, ["f"]),
    ("czd", "sparse"): (cmd_czd_sparse, ["f"]),
    ("czd", "dominate"): (cmd_czd_dominate, ["f"]),
    ("czd", "duality"): (cmd_czd_duality, ["f", "g"]),
    ("czd", "adjoint-bound"): (cmd_czd_adjoint_bound, ["f"]),
    ("bfs", "axioms"): (cmd_bfs_axioms, []),
    ("bfs", "ainfty-probe"): (cmd_bfs_ainfty_probe, []),
    ("bfs", "lerner"): (cmd_bfs_lerner, []),
}

TRIAL_DEFAULTS = {("weights", "rhi"): 1000, ("czd", "adjoint-bound"): 100, ("bfs", "axioms"): 100,
                  ("bfs", "ainfty-probe"): 1000, ("bfs", "lerner"): 8}


def _p_value(text):
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="homtype", description=__doc__.splitlines()[0])
    groups = ap.add_subparsers(dest="group", required=True)
    subs = {}
    for (group, name), (func, files) in COMMANDS.items():
        if group not in subs:
            subs[group] = groups.add_parser(group).add_subparsers(dest="command", required=True)
        sp = subs[group].add_parser(name)
        if (group, name) != ("bfs", "lerner"):
            sp.add_argument("space", help="space document (JSON)")
        for f in files:
            sp.add_argument(f, help=f"{f} values (JSON array aligned with the points)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--delta", type=float, default=0.5)
        sp.add_argument("--a", type=float, default=None, help="stopping ratio (default 2/eps + 1)")
        sp.add_argument("--eta", type=float, default=None, help="reverse Hoelder exponent (default: the cap)")
        sp.add_argument("--p", type=_p_value, default=2.0)
        sp.add_argument("--A", type=float, default=None, help="norm bound for M^D (default: Doob constant)")
        sp.add_argument("--trials", type=int, default=TRIAL_DEFAULTS.get((group, name), 16))
        sp.add_argument("--tol", type=float, default=TOL)
        sp.add_argument("--K", type=int, default=1 if group == "weights" else 3)
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
        sp.add_argument("--claimC", type=float, default=None)
        sp.add_argument("--claimGamma", type=float, default=None)
        sp.add_argument("--sizes", type=int, nargs="*", default=None)
        sp.set_defaults(func=func)
    return ap


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    rep = Report(f"{args.group} {args.command}", {})
    t0 = time.perf_counter()
    code = 0
    try:
        if args.func is cmd_czd_levels and args.lam is None:
            raise InputError("czd levels needs --lambda")
        args.func(args, rep)
        code = 0 if rep.ok else 4
    except HomTypeError as exc:
        code = exc.exit_code
        rep.checks.setdefault("completed", False)
        rep.witnesses["error"] = {"type": type(exc).__name__, "message": str(exc),
                                  "witness": getattr(exc, "witness", None)}
    except ValueError as exc:
        code = 3
        rep.checks.setdefault("completed", False)
        rep.witnesses["error"] = {"type": type(exc).__name__, "message": str(exc)}
    json.dump(rep.as_dict(time.perf_counter() - t0), out, indent=2)
    out.write("\n")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
