"""Slow, independent reference implementations used only by the tests."""

import itertools

import numpy as np


def kappa_brute(dist):
    n = len(dist)
    best = 1.0
    for i, j, k in itertools.product(range(n), repeat=3):
        s = dist[i, j] + dist[j, k]
        if s > 0:
            best = max(best, dist[i, k] / s)
    return best


def doubling_brute(dist, mass):
    best = 1.0
    for x in range(len(mass)):
        br = sorted({float(v) for v in dist[x] if v > 0} | {float(v) / 2 for v in dist[x] if v > 0})
        if not br:
            continue
        probes = [(a + b) / 2 for a, b in zip(br, br[1:])] + [br[0] / 2, br[-1] + 1.0]
        for r in probes:
            inner = mass[dist[x] < r].sum()
            outer = mass[dist[x] < 2 * r].sum()
            best = max(best, outer / inner)
    return best


def all_balls(space):
    out = set()
    for x in range(space.n):
        radii = sorted(set(space.dist[x].tolist()))
        for r in radii:
            out.add(frozenset(np.flatnonzero(space.dist[x] < r + 1e-9).tolist()))
    return out


def hl_brute(space, f):
    f = np.abs(np.asarray(f, dtype=float))
    out = np.zeros(space.n)
    for B in all_balls(space):
        idx = sorted(B)
        avg = (f[idx] * space.mass[idx]).sum() / space.mass[idx].sum()
        for y in idx:
            out[y] = max(out[y], avg)
    return out


def cube_sets(grid):
    return [frozenset(c.members.tolist()) for c in grid.cubes]


def avg_over(space, f, S):
    idx = sorted(S)
    return (np.asarray(f)[idx] * space.mass[idx]).sum() / space.mass[idx].sum()


def md_brute(grid, f):
    space = grid.space
    out = np.zeros(space.n)
    for S in cube_sets(grid):
        a = avg_over(space, f, S)
        for x in S:
            out[x] = max(out[x], a)
    return out


def maximal_sets_brute(grid, f, lam):
    """Inclusion-maximal cube sets with average > lam, from member sets only."""
    sets = {S for S in cube_sets(grid) if avg_over(grid.space, f, S) > lam}
    return {S for S in sets if not any(S < T for T in sets)}


def cz_family_brute(grid, f, a):
    """(member set, witness set) pairs of the decomposition family, root first."""
    space = grid.space
    f = np.abs(np.asarray(f, dtype=float))
    avg = (f * space.mass).sum() / space.mass.sum()
    md = md_brute(grid, f)
    k0 = 0
    while not a**k0 > 2 * avg:
        k0 += 1
    while a ** (k0 - 1) > 2 * avg:
        k0 -= 1
    everything = frozenset(range(space.n))
    omega = lambda k: frozenset(np.flatnonzero(md > a**k).tolist())  # noqa: E731
    out = [(everything, everything - omega(k0), k0 - 1)]
    k = k0
    while omega(k):
        for S in maximal_sets_brute(grid, f, a**k):
            out.append((S, S - omega(k + 1), k))
        k += 1
    return out
