import numpy as np
import pytest

from homtype import fixtures
from homtype.czd import (
    adjoint_norm_bound_check,
    cz_sparse_family,
    duality_check,
    family_violations,
    level_decay_check,
    level_set_decomposition,
    manual_family,
    nu_for,
    sigma_split,
    sparse_adjoint,
    sparse_domination,
    sparse_operator,
)
from homtype.dyadic import build_grid, child_parent_epsilon
from homtype.errors import DivergentTail, LambdaTooSmall, MissingLevelData, SubcriticalA
from homtype.maximal import dyadic_maximal
from homtype.norms import lp

from oracles import cz_family_brute, maximal_sets_brute, md_brute

E0 = np.array([1.0, 0, 0, 0])


def sets_of(grid, ids):
    return {frozenset(grid.cubes[i].members.tolist()) for i in ids}


def test_level_set_examples(dy4):
    d = level_set_decomposition(dy4, E0, 0.3)
    assert d.omega.tolist() == [0, 1]
    assert sets_of(dy4, d.cubes) == {frozenset({0, 1})}
    assert d.epsilon_used == 0.5
    assert level_set_decomposition(dy4, E0, 0.26).omega.tolist() == [0, 1]
    empty = level_set_decomposition(dy4, np.full(4, 2.0), 2.5)
    assert empty.cubes == [] and empty.omega.size == 0


def test_lambda_must_exceed_average(dy4):
    with pytest.raises(LambdaTooSmall):
        level_set_decomposition(dy4, E0, 0.25)


def test_level_sets_match_oracle(rand64_grids, dy4):
    rng = np.random.default_rng(0)
    for g in rand64_grids + [dy4, build_grid(fixtures.binary_ultrametric(3), 0.5)]:
        n = g.space.n
        for _ in range(15):
            f = rng.random(n) ** rng.uniform(1, 6)
            avg = f.mean()
            lam = avg * (1 + rng.uniform(0.01, 4))
            d = level_set_decomposition(g, f, lam)
            assert sets_of(g, d.cubes) == maximal_sets_brute(g, f, lam)
            assert d.omega.tolist() == np.flatnonzero(md_brute(g, f) > lam).tolist()


def test_family_examples(dy4):
    fam = cz_sparse_family(dy4, E0, 5)
    assert [(e.cube, e.witness.tolist()) for e in fam.entries] == [(dy4.root.id, [0, 1, 2, 3])]
    # avg = 1 and 5**0 = 1 is not > 2, so k0 = 1 and Omega_1 is empty
    fam = cz_sparse_family(dy4, [0, 0, 0, 4], 5)
    assert fam.k0 == 1
    assert [(e.cube, e.witness.tolist()) for e in fam.entries] == [(dy4.root.id, [0, 1, 2, 3])]
    fam = cz_sparse_family(dy4, np.ones(4), 5)
    assert len(fam) == 1 and fam.k0 == 1


def test_family_with_deep_levels(dy4):
    fam = cz_sparse_family(dy4, [0, 0, 0, 40], 5)
    assert fam.k0 == 2
    got = {(frozenset(dy4.cubes[e.cube].members.tolist()), frozenset(e.witness.tolist()), e.level)
           for e in fam.entries}
    assert got == set(cz_family_brute(dy4, [0, 0, 0, 40], 5))
    assert not family_violations(fam)


def test_subcritical_a(dy4):
    with pytest.raises(SubcriticalA):
        cz_sparse_family(dy4, E0, 4.0)


def test_families_match_oracle(rand64_grids):
    rng = np.random.default_rng(1)
    for g in rand64_grids:
        a = 2 / child_parent_epsilon(g).empirical + 1
        for _ in range(10):
            f = rng.random(64)
            f[rng.integers(64)] += rng.uniform(10, 1e5)
            fam = cz_sparse_family(g, f, a)
            got = {(frozenset(g.cubes[e.cube].members.tolist()), frozenset(e.witness.tolist()), e.level)
                   for e in fam.entries}
            assert got == set(cz_family_brute(g, f, a))
            for k in range(fam.k0, fam.k0 + 4):
                assert np.all(fam.omega(k + 1) <= fam.omega(k))


def test_witnesses_recover_level_bands(rand64_grids):
    g = rand64_grids[0]
    a = 2 / child_parent_epsilon(g).empirical + 1
    f = np.random.default_rng(2).random(64) ** 8 * 1e4
    fam = cz_sparse_family(g, f, a)
    for k in fam.levels[1:]:
        band = np.flatnonzero(fam.omega(k) & ~fam.omega(k + 1)).tolist()
        pieces = sorted(x for e in fam.entries if e.level == k for x in e.witness.tolist())
        assert pieces == band


def test_manual_family_validation(dy4):
    with pytest.raises(Exception):
        manual_family(dy4, [(dy4.root.id, [0])])
    fam = manual_family(dy4, [(dy4.root.id, [0, 1, 2]), (dy4.find([3]).id, [3])])
    assert fam.origin == "manual"
    with pytest.raises(MissingLevelData):
        sigma_split(fam, np.ones(4), 1)


def test_domination_examples(dy4):
    d = sparse_domination(dy4, E0, 5)
    assert d.ok and d.slack == pytest.approx(2.5 - 1.0)
    d = sparse_domination(dy4, np.full(4, 3.0), 5)
    assert d.ok and d.slack == pytest.approx(2 * 5 * 3 - 3)


def test_level_decay(dy4, rand64_grids):
    assert level_decay_check(dy4, [0, 0, 0, 4], 5, 3).ok
    rep = level_decay_check(dy4, [0, 0, 0, 400], 5, 3)
    assert rep.ok and rep.checked > 0


def test_sparse_operators(dy4):
    root = manual_family(dy4, [(dy4.root.id, [0, 1, 2, 3])])
    assert np.allclose(sparse_operator(root, np.ones(4)), 1)
    assert np.allclose(sparse_operator(root, E0), 0.25)
    assert np.allclose(sparse_adjoint(root, np.ones(4)), 1)
    assert np.allclose(sparse_adjoint(root, [4, 0, 0, 0]), 1)
    empty = manual_family(dy4, [])
    assert np.all(sparse_operator(empty, np.ones(4)) == 0)
    assert np.all(sparse_adjoint(empty, np.ones(4)) == 0)
    assert duality_check(root, np.ones(4), np.ones(4)) == 0
    assert duality_check(empty, np.ones(4), np.ones(4)) == 0


def test_duality_random(dy4):
    rng = np.random.default_rng(3)
    for _ in range(100):
        f, g = rng.normal(size=4), rng.normal(size=4)
        fam = cz_sparse_family(dy4, np.abs(rng.normal(size=4)) ** 4 * 50, 5)
        pair = abs((sparse_operator(fam, f) * g).sum())
        assert duality_check(fam, f, g) <= 1e-12 * (1 + pair)


def test_nu_for():
    assert nu_for(1, 0.5, 0.5, 5) == 3
    assert nu_for(1, 1, 0.5, 5) == 1
    assert nu_for(1e-6, 1, 0.5, 5) == 0
    with pytest.raises(DivergentTail):
        nu_for(1, 0.5, 0.5, 1.0)


def test_sigma_split_examples(dy4):
    fam = cz_sparse_family(dy4, [0, 0, 0, 4], 5)
    s1, s2 = sigma_split(fam, np.ones(4), 1)
    assert np.allclose(s1, 1) and np.all(s2 == 0)
    s1, s2 = sigma_split(fam, np.zeros(4), 2)
    assert np.all(s1 == 0) and np.all(s2 == 0)


def test_sigma_split_matches_brute_force(rand64_grids):
    rng = np.random.default_rng(4)
    g = rand64_grids[1]
    a = 2 / child_parent_epsilon(g).empirical + 1
    for nu in (1, 2, 3):
        f = rng.random(64)
        f[rng.integers(64)] += 1e5
        fam = cz_sparse_family(g, f, a)
        h = rng.random(64)
        s1, s2 = sigma_split(fam, h, nu)
        md = md_brute(g, f)
        ref1, ref2 = np.zeros(64), np.zeros(64)
        for S, E, k in cz_family_brute(g, f, a):
            alpha = h[sorted(E)].sum() / len(S)
            deep = md > a ** (k + nu) if k + nu >= fam.k0 else np.ones(64, bool)
            for x in S:
                (ref2 if deep[x] else ref1)[x] += alpha
        assert np.allclose(s1, ref1) and np.allclose(s2, ref2)
        total = np.zeros(64)
        for e in fam.entries:
            total[g.cubes[e.cube].members] += h[e.witness].sum() / g.cube_mass[e.cube]
        assert np.allclose(s1 + s2, total)
        assert np.all(s1 <= nu * dyadic_maximal(g, h) + 1e-12)


def test_adjoint_bound(dy4, path4):
    rep = adjoint_norm_bound_check(dy4, [0, 0, 0, 4], 5, lp(path4, 2), 1, 0.5)
    assert rep.nu == 3 and rep.ok and rep.worst_ratio <= 6
    rep = adjoint_norm_bound_check(dy4, [0, 0, 0, 7], 5, lp(path4, 2), 1, 0.5)
    assert rep.ok and rep.family_size > 1
