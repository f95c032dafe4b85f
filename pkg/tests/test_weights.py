import numpy as np
import pytest

from homtype import fixtures
from homtype.dyadic import build_grid, constant_CD
from homtype.errors import EtaOutOfRange, InvalidNormBound, NonPositiveWeight, ZeroFunction
from homtype.norms import lp
from homtype.weights import (
    a1_constant,
    ainfty_constant,
    check_a1_dominates_ainfty,
    eta_cap,
    reverse_holder_check,
    rhi_subset_check,
    rubio_de_francia,
)


def test_a1_examples(dy4):
    assert a1_constant(dy4, np.ones(4)) == 1.0
    assert a1_constant(dy4, [2, 1, 1, 1]) == pytest.approx(1.5)
    assert a1_constant(dy4, [1, 1, 1, 9]) == pytest.approx(5.0)


def test_a1_rejects_nonpositive(dy4):
    with pytest.raises(NonPositiveWeight):
        a1_constant(dy4, [1, 0, 1, 1])


def test_ainfty_examples(dy4):
    assert ainfty_constant(dy4, np.ones(4)) == pytest.approx(1.0)
    assert ainfty_constant(build_grid(fixtures.one_point(), 0.5), [3.0]) == pytest.approx(1.0)
    assert ainfty_constant(dy4, [2, 1, 1, 1]) <= 1.5


def test_ainfty_by_hand(dy4):
    # cube {0,1}: gdp clamps to the root, M_Q w = (2, 3/2), so (2 + 3/2) / 5
    w = np.array([2.0, 1, 1, 1])
    from homtype.weights import ainfty_terms

    terms = ainfty_terms(dy4, w)
    assert terms[dy4.find([0, 1]).id] == pytest.approx(3.5 / 5)
    assert terms[dy4.find([0]).id] == pytest.approx(2 / 5)


def test_a1_dominates_ainfty(dy4, rand64_grids):
    rng = np.random.default_rng(0)
    for _ in range(200):
        assert check_a1_dominates_ainfty(dy4, rng.random(4) ** 4 + 1e-3)
    for g in rand64_grids:
        for _ in range(20):
            assert check_a1_dominates_ainfty(g, rng.random(64) ** 3 + 1e-3)


def test_a1_scale_invariant(rand64_grids):
    w = np.random.default_rng(1).random(64) + 0.1
    g = rand64_grids[0]
    for t in (0.01, 3.0, 1e4):
        assert a1_constant(g, t * w) == pytest.approx(a1_constant(g, w), rel=1e-12)
    assert a1_constant(g, w) >= 1.0


def test_reverse_holder_constant_weight(dy4):
    cap = eta_cap(dy4, np.ones(4))
    rep = reverse_holder_check(dy4, np.ones(4), cap)
    assert rep.ok
    root = dy4.root.id
    lhs = 0.5 ** (1 / (1 + cap))
    assert rep.c_d * 1.0 - lhs >= rep.worst_slack - 1e-12
    assert rep.worst_slack > 0 and root == 0


def test_eta_out_of_range(dy4):
    w = np.array([2.0, 1, 1, 1])
    with pytest.raises(EtaOutOfRange):
        reverse_holder_check(dy4, w, 10 * eta_cap(dy4, w))
    with pytest.raises(EtaOutOfRange):
        rhi_subset_check(dy4, w, 0.0)


def test_subset_example(dy4):
    w = np.array([2.0, 1, 1, 1])
    eta = eta_cap(dy4, w)
    lhs = 2 / 5
    rhs = 2 ** (1 / (1 + eta)) * constant_CD(dy4) * 1.5 * 0.25 ** (eta / (1 + eta))
    assert lhs <= rhs
    assert rhi_subset_check(dy4, w, eta, subsets=300).ok


def test_rdf_constant(dy4, path4):
    r = rubio_de_francia(dy4, np.ones(4), lp(path4, 2), 2.0)
    assert np.allclose(r.Rg, 4 / 3, rtol=1e-6)
    assert r.ok


def test_rdf_point_mass(dy4, path4):
    tol = 2.0**-20
    r = rubio_de_francia(dy4, [1, 0, 0, 0], lp(path4, 2), 2.0, tol)
    assert r.terms_used <= 1 + 20
    assert r.ok and r.tail_bound < tol
    assert a1_constant(dy4, r.Rg) <= 4 * (1 + tol)


def test_rdf_rejects_bad_inputs(dy4, path4):
    with pytest.raises(InvalidNormBound):
        rubio_de_francia(dy4, [1, 0, 0, 0], lp(path4, 1), 0.5)
    with pytest.raises(ZeroFunction):
        rubio_de_francia(dy4, np.zeros(4), lp(path4, 2), 2.0)


def test_rdf_output_feeds_reverse_holder(rand64_grids, rand64):
    rng = np.random.default_rng(5)
    g = rand64_grids[1]
    for _ in range(5):
        r = rubio_de_francia(g, rng.random(64), lp(rand64, 2), 2.0, probe_trials=4)
        assert check_a1_dominates_ainfty(g, r.Rg)
        eta = eta_cap(g, r.Rg)
        assert reverse_holder_check(g, r.Rg, eta).ok
        assert rhi_subset_check(g, r.Rg, eta, subsets=200).ok
