import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from nearcol import reduce as red
from nearcol.colattice import (
    BatchDecodeError,
    Filtration,
    batch_decode,
    bdd_threshold,
    block_layout,
    decoder_from_basis,
    lift,
    nearest_colattice,
    nearest_plane,
    precompute,
)
from nearcol.enumeration import cvp_enum, svp_enum
from nearcol.exactlin import Basis, LatticeError, gram_schmidt, in_lattice, project_block
from nearcol.latgen import goldstein_mayer, uniform_target
from nearcol.reduce import lll

from oracles import box_cvp

Q = mpq
Z2 = Basis([[1, 0], [0, 1]])


def test_lift_examples():
    assert lift([(2, 0)], [4, 0]) == (0, 0)
    assert lift([(2, 0)], [5, 0]) == (1, 0)
    assert lift([(2, 0)], [0, Q(7, 3)]) == (0, Q(7, 3))
    r = lift([(2, 1, 0), (1, 3, 1)], [Q(9, 2), -2, 5])
    g = gram_schmidt([(2, 1, 0), (1, 3, 1)])
    for bs, n2 in zip(g.bstar, g.bstar_sq):
        assert abs(sum(a * b for a, b in zip(r, bs)) / n2) <= Q(1, 2)


def test_layouts():
    assert block_layout(10, 4).cuts == (0, 4, 8, 10)
    assert block_layout(10, 4, "penultimate").cuts == (0, 4, 6, 10)
    assert block_layout(8, 4).cuts == (0, 4, 8)
    assert block_layout(5, 1).complete
    with pytest.raises(LatticeError):
        block_layout(5, 6)
    with pytest.raises(LatticeError):
        Filtration((0, 3, 3))
    with pytest.raises(LatticeError):
        block_layout(5, 2, "middle")


def test_nearest_plane_examples():
    g = gram_schmidt(Z2)
    r = nearest_plane(Z2, g, [Q(2, 5), Q(3, 5)])
    assert r.point == (0, 1) and r.dist_sq == Q(8, 25)
    b = Basis([[1, 0], [1, 2]])
    r = nearest_plane(b, gram_schmidt(b), [0, 1])
    assert r.point == (0, 0) and r.dist_sq == 1
    assert nearest_plane(b, gram_schmidt(b), [3, 4]).dist_sq == 0


def test_beta_extremes():
    b = goldstein_mayer(6, 60, 9).basis
    d1 = precompute(b, 1)
    d6 = precompute(b, 6)
    assert d1.filtration.complete and d6.filtration.cuts == (0, 6)
    for s in range(6):
        t = uniform_target(b, s)
        r1 = nearest_colattice(d1, t)
        np_ = nearest_plane(d1.basis, d1.gso, t)
        assert (r1.point, r1.dist_sq) == (np_.point, np_.dist_sq)
        assert nearest_colattice(d6, t).dist_sq == cvp_enum(b, t).dist_sq


def test_block_bases_cached_exactly():
    b = goldstein_mayer(7, 70, 1).basis
    dec = precompute(b, 3)
    for pb, (s, e) in zip(dec.block_bases, dec.filtration.blocks):
        assert pb == project_block(dec.basis, dec.gso, s, e - s)


def test_small_lattice_beta2_against_box():
    b = Basis([[3, 0, 0, 0], [1, 3, 0, 0], [1, 1, 3, 0], [1, 1, 1, 3]])
    dec = decoder_from_basis(b, block_layout(4, 2))
    g = gram_schmidt(b)
    for s in range(20):
        t = uniform_target(b, 50 + s)
        r = nearest_colattice(dec, t)
        assert r.dist_sq <= nearest_plane(b, g, t).dist_sq
        assert r.dist_sq >= box_cvp(b.rows, t, 3)
        assert in_lattice(b, r.point)
        assert r.dist_sq == sum(r.per_block_dist_sq, Q(0))


def test_remainder_layouts_both_valid():
    b = goldstein_mayer(9, 90, 5).basis
    red_b = lll(b)
    g = gram_schmidt(red_b)
    for rem in ("trailing", "penultimate"):
        dec = decoder_from_basis(red_b, block_layout(9, 4, rem))
        for s in range(4):
            t = uniform_target(b, s)
            r = nearest_colattice(dec, t)
            assert r.dist_sq <= nearest_plane(red_b, g, t).dist_sq


def test_target_errors():
    dec = precompute(Basis([[1, 0, 0], [0, 1, 0]]), 1)
    with pytest.raises(LatticeError):
        nearest_colattice(dec, [0, 0, 1])
    with pytest.raises(LatticeError):
        nearest_colattice(dec, [0, 0])


def test_batch_decode():
    b = goldstein_mayer(8, 80, 2).basis
    dec = precompute(b, 4)
    assert batch_decode(dec, []) == []
    t = uniform_target(b, 1)
    before = red.stats["reduction"]
    a, c = batch_decode(dec, [t, t])
    assert a == c
    assert red.stats["reduction"] == before
    assert batch_decode(dec, [t, t, t], threads=2) == [a, a, a]
    with pytest.raises(BatchDecodeError) as ei:
        batch_decode(dec, [t, [1, 2]])
    assert list(ei.value.failures) == [1]


def test_bdd_threshold():
    z4 = Basis([[int(i == j) for j in range(4)] for i in range(4)])
    assert bdd_threshold(precompute(z4, 2)).threshold_sq == Q(1, 4)
    b = goldstein_mayer(6, 60, 0).basis
    th = bdd_threshold(precompute(b, 6))
    assert th.threshold_sq == svp_enum(b).dist_sq / 4
    assert th.heuristic_radius > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 7), st.integers(1, 7))
def test_property_pythagoras_and_dominance(seed, n, beta):
    beta = min(beta, n)
    b = goldstein_mayer(n, 8 * n, seed).basis
    r = lll(b)
    dec = decoder_from_basis(r, block_layout(n, beta))
    t = uniform_target(b, seed)
    res = nearest_colattice(dec, t)
    assert res.dist_sq == sum(res.per_block_dist_sq, Q(0))
    assert res.dist_sq == sum((Q(p) - x) ** 2 for p, x in zip(res.point, t))
    assert in_lattice(b, res.point)
    assert res.dist_sq <= nearest_plane(r, dec.gso, t).dist_sq
    assert res.dist_sq <= sum(dec.gso.bstar_sq, Q(0)) / 4
