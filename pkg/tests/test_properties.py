"""Randomized invariants across modules."""

from gmpy2 import mpq
from hypothesis import assume, given, settings, strategies as st

from nearcol.colattice import lift, nearest_plane
from nearcol.cvpp import cvpp_decode, cvpp_precompute
from nearcol.enumeration import cvp_enum
from nearcol.exactlin import (
    Basis,
    LatticeError,
    bezout_point,
    dot,
    dual_basis,
    gram_schmidt,
    in_lattice,
    kernel_sublattice,
    round_half_up,
)
from nearcol.latgen import mu_exact_rank2, mu_lower_bound, transference_check
from nearcol.reduce import HsvpOracleKind, gamma_of, is_lll_reduced, lll

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=30)
rows2 = st.lists(st.lists(st.integers(-12, 12), min_size=2, max_size=2), min_size=2, max_size=2)
rows3 = st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=3, max_size=3)


def _basis(rows):
    try:
        return Basis(rows)
    except LatticeError:
        assume(False)


@given(fracs)
def test_round_half_up_contract(x):
    q = mpq(x.numerator, x.denominator)
    r = round_half_up(q)
    assert abs(q - r) <= mpq(1, 2)
    if abs(q - r) == mpq(1, 2):
        assert r > q


@settings(max_examples=60, deadline=None)
@given(rows3)
def test_lll_same_lattice(rows):
    b = _basis(rows)
    r = lll(b)
    assert is_lll_reduced(r)
    assert r.covolume_sq == b.covolume_sq
    assert all(in_lattice(b, v) for v in r.rows)


@settings(max_examples=60, deadline=None)
@given(rows3, st.lists(st.integers(-6, 6), min_size=3, max_size=3), st.integers(-20, 20))
def test_kernel_bezout(rows, a, s):
    b = _basis(rows)
    assume(any(a))
    from math import gcd

    g = gcd(*a)
    a = [x // g for x in a]
    c = [sum(ai * di[j] for ai, di in zip(a, dual_basis(b))) for j in range(3)]
    k = kernel_sublattice(b, a)
    assert k.n == 2 and all(dot(c, v) == 0 for v in k.rows)
    x = bezout_point(b, a, s)
    assert dot(c, x) == s and in_lattice(b, x)


@settings(max_examples=60, deadline=None)
@given(rows3, st.lists(fracs, min_size=3, max_size=3))
def test_lift_stays_in_coset(rows, t):
    b = _basis(rows)
    t = [mpq(x.numerator, x.denominator) for x in t]
    sub = b.rows[:2]
    r = lift(sub, t)
    diff = [x - y for x, y in zip(t, r)]
    assert in_lattice(Basis(sub), diff) or not any(diff)
    g = gram_schmidt(sub)
    for bs, n2 in zip(g.bstar, g.bstar_sq):
        assert abs(dot(r, bs) / n2) <= mpq(1, 2)


@settings(max_examples=50, deadline=None)
@given(rows2, st.lists(fracs, min_size=2, max_size=2))
def test_rank2_covering_radius_bounds_every_distance(rows, t):
    b = _basis(rows)
    t = [mpq(x.numerator, x.denominator) for x in t]
    mu2 = mu_exact_rank2(b)
    assert cvp_enum(b, t).dist_sq <= mu2
    r = lll(b)
    assert nearest_plane(r, gram_schmidt(r), t).dist_sq <= sum(gram_schmidt(r).bstar_sq, mpq(0)) / 4


@settings(max_examples=30, deadline=None)
@given(rows2)
def test_transference_rank2(rows):
    b = _basis(rows)
    rep = transference_check(b)
    assert rep.ok and 1 <= rep.product <= 4
    assert mu_lower_bound(b, 30, 0) <= rep.mu_sq


@settings(max_examples=25, deadline=None)
@given(rows3, st.lists(fracs, min_size=3, max_size=3))
def test_cvpp_min_of_two_and_bound(rows, t):
    b = _basis(rows)
    t = [mpq(x.numerator, x.denominator) for x in t]
    kind = HsvpOracleKind.ExactEnum()
    pre = cvpp_precompute(b, kind)
    r = cvpp_decode(pre, t)
    assert in_lattice(b, r.point)
    assert r.dist_sq == sum((mpq(p) - x) ** 2 for p, x in zip(r.point, t))
    g2 = gamma_of(kind, 3).value()
    assert r.dist_sq <= 27 * g2**3 * cvp_enum(b, t).dist_sq
