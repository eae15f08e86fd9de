import pytest
from gmpy2 import mpq

from nearcol.enumeration import cvp_enum
from nearcol.exactlin import Basis, LatticeError, coords_in_span, in_lattice, norm_sq
from nearcol.latgen import (
    Stream,
    bdd_instance,
    dual_lambda1_sq,
    goldstein_mayer,
    knapsack,
    mu_exact_rank2,
    mu_lower_bound,
    transference_check,
    uniform_target,
)

Q = mpq


def test_stream_is_deterministic_and_keyed():
    a, b, c = Stream(5, 1), Stream(5, 1), Stream(5, 2)
    xs = [a.u64() for _ in range(4)]
    assert xs == [b.u64() for _ in range(4)]
    assert xs != [c.u64() for _ in range(4)]
    s = Stream(1)
    assert all(0 <= s.below(7) < 7 for _ in range(50))
    assert 0 <= s.uniform_q() < 1


def test_goldstein_mayer():
    inst = goldstein_mayer(6, 40, 3)
    p = inst.basis.rows[0][0]
    assert p.bit_length() == 40
    assert inst.basis.covolume_sq == p * p
    assert all(0 <= r[0] < p for r in inst.basis.rows[1:])
    assert goldstein_mayer(6, 40, 3).basis.rows == inst.basis.rows
    assert goldstein_mayer(6, 40, 4).basis.rows != inst.basis.rows
    assert '"seed": 3' in inst.header()
    with pytest.raises(ValueError):
        goldstein_mayer(1, 40, 0)


def test_knapsack_shape():
    b = knapsack(5, 20, 1).basis
    assert (b.n, b.m) == (5, 6)
    assert all(r[-1].bit_length() == 20 for r in b.rows)


def test_uniform_target_in_parallelepiped():
    b = goldstein_mayer(5, 50, 2).basis
    t = uniform_target(b, 9)
    assert t == uniform_target(b, 9)
    y = coords_in_span(b, t)
    assert all(0 <= c < 1 and c.denominator <= 2**64 for c in y)


def test_bdd_instance():
    b = goldstein_mayer(6, 60, 1).basis
    inst = bdd_instance(b, Q(1, 3), 5, ref_len_sq=100)
    assert in_lattice(b, inst.planted)
    e = [x - p for x, p in zip(inst.target, inst.planted)]
    assert norm_sq(e) == inst.error_norm_sq <= Q(100, 9)
    assert inst.error_norm_sq > Q(100, 9) * Q(99, 100)
    tiny = bdd_instance(b, Q(1, 10**30), 5)
    assert cvp_enum(b, tiny.target).dist_sq == tiny.error_norm_sq
    k = knapsack(4, 16, 0).basis
    coords_in_span(k, bdd_instance(k, Q(1, 2), 3, ref_len_sq=4).target)


@pytest.mark.parametrize(
    "rows, want",
    [([[1, 0], [0, 1]], Q(1, 2)), ([[2, 0]], Q(1)), ([[2, 0], [1, 2]], Q(25, 16)), ([[2, 0], [0, 3]], Q(13, 4))],
)
def test_mu_exact(rows, want):
    assert mu_exact_rank2(Basis(rows)) == want


def test_mu_exact_rational_rows_and_invariance():
    assert mu_exact_rank2([[Q(1, 2), 0], [0, Q(1, 2)]]) == Q(1, 8)
    assert mu_exact_rank2(Basis([[2, 0], [3, 2]])) == Q(25, 16)
    with pytest.raises(LatticeError):
        mu_exact_rank2(Basis([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))


def test_mu_lower_bound():
    b = Basis([[2, 0], [1, 2]])
    lo = mu_lower_bound(b, 10_000, 1)
    assert Q(14, 10) <= lo <= Q(25, 16)
    assert mu_lower_bound(b, 100, 1) <= lo
    assert Q(4, 10) < mu_lower_bound(Basis([[1, 0], [0, 1]]), 2000, 0) < Q(1, 2)
    with pytest.raises(LatticeError):
        mu_lower_bound(Basis([[int(i == j) for j in range(13)] for i in range(13)]), 1, 0)


def test_transference():
    assert dual_lambda1_sq(Basis([[2, 0], [0, 3]])) == Q(1, 9)
    rep = transference_check(Basis([[1, 0], [0, 1]]))
    assert rep.product == 2 and rep.ok
    assert transference_check(Basis([[2, 0], [0, 3]])).product == Q(13, 9)
    r3 = transference_check(goldstein_mayer(3, 12, 1).basis, samples=50)
    assert r3.lower_ok and not r3.mu_exact


def test_stream_keys_above_2_63_are_distinct():
    assert Stream(2**63 + 5, 3).u64() != Stream(2**63 + 6, 3).u64()
    assert Stream(2**64 - 1, 0).u64() != Stream(2**64 - 2, 0).u64()
