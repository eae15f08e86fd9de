"""Invariant suites run by ``nearcol verify``.

Each suite takes extra instances ``(path, basis, header)`` plus a seed, checks
its invariants on a generated corpus and on those instances, and returns the
number of checks. The first failure raises :class:`VerifyFailure` naming the
instance.
"""

from __future__ import annotations

import json

from gmpy2 import mpq

from .colattice import block_layout, decoder_from_basis, nearest_colattice, nearest_plane
from .cvpp import absolu_decode, cvpp_decode, cvpp_precompute
from .enumeration import cvp_enum, successive_minima_sq, svp_enum
from .exactlin import (
    Basis,
    bezout_point,
    coords_in_span,
    dot,
    dual_basis,
    gram_schmidt,
    kernel_sublattice,
    norm_sq,
)
from .latgen import (
    Stream,
    dual_lambda1_sq,
    goldstein_mayer,
    knapsack,
    mu_exact_rank2,
    transference_check,
    uniform_target,
)
from .reduce import HsvpOracleKind, gamma_of, is_lll_reduced, lll

GENERATORS = {"goldstein_mayer": goldstein_mayer, "knapsack": knapsack}


class VerifyFailure(Exception):
    pass


def _check(cond: bool, what: str, where: str):
    if not cond:
        raise VerifyFailure(f"{what} [{where}]")


def _corpus(seed: int, ranks, count: int):
    for k in range(count):
        s = seed * 1000 + k
        n = ranks[k % len(ranks)]
        yield f"goldstein_mayer n={n} seed={s}", goldstein_mayer(n, 10 * n, s).basis


def _with_files(instances, gen, max_rank: int):
    """Generated corpus followed by the given instance files up to max_rank."""
    yield from gen
    for path, basis, header in instances:
        if header is not None:
            _check(_regenerates(basis, header), "instance differs from the one its header describes", path)
        if basis.n <= max_rank:
            yield path, basis


def _regenerates(basis: Basis, header: str) -> bool:
    try:
        h = json.loads(header)
        gen = GENERATORS[h["kind"]]
        return gen(h["params"]["n"], h["params"]["bits"], h["seed"]).basis.rows == basis.rows
    except (KeyError, TypeError, ValueError):
        return False


def suite_exact(instances, seed: int) -> int:
    checks = 0
    for where, basis in _with_files(instances, _corpus(seed, (3, 4, 6), 6), 8):
        n = basis.n
        g = gram_schmidt(basis)
        for i in range(n):
            for j in range(i):
                _check(dot(g.bstar[i], g.bstar[j]) == 0, "GSO vectors not orthogonal", where)
        d = dual_basis(basis)
        for i in range(n):
            for j in range(n):
                _check(dot(d[i], basis.rows[j]) == int(i == j), "dual basis pairing", where)
        red = lll(basis)
        _check(red.covolume_sq == basis.covolume_sq, "LLL changed the covolume", where)
        _check(is_lll_reduced(red), "LLL output not reduced", where)
        mins = successive_minima_sq(basis)
        _check(svp_enum(basis).dist_sq == mins[0], "svp_enum differs from exhaustive lambda_1", where)
        if n >= 2:
            st = Stream(seed, 7)
            a = [st.below(7) - 3 for _ in range(n)]
            a[0] = 1
            kern = kernel_sublattice(basis, a)
            for row in kern.rows:
                y = coords_in_span(basis, [mpq(x) for x in row])
                _check(sum(ai * yi for ai, yi in zip(a, y)) == 0, "kernel vector off the hyperplane", where)
            c = [sum(ai * di[j] for ai, di in zip(a, d)) for j in range(basis.m)]
            _check(kern.covolume_sq == basis.covolume_sq * norm_sq(c), "kernel covolume identity", where)
            x = bezout_point(basis, a, 5)
            _check(dot(c, x) == 5, "bezout point on the wrong slice", where)
        t = uniform_target(basis, seed)
        e = cvp_enum(basis, t)
        np_ = nearest_plane(red, gram_schmidt(red), t)
        _check(e.dist_sq <= np_.dist_sq, "exact CVP beaten by nearest plane", where)
        checks += 1
    return checks


def suite_colattice(instances, seed: int) -> int:
    checks = 0
    for where, basis in _with_files(instances, _corpus(seed, (4, 6, 8), 6), 12):
        n = basis.n
        red = lll(basis)
        g = gram_schmidt(red)
        d1 = decoder_from_basis(red, block_layout(n, 1))
        dn = decoder_from_basis(red, block_layout(n, n)) if n <= 10 else None
        d2 = decoder_from_basis(red, block_layout(n, 2))
        mus = [mu_exact_rank2(p) for p in d2.block_bases]
        half_sum = sum(g.bstar_sq, mpq(0)) / 4
        for k in range(5):
            t = uniform_target(basis, seed * 100 + k)
            r1 = nearest_colattice(d1, t)
            _check(r1.point == nearest_plane(red, g, t).point, "beta=1 differs from nearest plane", where)
            _check(r1.dist_sq <= half_sum, "nearest plane bound", where)
            r2 = nearest_colattice(d2, t)
            _check(r2.dist_sq == sum(r2.per_block_dist_sq, mpq(0)), "Pythagoras over blocks", where)
            for db, m in zip(r2.per_block_dist_sq, mus):
                _check(db <= m, "block distance above the block covering radius", where)
            _check(r2.dist_sq <= r1.dist_sq, "beta=2 worse than nearest plane on the same basis", where)
            if dn is not None:
                _check(nearest_colattice(dn, t).dist_sq == cvp_enum(basis, t).dist_sq, "beta=n differs from exact CVP", where)
            checks += 1
    return checks


def suite_cvpp(instances, seed: int) -> int:
    checks = 0
    kind = HsvpOracleKind.ExactEnum()
    for where, basis in _with_files(instances, _corpus(seed, (3, 4, 5, 6), 4), 8):
        n = basis.n
        pre = cvpp_precompute(basis, kind)
        _check([lv.rank for lv in pre.levels] == list(range(n, 0, -1)), "level ranks must drop by one", where)
        g2 = gamma_of(kind, n).value()
        mins = successive_minima_sq(basis)
        for lv in pre.levels:
            _check(dot(lv.c_vec, lv.x_unit) == 1, "x_unit not on slice 1", where)
        lam1d = dual_lambda1_sq(basis)
        _check(pre.levels[0].c_norm_sq <= g2 * g2 * lam1d, "dual vector too long", where)
        ab = pre.levels[0].absolu
        for i, r in enumerate(ab.gso.bstar_sq):
            _check(r <= g2 * mins[-1], f"absolu b*_{i} too long", where)
        for k in range(5):
            t = uniform_target(basis, seed * 100 + k)
            best = cvp_enum(basis, t).dist_sq
            got = cvpp_decode(pre, t).dist_sq
            _check(got <= n**3 * g2**3 * best, "cvpp factor bound", where)
            _check(absolu_decode(ab, t).dist_sq <= n * g2 * mins[-1] / 4, "absolu decoding bound", where)
            checks += 1
    return checks


def suite_transference(instances, seed: int) -> int:
    checks = 0
    st = Stream(seed, 11)
    gen = []
    for k in range(20):
        while True:
            rows = [[st.below(41) - 20 for _ in range(2)] for _ in range(2)]
            if rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]:
                break
        gen.append((f"rank-2 #{k} seed={seed}", Basis(rows)))
    gen.append((f"rank-3 seed={seed}", goldstein_mayer(3, 12, seed).basis))
    for where, basis in _with_files(instances, iter(gen), 4):
        rep = transference_check(basis, samples=200, seed=seed)
        _check(rep.ok, f"transference product {rep.product} outside [1, n^2]", where)
        checks += 1
    return checks


SUITES = {
    "exact": suite_exact,
    "colattice": suite_colattice,
    "cvpp": suite_cvpp,
    "transference": suite_transference,
}
