"""Approximate CVP with preprocessing from a Hermite-SVP oracle.

Two pieces:

* an *absolu* basis, built with one oracle call per rank on successive
  projections, on which nearest plane is within sqrt(n) gamma / 2 of lambda_n;
* a recursion over dual slices: a short primitive dual vector c splits the
  lattice into hyperplanes <c, x> = s, and the decoder recurses on the
  sublattice Lambda cap c^perp after a Bezout shift.

Both candidates are computed at every level and the exactly closer one wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, lcm
from typing import Sequence

from gmpy2 import mpq

from . import reduce as _reduce
from .colattice import DecodeResult, lift, nearest_plane
from .exactlin import (
    Basis,
    GSOData,
    LatticeError,
    ZERO,
    bezout_point,
    coords_in_span,
    dot,
    dual_basis,
    gram_schmidt,
    kernel_sublattice,
    norm_sq,
    round_half_up,
    to_q,
)
from .reduce import ExactPower, HsvpOracleKind, gamma_of, hsvp_solve, lovasz_svp_from_hsvp

__all__ = [
    "AbsoluBasis",
    "CvppLevel",
    "CvppPrecomp",
    "build_absolu_basis",
    "absolu_decode",
    "cvpp_precompute",
    "cvpp_decode",
]


@dataclass(frozen=True)
class AbsoluBasis:
    basis: Basis
    gso: GSOData
    quality_gamma_sq: ExactPower


def _integerize(rows) -> tuple[list[list[int]], int]:
    den = 1
    for row in rows:
        for v in row:
            den = lcm(den, int(v.denominator))
    return [[int(v * den) for v in row] for row in rows], den


def _project_out(rows, bstar, bstar_sq):
    """Project rational rows orthogonally to the span of the given orthogonal vectors."""
    out = []
    for row in rows:
        v = [mpq(x) for x in row]
        for bs, r in zip(bstar, bstar_sq):
            f = dot(v, bs) / r
            if f:
                v = [a - f * b for a, b in zip(v, bs)]
        out.append(v)
    return out


def _primitive(y: Sequence[int]) -> list[int]:
    g = 0
    for v in y:
        g = gcd(g, int(v))
    return [int(v) // g for v in y]


def build_absolu_basis(basis: Basis, kind: HsvpOracleKind) -> AbsoluBasis:
    """One oracle call per rank: b_{i+1} lifts a short vector of Lambda / Lambda_i."""
    n = basis.n
    if n == 0:
        raise LatticeError("empty basis")
    fixed: list[tuple[int, ...]] = []
    bstar: list[list[mpq]] = []
    bstar_sq: list[mpq] = []
    rest = [list(r) for r in basis.rows]
    while rest:
        proj = _project_out(rest, bstar, bstar_sq)
        int_rows, _ = _integerize(proj)
        pb = Basis(int_rows, check=False)
        v = hsvp_solve(kind, pb)
        y = coords_in_span(int_rows, [mpq(x) for x in v])
        if any(c.denominator != 1 for c in y):
            raise AssertionError("oracle output is not in the projected lattice")
        y = _primitive([int(c) for c in y])
        w = [sum(yi * row[j] for yi, row in zip(y, rest)) for j in range(basis.m)]
        if fixed:
            w = lift(fixed, w)
            if any(c.denominator != 1 for c in w):
                raise AssertionError("lift left the lattice")
        w = tuple(int(c) for c in w)
        # the new vector must leave span(Lambda_i)
        ws = _project_out([w], bstar, bstar_sq)[0]
        ws_sq = norm_sq(ws)
        if ws_sq == 0:
            raise AssertionError("oracle vector lies in the span of the previous sublattice")
        rest = _reduce._complete_to_block(rest, y)[1:]
        fixed.append(w)
        bstar.append(ws)
        bstar_sq.append(mpq(ws_sq))
    out = Basis(fixed, check=False)
    if out.covolume_sq != basis.covolume_sq:
        raise AssertionError("absolu basis does not generate the input lattice")
    return AbsoluBasis(out, gram_schmidt(out), gamma_of(kind, n))


def absolu_decode(ab: AbsoluBasis, t: Sequence) -> DecodeResult:
    """Nearest plane on the absolu basis."""
    return nearest_plane(ab.basis, ab.gso, t)


@dataclass(frozen=True)
class CvppLevel:
    basis: Basis
    c: tuple[int, ...]  # a_i = <c, b_i>, primitive
    c_vec: tuple[mpq, ...]  # c itself, in span(basis)
    c_norm_sq: mpq
    x_unit: tuple[int, ...]  # <c, x_unit> = 1
    kernel: Basis
    absolu: AbsoluBasis

    @property
    def rank(self) -> int:
        return self.basis.n


@dataclass(frozen=True)
class CvppPrecomp:
    levels: tuple[CvppLevel, ...]
    oracle_kind: HsvpOracleKind
    svp_kind: HsvpOracleKind
    oracle_calls: int

    @property
    def n(self) -> int:
        return self.levels[0].rank

    @property
    def reference_calls(self) -> int:
        """2 n^2, the count quoted for the reduction."""
        return 2 * self.n * self.n


def _dual_vector(basis: Basis, svp_kind: HsvpOracleKind):
    """Short primitive dual vector as coefficients a_i = <c, b_i>."""
    n = basis.n
    d = dual_basis(basis)
    if n == 1:
        a = [1]
    else:
        scaled, _ = _integerize(d)
        v = lovasz_svp_from_hsvp(Basis(scaled, check=False), svp_kind)
        z = coords_in_span(scaled, [mpq(x) for x in v])
        if any(c.denominator != 1 for c in z):
            raise AssertionError("dual oracle output is not in the dual lattice")
        a = _primitive([int(c) for c in z])
    c_vec = [ZERO] * basis.m
    for ai, di in zip(a, d):
        if ai:
            c_vec = [x + ai * y for x, y in zip(c_vec, di)]
    return tuple(a), tuple(c_vec), mpq(norm_sq(c_vec))


def cvpp_precompute(basis: Basis, kind: HsvpOracleKind, svp_kind: HsvpOracleKind | None = None) -> CvppPrecomp:
    """Build every recursion level; ``svp_kind`` may differ from ``kind`` for the dual step."""
    if basis.n == 0:
        raise LatticeError("empty basis")
    svp_kind = svp_kind or kind
    before = _reduce.stats["oracle"]
    levels = []
    cur = basis
    while True:
        a, c_vec, c_sq = _dual_vector(cur, svp_kind)
        x_unit = bezout_point(cur, a, 1)
        kern = kernel_sublattice(cur, a) if cur.n > 1 else Basis([], check=False)
        levels.append(CvppLevel(cur, a, c_vec, c_sq, x_unit, kern, build_absolu_basis(cur, kind)))
        if cur.n == 1:
            break
        cur = kern
    return CvppPrecomp(tuple(levels), kind, svp_kind, _reduce.stats["oracle"] - before)


def _decode_level(levels, idx: int, t: list[mpq]) -> tuple[tuple[int, ...], mpq]:
    lev = levels[idx]
    y = coords_in_span(lev.basis, t)
    ct = sum((mpq(ai) * yi for ai, yi in zip(lev.c, y)), ZERO)
    if lev.rank == 1:
        # closest multiple of b; ties to the smaller integer as in nearest plane
        k = -round_half_up(-ct)
        p = tuple(k * x for x in lev.basis.rows[0])
        return p, mpq(sum((pi - ti) ** 2 for pi, ti in zip(p, t)))

    ra = absolu_decode(lev.absolu, t)
    best_p, best_d = ra.point, ra.dist_sq

    s = round_half_up(ct)
    xs = [s * x for x in lev.x_unit]
    if lev.kernel.n:
        xs = [int(v) for v in lift(lev.kernel, xs)]
    off = ct - s  # <c, t - x_s>
    f = off / lev.c_norm_sq
    t2 = [ti - xi - f * ci for ti, xi, ci in zip(t, xs, lev.c_vec)]
    w0, d0 = _decode_level(levels, idx + 1, t2)
    pb = tuple(a + b for a, b in zip(xs, w0))
    db = mpq(sum((pi - ti) ** 2 for pi, ti in zip(pb, t)))
    if db != off * off / lev.c_norm_sq + d0:
        raise AssertionError("slice decomposition violates Pythagoras")
    if dot(lev.c_vec, [pi - ti for pi, ti in zip(pb, t)]) != -off:
        raise AssertionError("slice candidate has the wrong dual inner product")
    if db < best_d:
        best_p, best_d = pb, db
    return best_p, best_d


def cvpp_decode(pre: CvppPrecomp, t: Sequence) -> DecodeResult:
    """Approximate closest vector; the minimum of the absolu and slice candidates per level."""
    tq = [to_q(x) for x in t]
    top = pre.levels[0].basis
    if len(tq) != top.m:
        raise LatticeError("target dimension mismatch")
    p, d = _decode_level(pre.levels, 0, tq)
    y = coords_in_span(top, [mpq(x) for x in p])
    return DecodeResult(p, d, (d,), tuple(int(c) for c in y))
