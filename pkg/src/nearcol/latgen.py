"""Instance generators and ground-truth geometric quantities.

Randomness comes from the Philox counter-based bit generator keyed by the seed;
only its raw 64-bit output stream is used, so draws are stable across numpy
versions and platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from math import isqrt
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from .enumeration import _Prepared, svp_enum
from .exactlin import (
    Basis,
    LatticeError,
    dot,
    gram_schmidt,
    norm_sq,
    solve_coordinates,
    to_q,
)

__all__ = [
    "Stream",
    "Instance",
    "BddInstance",
    "goldstein_mayer",
    "knapsack",
    "uniform_target",
    "bdd_instance",
    "mu_exact_rank2",
    "mu_lower_bound",
    "transference_check",
    "dual_lambda1_sq",
]

MASK64 = (1 << 64) - 1


class Stream:
    """Deterministic stream of integers keyed by (seed, key)."""

    def __init__(self, seed: int, key: int = 0):
        # an explicit uint64 array: a plain list of ints >= 2**63 would go through float64
        self._bg = np.random.Philox(key=np.array([seed & MASK64, key & MASK64], dtype=np.uint64))

    def u64(self) -> int:
        return int(self._bg.random_raw())

    def bits(self, k: int) -> int:
        out = 0
        got = 0
        while got < k:
            out = (out << 64) | self.u64()
            got += 64
        return out >> (got - k)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        k = max(1, (bound - 1).bit_length())
        while True:
            x = self.bits(k)
            if x < bound:
                return x

    def uniform_q(self) -> mpq:
        """Uniform rational in [0, 1) with denominator 2**64."""
        return mpq(self.u64(), 1 << 64)

    def gauss_int(self, scale_bits: int = 30) -> int:
        """Integer approximation of a standard normal times 2**scale_bits (Box-Muller)."""
        import math

        u1 = (self.u64() + 1) / 2.0**64
        u2 = self.u64() / 2.0**64
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2 * math.pi * u2)
        return int(round(z * (1 << scale_bits)))


@dataclass(frozen=True)
class Instance:
    basis: Basis
    seed: int
    kind: str
    params: dict = field(default_factory=dict)

    def header(self) -> str:
        return json.dumps({"kind": self.kind, "params": self.params, "seed": self.seed}, sort_keys=True)


@dataclass(frozen=True)
class BddInstance:
    target: tuple[mpq, ...]
    planted: tuple[int, ...]
    error_norm_sq: mpq


def _random_prime(stream: Stream, bits: int) -> int:
    while True:
        x = stream.bits(bits) | (1 << (bits - 1)) | 1
        p = int(gmpy2.next_prime(x - 1)) if not gmpy2.is_prime(x) else x
        if p.bit_length() == bits:
            return p


def goldstein_mayer(n: int, bits: int, seed: int) -> Instance:
    """Rows (p, 0, ..., 0) and (x_i, e_i); covolume p."""
    if n < 2 or bits < 8:
        raise ValueError("goldstein_mayer needs n >= 2 and bits >= 8")
    st = Stream(seed, key=1)
    p = _random_prime(st, bits)
    rows = [[p] + [0] * (n - 1)]
    for i in range(1, n):
        row = [st.below(p)] + [0] * (n - 1)
        row[i] = 1
        rows.append(row)
    return Instance(Basis(rows, check=False), seed, "goldstein_mayer", {"n": n, "bits": bits})


def knapsack(n: int, bits: int, seed: int) -> Instance:
    """Rows (e_i | a_i) with random ``bits``-bit weights; rank n in dimension n+1."""
    if n < 1 or bits < 1:
        raise ValueError("knapsack needs n >= 1 and bits >= 1")
    st = Stream(seed, key=2)
    rows = []
    for i in range(n):
        row = [0] * (n + 1)
        row[i] = 1
        row[n] = st.bits(bits) | (1 << (bits - 1))
        rows.append(row)
    return Instance(Basis(rows, check=False), seed, "knapsack", {"n": n, "bits": bits})


def uniform_target(basis: Basis, seed: int) -> tuple[mpq, ...]:
    """sum u_i b_i with u_i uniform in [0, 1) (denominator 2**64)."""
    st = Stream(seed, key=3)
    u = [st.uniform_q() for _ in range(basis.n)]
    out = [mpq(0)] * basis.m
    for ui, row in zip(u, basis.rows):
        for j, x in enumerate(row):
            if x:
                out[j] += ui * x
    return tuple(out)


def _sqrt_q_floor(x: mpq, prec_bits: int = 64) -> mpq:
    """Rational r <= sqrt(x) with relative error about 2**-prec_bits."""
    if x <= 0:
        return mpq(0)
    num, den = int(x.numerator), int(x.denominator)
    shift = 2 * prec_bits + max(0, den.bit_length() - num.bit_length())
    scaled = (num << (2 * shift)) // den
    return mpq(isqrt(scaled), 1 << shift)


def bdd_instance(basis: Basis, rel_radius, seed: int, ref_len_sq=1, coeff_bound: int = 5) -> BddInstance:
    """Planted lattice point plus an error of length ~ rel_radius * sqrt(ref_len_sq).

    The error is a rational vector in span(basis) whose length never exceeds
    the requested one; its exact squared norm is recorded.
    """
    rel = to_q(rel_radius)
    if rel <= 0:
        raise ValueError("rel_radius must be positive")
    st = Stream(seed, key=4)
    coeffs = [st.below(2 * coeff_bound + 1) - coeff_bound for _ in range(basis.n)]
    planted = basis.combination(coeffs)
    direction = [st.gauss_int() for _ in range(basis.m)]
    if basis.n < basis.m:
        y = solve_coordinates(basis, direction)
        direction = [sum(yi * row[j] for yi, row in zip(y, basis.rows)) for j in range(basis.m)]
    dn = mpq(norm_sq(direction))
    if dn == 0:
        direction = list(basis.rows[0])
        dn = mpq(norm_sq(direction))
    want_sq = rel * rel * to_q(ref_len_sq)
    scale = _sqrt_q_floor(want_sq / dn)
    e = [scale * d for d in direction]
    target = tuple(mpq(p) + ei for p, ei in zip(planted, e))
    return BddInstance(target, tuple(planted), mpq(norm_sq(e)))


# --- covering radius and transference ---------------------------------------


def _circumradius_sq(u, w) -> mpq:
    """Squared circumradius of the triangle (0, u, w)."""
    uu, ww, uw = mpq(dot(u, u)), mpq(dot(w, w)), mpq(dot(u, w))
    det = uu * ww - uw * uw
    if det == 0:
        raise LatticeError("degenerate triangle")
    # x = a u + b w with <x,u> = uu/2, <x,w> = ww/2
    a = (uu / 2 * ww - ww / 2 * uw) / det
    b = (ww / 2 * uu - uu / 2 * uw) / det
    return a * a * uu + 2 * a * b * uw + b * b * ww


def _relevant_vectors_rank2(basis: Basis) -> list[tuple[int, ...]]:
    """Voronoi-relevant vectors: v with +-v the only shortest vectors of v + 2 Lambda."""
    from .reduce import lll

    red = lll(basis)
    b1, b2 = red.rows
    bound = 4  # coefficients of relevant vectors w.r.t. a reduced basis are tiny
    pts = {}
    for i in range(-bound, bound + 1):
        for j in range(-bound, bound + 1):
            if i == 0 and j == 0:
                continue
            v = tuple(i * x + j * y for x, y in zip(b1, b2))
            pts.setdefault((i % 2, j % 2), []).append(v)
    rel = []
    for cls, vs in pts.items():
        if cls == (0, 0):
            continue
        m = min(norm_sq(v) for v in vs)
        shortest = [v for v in vs if norm_sq(v) == m]
        if len(shortest) == 2:
            rel.extend(shortest)
    return rel


def mu_exact_rank2(basis) -> mpq:
    """Exact squared covering radius of a rank-1 or rank-2 lattice.

    Rational rows (e.g. a projected block) are scaled to integers first.
    """
    if not isinstance(basis, Basis):
        rows = [[to_q(v) for v in r] for r in getattr(basis, "rows", basis)]
        den = 1
        for r in rows:
            for v in r:
                den = math.lcm(den, int(v.denominator))
        return mu_exact_rank2(Basis([[int(v * den) for v in r] for r in rows])) / (den * den)
    if basis.n == 1:
        return mpq(basis.covolume_sq, 4)
    if basis.n != 2:
        raise LatticeError("exact covering radius is only available in rank <= 2")
    rel = _relevant_vectors_rank2(basis)
    # Delaunay triangles at the origin: consecutive relevant vectors by angle
    b1 = basis.rows[0]
    b2s = gram_schmidt(basis).bstar[1]
    angle = {v: math.atan2(float(dot(v, b2s)), float(dot(v, b1))) for v in rel}
    ring = sorted(rel, key=angle.__getitem__)
    best = mpq(0)
    for i, u in enumerate(ring):
        w = ring[(i + 1) % len(ring)]
        best = max(best, _circumradius_sq(u, w))
    return best


def mu_lower_bound(basis: Basis, samples: int, seed: int) -> mpq:
    """max over uniform targets of the exact squared distance to the lattice."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if basis.n > 12:
        raise LatticeError("mu_lower_bound refuses rank > 12")
    prep = _Prepared(basis)
    best = mpq(0)
    for s in range(samples):
        t = uniform_target(basis, _sub_seed(seed, s))
        best = max(best, prep.cvp(t).dist_sq)
    return best


def _sub_seed(seed: int, idx: int) -> int:
    return (seed * 0x9E3779B97F4A7C15 + idx + 1) & MASK64


def dual_lambda1_sq(basis: Basis) -> mpq:
    """lambda_1(dual)^2 via SVP on adj(G) B = covolume_sq * (dual basis)."""
    g = basis.gram
    n = basis.n
    c = basis.covolume_sq
    from .exactlin import _solve

    ginv = _solve([[mpq(x) for x in row] for row in g], [[mpq(int(i == j)) for j in range(n)] for i in range(n)])
    adj = [[int(ginv[i][j] * c) for j in range(n)] for i in range(n)]
    rows = [[sum(adj[i][k] * basis.rows[k][j] for k in range(n)) for j in range(basis.m)] for i in range(n)]
    res = svp_enum(Basis(rows, check=False))
    v = [sum(res.coeffs[i] * rows[i][j] for i in range(n)) for j in range(basis.m)]
    return mpq(norm_sq(v), c * c)


@dataclass(frozen=True)
class TransferenceReport:
    rank: int
    lambda1_dual_sq: mpq
    mu_sq: mpq
    mu_exact: bool
    product: mpq  # 4 lambda1(dual)^2 mu^2
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok


def transference_check(basis: Basis, samples: int = 2000, seed: int = 0) -> TransferenceReport:
    """Check 1 <= 4 lambda1(dual)^2 mu^2 <= n^2 (squared form)."""
    n = basis.n
    if n > 4:
        raise LatticeError("transference_check supports rank <= 4")
    l1 = dual_lambda1_sq(basis)
    if n <= 2:
        mu2 = mu_exact_rank2(basis)
        exact = True
    else:
        mu2 = mu_lower_bound(basis, samples, seed)
        exact = False
    prod = 4 * l1 * mu2
    lower = prod >= 1
    # a sampled lower bound on mu cannot certify the upper inequality
    upper = prod <= n * n if exact else True
    return TransferenceReport(n, l1, mu2, exact, prod, lower, upper)
