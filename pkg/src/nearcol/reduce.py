"""Basis reduction (LLL, BKZ with exact block SVP) and Hermite-SVP oracles.

LLL and BKZ sweeps run on a double-precision Cholesky factor recomputed from
the exact integer Gram matrix; the result is then passed through an exact
rational LLL which certifies (and if needed repairs) size reduction and the
Lovasz condition. The returned bases are therefore exactly LLL-reduced.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from ._enum_kernel import enum_walk
from .exactlin import Basis, LatticeError, dot, gso_coefficients, norm_sq, to_q

log = logging.getLogger(__name__)

# Instrumentation only: counts reduction and oracle invocations.
stats: Counter = Counter()

DEFAULT_DELTA = mpq(99, 100)
MAX_BKZ_BLOCK = 30


def _check_delta(delta) -> mpq:
    d = to_q(delta)
    if not (mpq(1, 4) < d < 1):
        raise LatticeError(f"LLL delta must lie in (1/4, 1), got {d}")
    return d


class _FloatLLL:
    """Integer basis + exact Gram matrix + float Cholesky data (L2 style)."""

    ETA = 0.51

    def __init__(self, rows, track: bool = False):
        self.b = [[int(x) for x in row] for row in rows]
        n = self.n = len(self.b)
        self.g = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1):
                self.g[i][j] = self.g[j][i] = dot(self.b[i], self.b[j])
        self.u = [[int(i == j) for j in range(n)] for i in range(n)] if track else None
        self.mu = [[0.0] * n for _ in range(n)]
        self.r = [[0.0] * n for _ in range(n)]
        self.rr = [0.0] * n

    def _row(self, k):
        gk = self.g[k]
        rk = self.r[k]
        muk = self.mu[k]
        for j in range(k):
            s = float(gk[j])
            rj = self.r[j]
            muj = self.mu[j]
            for l in range(j):
                s -= muj[l] * rk[l]
            rk[j] = s
            muk[j] = s / self.rr[j]

    def _sub(self, k, j, x):
        """b_k <- b_k - x b_j (exact), with Gram and float mu updates."""
        bk, bj = self.b[k], self.b[j]
        for t in range(len(bk)):
            bk[t] -= x * bj[t]
        if self.u is not None:
            uk, uj = self.u[k], self.u[j]
            for t in range(self.n):
                uk[t] -= x * uj[t]
        g = self.g
        gkj = g[k][j]
        g[k][k] = g[k][k] - 2 * x * gkj + x * x * g[j][j]
        for l in range(self.n):
            if l != k:
                v = g[k][l] - x * g[j][l]
                g[k][l] = v
                g[l][k] = v
        muk, muj = self.mu[k], self.mu[j]
        for l in range(j):
            muk[l] -= x * muj[l]
        muk[j] -= x

    def size_reduce(self, k):
        for _ in range(1000):
            self._row(k)
            muk = self.mu[k]
            changed = False
            for j in range(k - 1, -1, -1):
                if abs(muk[j]) > self.ETA:
                    x = int(round(muk[j]))
                    if x:
                        self._sub(k, j, x)
                        changed = True
            if not changed:
                break
        s = float(self.g[k][k])
        muk, rk = self.mu[k], self.r[k]
        for j in range(k):
            s -= muk[j] * rk[j]
        self.rr[k] = s

    def swap(self, k):
        """Exchange rows k-1 and k."""
        i = k - 1
        self.b[i], self.b[k] = self.b[k], self.b[i]
        if self.u is not None:
            self.u[i], self.u[k] = self.u[k], self.u[i]
        g = self.g
        g[i], g[k] = g[k], g[i]
        for row in g:
            row[i], row[k] = row[k], row[i]

    def lll(self, delta: float, start: int = 0):
        n = self.n
        if n == 0:
            return
        if start == 0:
            self.rr[0] = float(self.g[0][0])
            k = 1
        else:
            k = start
        iters = 0
        limit = 200 * n * n + 100000
        while k < n:
            iters += 1
            if iters > limit:
                raise RuntimeError("floating-point LLL did not terminate")
            self.size_reduce(k)
            m = self.mu[k][k - 1]
            if delta * self.rr[k - 1] > self.rr[k] + m * m * self.rr[k - 1]:
                self.swap(k)
                k = max(k - 1, 1)
                if k == 1:
                    self.rr[0] = float(self.g[0][0])
            else:
                k += 1

    def set_block(self, k, new_rows):
        """Replace rows k..k+len-1 and refresh the corresponding Gram entries."""
        for off, row in enumerate(new_rows):
            self.b[k + off] = row
        n = self.n
        g = self.g
        for off in range(len(new_rows)):
            i = k + off
            bi = self.b[i]
            for j in range(n):
                v = dot(bi, self.b[j])
                g[i][j] = v
                g[j][i] = v


def _lll_exact(b, delta: mpq, u=None):
    """Rational LLL (in place on lists); also the certificate for float output."""
    n = len(b)
    if n <= 1:
        return b, u
    mu, bs = gso_coefficients(b)
    half = mpq(1, 2)

    def red(k, l):
        q = mu[k][l]
        if abs(q) > half:
            x = int(gmpy2.f_div(2 * q.numerator + q.denominator, 2 * q.denominator))
            bk, bl = b[k], b[l]
            for t in range(len(bk)):
                bk[t] -= x * bl[t]
            if u is not None:
                uk, ul = u[k], u[l]
                for t in range(n):
                    uk[t] -= x * ul[t]
            muk, mul = mu[k], mu[l]
            for j in range(l):
                muk[j] -= x * mul[j]
            muk[l] -= x

    k = 1
    while k < n:
        red(k, k - 1)
        m = mu[k][k - 1]
        if bs[k] < (delta - m * m) * bs[k - 1]:
            b[k], b[k - 1] = b[k - 1], b[k]
            if u is not None:
                u[k], u[k - 1] = u[k - 1], u[k]
            for j in range(k - 1):
                mu[k][j], mu[k - 1][j] = mu[k - 1][j], mu[k][j]
            bn = bs[k] + m * m * bs[k - 1]
            mnew = m * bs[k - 1] / bn
            bs[k] = bs[k - 1] * bs[k] / bn
            bs[k - 1] = bn
            mu[k][k - 1] = mnew
            for i in range(k + 1, n):
                t = mu[i][k]
                mu[i][k] = mu[i][k - 1] - m * t
                mu[i][k - 1] = t + mnew * mu[i][k]
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b, u


def _float_delta(delta: mpq) -> float:
    return min(float(delta) + (1.0 - float(delta)) / 100.0, 0.99999)


def _reduce_rows(rows, delta, track):
    b = [[int(x) for x in r] for r in rows]
    n = len(b)
    u = [[int(i == j) for j in range(n)] for i in range(n)] if track else None
    if n >= 2:
        try:
            st = _FloatLLL(b, track=track)
            st.lll(_float_delta(delta))
            b, u = st.b, st.u
        except (OverflowError, RuntimeError, ZeroDivisionError) as exc:
            log.debug("float LLL fell back to exact arithmetic: %s", exc)
    b, u = _lll_exact(b, delta, u)
    return b, u


def lll(basis: Basis, delta=DEFAULT_DELTA) -> Basis:
    """LLL-reduced basis of the same lattice (exactly size-reduced, exact Lovasz)."""
    d = _check_delta(delta)
    stats["reduction"] += 1
    b, _ = _reduce_rows(basis.rows, d, False)
    return Basis(b, check=False)


def lll_with_transform(rows, delta=DEFAULT_DELTA):
    """(reduced rows, U) with reduced = U * rows, U unimodular."""
    d = _check_delta(delta)
    stats["reduction"] += 1
    return _reduce_rows(rows, d, True)


def is_lll_reduced(basis, delta=DEFAULT_DELTA) -> bool:
    rows = basis.rows if isinstance(basis, Basis) else basis
    d = to_q(delta)
    mu, bs = gso_coefficients(rows)
    n = len(rows)
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > mpq(1, 2):
                return False
        if i and bs[i] < (d - mu[i][i - 1] ** 2) * bs[i - 1]:
            return False
    return True


def _complete_to_block(rows: list[list[int]], coeffs: list[int]) -> list[list[int]]:
    """Unimodular change of the block rows whose first row is sum coeffs[j] rows[j]."""
    rows = [list(r) for r in rows]
    c = [int(x) for x in coeffs]
    for i in range(len(c) - 1, 0, -1):
        a, bb = c[i - 1], c[i]
        if bb == 0:
            continue
        if a == 0:
            rows[i - 1], rows[i] = rows[i], rows[i - 1]
            c[i - 1], c[i] = bb, 0
            continue
        g, x, y = gmpy2.gcdext(a, bb)
        g, x, y = int(g), int(x), int(y)
        ra, rb = rows[i - 1], rows[i]
        rows[i - 1] = [(a // g) * p + (bb // g) * q for p, q in zip(ra, rb)]
        rows[i] = [-y * p + x * q for p, q in zip(ra, rb)]
        c[i - 1], c[i] = g, 0
    if c[0] < 0:
        rows[0] = [-v for v in rows[0]]
        c[0] = -c[0]
    if c[0] != 1:
        raise LatticeError("block SVP returned a non-primitive coefficient vector")
    return rows


def _block_svp(st: _FloatLLL, k: int, kend: int):
    size = kend - k
    fmu = np.zeros((size, size))
    fr = np.empty(size)
    scale = st.rr[k]
    for i in range(size):
        fr[i] = st.rr[k + i] / scale
        mui = st.mu[k + i]
        for j in range(i):
            fmu[i, j] = mui[k + j]
    sols, dists, _ = enum_walk(fmu, fr, np.zeros(size), 1.0 - 1e-9, True, 64)
    if len(dists) == 0:
        return None
    s = int(np.argmin(dists))
    return [int(v) for v in sols[s]], float(dists[s]) * scale


def bkz(basis: Basis, beta: int, tours: int = 8, delta=DEFAULT_DELTA) -> Basis:
    """BKZ-beta with exact (unpruned) block enumeration.

    Stops after ``tours`` sweeps or at the first sweep with no insertion.
    """
    n = basis.n
    d = _check_delta(delta)
    if not (2 <= beta <= min(n, MAX_BKZ_BLOCK)):
        raise LatticeError(f"block size {beta} out of range [2, {min(n, MAX_BKZ_BLOCK)}]")
    stats["reduction"] += 1
    fd = _float_delta(d)
    st = _FloatLLL(basis.rows)
    st.lll(fd)
    for tour in range(tours):
        inserted = 0
        for k in range(n - 1):
            kend = min(k + beta, n)
            found = _block_svp(st, k, kend)
            if found is None:
                continue
            coeffs, _ = found
            block = [st.b[i] for i in range(k, kend)]
            st.set_block(k, _complete_to_block(block, coeffs))
            st.lll(fd, start=k)
            inserted += 1
        log.debug("bkz-%d tour %d: %d insertions", beta, tour, inserted)
        if not inserted:
            break
    b, _ = _lll_exact(st.b, d)
    return Basis(b, check=False)


# --- Hermite-SVP oracles -------------------------------------------------------


@dataclass(frozen=True)
class ExactPower:
    """The exact real number base**exponent, base rational > 0, exponent rational."""

    base: mpq
    exponent: Fraction

    def is_rational(self) -> bool:
        return self.exponent.denominator == 1 or self.base == 1

    def value(self) -> mpq:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        e = self.exponent.numerator if self.base != 1 else 0
        return self.base**e if e >= 0 else 1 / self.base ** (-e)

    def power(self, k) -> "ExactPower":
        return ExactPower(self.base, self.exponent * Fraction(k))

    def __float__(self) -> float:
        return float(self.base) ** float(self.exponent)

    def __eq__(self, other):
        if not isinstance(other, ExactPower):
            try:
                other = ExactPower(to_q(other), Fraction(1))
            except (TypeError, ValueError):
                return NotImplemented
        # compare b1^(e1 L) with b2^(e2 L), L clearing both exponent denominators
        lcd = math.lcm(self.exponent.denominator, other.exponent.denominator)
        e1, e2 = int(self.exponent * lcd), int(other.exponent * lcd)
        left = self.base ** e1 if e1 >= 0 else 1 / self.base ** (-e1)
        right = other.base ** e2 if e2 >= 0 else 1 / other.base ** (-e2)
        return left == right

    # equal values can have different (base, exponent) pairs
    __hash__ = None

    def __str__(self):
        return f"{self.base}^({self.exponent})"


def leq_scaled_power(lhs: mpq, p: ExactPower, rhs_factor: mpq) -> bool:
    """Exact test lhs <= p * rhs_factor for nonnegative lhs and rhs_factor."""
    lhs, rhs_factor = mpq(lhs), mpq(rhs_factor)
    q = p.exponent.denominator
    a = p.exponent.numerator
    # raise both sides to the q-th power: lhs^q <= base^a * rhs^q
    left = lhs**q
    right = rhs_factor**q
    if a >= 0:
        right *= p.base**a
    else:
        left *= p.base ** (-a)
    return left <= right


@dataclass(frozen=True)
class HsvpOracleKind:
    """Which oracle answers Hermite-SVP queries: ``lll``, ``bkz`` or ``enum``."""

    variant: str
    delta: Fraction = Fraction(3, 4)
    beta: int = 2
    tours: int = 8

    def __post_init__(self):
        if self.variant not in ("lll", "bkz", "enum"):
            raise ValueError(f"unknown oracle variant {self.variant!r}")

    @classmethod
    def LLL(cls, delta=Fraction(3, 4)):
        d = to_q(delta)
        return cls("lll", delta=Fraction(int(d.numerator), int(d.denominator)))

    @classmethod
    def BKZ(cls, beta: int, tours: int = 8):
        return cls("bkz", beta=beta, tours=tours)

    @classmethod
    def ExactEnum(cls):
        return cls("enum")

    def gamma_sq(self, n: int) -> ExactPower:
        return gamma_of(self, n)


def gamma_of(kind: HsvpOracleKind, n: int) -> ExactPower:
    """Certified squared Hermite factor of the oracle in rank n."""
    if n < 1:
        raise ValueError("rank must be positive")
    if kind.variant == "enum":
        return ExactPower(mpq(4 + n, 4), Fraction(1))
    if kind.variant == "lll":
        alpha = 1 / (to_q(kind.delta) - mpq(1, 4))
        return ExactPower(alpha, Fraction(n - 1, 2))
    beta = min(kind.beta, n)
    if beta < 2:
        return ExactPower(mpq(1), Fraction(1))
    return ExactPower(mpq(beta), Fraction(n - 1, beta - 1))


def _oracle_vector(kind: HsvpOracleKind, basis: Basis) -> tuple[int, ...]:
    if basis.n == 1:
        return basis.rows[0]
    if kind.variant == "enum":
        from .enumeration import svp_enum

        res = svp_enum(basis)
        return basis.combination(res.coeffs)
    if kind.variant == "lll":
        return lll(basis, kind.delta).rows[0]
    beta = min(kind.beta, basis.n)
    if beta < 2:
        return lll(basis).rows[0]
    return bkz(basis, beta, kind.tours).rows[0]


def hsvp_certified(kind: HsvpOracleKind, basis: Basis, v: Sequence[int]) -> bool:
    """||v||^(2n) <= gamma^(2n) covol^2, exactly."""
    n = basis.n
    g = gamma_of(kind, n)
    # (||v||^2)^n <= (gamma^2)^n * covolume_sq
    return leq_scaled_power(mpq(norm_sq(v)) ** n, g.power(n), mpq(basis.covolume_sq))


def hsvp_solve(kind: HsvpOracleKind, basis: Basis) -> tuple[int, ...]:
    """Nonzero lattice vector within the oracle's certified Hermite factor."""
    stats["oracle"] += 1
    v = tuple(_oracle_vector(kind, basis))
    if not any(v):
        raise AssertionError("oracle returned the zero vector")
    if not hsvp_certified(kind, basis, v):
        raise AssertionError(f"oracle output violates its Hermite certificate ({kind})")
    return v


def lovasz_chain(basis: Basis) -> list[Basis]:
    """Lambda = L0 > L1 > ... > L2n = 4 Lambda, doubling b_1, b_2, ... twice over."""
    rows = [list(r) for r in basis.rows]
    out = [basis]
    n = basis.n
    for step in range(2 * n):
        i = step % n
        rows[i] = [2 * x for x in rows[i]]
        out.append(Basis(rows, check=False))
    return out


def lovasz_svp_from_hsvp(basis: Basis, kind: HsvpOracleKind) -> tuple[int, ...]:
    """gamma^2-approximate shortest vector from 2n+1 Hermite-SVP oracle calls."""
    best = None
    best_norm = None
    for sub in lovasz_chain(basis):
        v = hsvp_solve(kind, sub)
        nv = norm_sq(v)
        if best is None or nv < best_norm:
            best, best_norm = v, nv
    return best
