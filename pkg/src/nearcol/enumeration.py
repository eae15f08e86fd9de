"""Exact SVP/CVP by branch-and-bound enumeration.

The tree walk runs in double precision with a safety margin on the squared
radius; every candidate leaf it reports is re-evaluated with exact rationals
and only exact minima are returned. No pruning, so results are exact and the
functions double as brute-force ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from ._enum_kernel import MARGIN, enum_walk
from .exactlin import (
    Basis,
    LatticeError,
    ProjectedBasis,
    coords_in_span,
    gso_coefficients,
    to_q,
)

MAX_ENUM_RANK = 30
_MAX_SOLS = 4096


class EnumerationTooLarge(LatticeError):
    pass


@dataclass(frozen=True)
class EnumResult:
    coeffs: tuple[int, ...]
    dist_sq: mpq


def _as_float_data(mu, r):
    n = len(r)
    scale = max(r)
    fmu = np.zeros((n, n), dtype=np.float64)
    fr = np.empty(n, dtype=np.float64)
    for i in range(n):
        fr[i] = float(r[i] / scale)
        for j in range(i):
            fmu[i, j] = float(mu[i][j])
    return fmu, fr, scale


def _gso_coords(mu, y):
    """GSO coordinates tau_j = y_j + sum_{i>j} y_i mu_ij of sum y_i b_i."""
    n = len(y)
    tau = list(y)
    for j in range(n):
        s = tau[j]
        for i in range(j + 1, n):
            if y[i]:
                s += y[i] * mu[i][j]
        tau[j] = s
    return tau


def exact_dist_sq(mu, r, tau, x) -> mpq:
    """sum_j (y_j(x) - tau_j)^2 r_j, exactly."""
    n = len(r)
    total = mpq(0)
    for j in range(n):
        d = x[j] - tau[j]
        for i in range(j + 1, n):
            if x[i]:
                d += x[i] * mu[i][j]
        if d:
            total += d * d * r[j]
    return total


def _babai_residual(mu, r, tau):
    """Nearest-plane coefficients (ties to the smaller integer) and the GSO
    coordinates of the residual target - x."""
    n = len(r)
    x = [0] * n
    rel = [mpq(0)] * n
    for j in range(n - 1, -1, -1):
        c = mpq(tau[j])
        for i in range(j + 1, n):
            if x[i]:
                c -= x[i] * mu[i][j]
        # ceil(c - 1/2)
        num = 2 * c.numerator - c.denominator
        den = 2 * c.denominator
        x[j] = int(-((-num) // den))
        rel[j] = c - x[j]
    return x, rel


def babai_gso(mu, r, tau) -> list[int]:
    """Nearest-plane coefficients in GSO coordinates; ties go to the smaller integer."""
    return _babai_residual(mu, r, tau)[0]


def float_gso(mu, r):
    """Float copy of (mu, r) for the tree walk; reusable across targets."""
    return _as_float_data(mu, r)


def cvp_gso(mu, r, tau, fdata=None) -> EnumResult:
    """Exact closest point for a lattice given only by its exact GSO data.

    ``tau`` are the exact GSO coordinates of the target. Ties go to the
    lexicographically smallest coefficient vector. ``fdata`` is an optional
    cached :func:`float_gso` of (mu, r).
    """
    n = len(r)
    if n > MAX_ENUM_RANK:
        raise EnumerationTooLarge(f"rank {n} exceeds the enumeration limit {MAX_ENUM_RANK}")
    x0, rel = _babai_residual(mu, r, tau)
    d0 = sum((v * v * rj for v, rj in zip(rel, r) if v), mpq(0))
    if d0 == 0:
        return EnumResult(tuple(x0), d0)
    # the walk is centred on the Babai point so it only sees small numbers
    fmu, fr, scale = fdata if fdata is not None else _as_float_data(mu, r)
    ftau = np.array([float(v) for v in rel], dtype=np.float64)
    radius = float(d0 / scale) * MARGIN
    sols, dists, _ = enum_walk(fmu, fr, ftau, radius, False, _MAX_SOLS)
    best = d0
    best_x = tuple(x0)
    if len(dists):
        cutoff = dists.min() * MARGIN * MARGIN
        for s in range(len(dists)):
            if dists[s] > cutoff:
                continue
            step = [int(v) for v in sols[s]]
            if not any(step):
                continue
            d = exact_dist_sq(mu, r, rel, step)
            x = tuple(a + b for a, b in zip(x0, step))
            if d < best or (d == best and x < best_x):
                best, best_x = d, x
    return EnumResult(best_x, best)


def _sign_normalize(x: tuple[int, ...]) -> tuple[int, ...]:
    for v in x:
        if v:
            return x if v > 0 else tuple(-c for c in x)
    return x


def svp_gso(mu, r) -> EnumResult:
    n = len(r)
    if n > MAX_ENUM_RANK:
        raise EnumerationTooLarge(f"rank {n} exceeds the enumeration limit {MAX_ENUM_RANK}")
    fmu, fr, scale = _as_float_data(mu, r)
    radius = float(r[0] / scale) * MARGIN
    sols, dists, _ = enum_walk(fmu, fr, np.zeros(n), radius, True, _MAX_SOLS)
    zero = [0] * n
    best = None
    best_x = None
    cutoff = dists.min() * MARGIN * MARGIN if len(dists) else 0.0
    for s in range(len(dists)):
        if dists[s] > cutoff:
            continue
        x = _sign_normalize(tuple(int(v) for v in sols[s]))
        d = exact_dist_sq(mu, r, zero, x)
        if best is None or d < best or (d == best and x < best_x):
            best, best_x = d, x
    if best is None:  # float walk lost b_1 itself; cannot happen with the margin
        best_x = tuple([1] + [0] * (n - 1))
        best = r[0]
    return EnumResult(best_x, best)


class _Prepared:
    """Integerised, LLL-reduced copy of a basis plus its exact GSO."""

    def __init__(self, basis):
        if isinstance(basis, (Basis, ProjectedBasis)):
            rows = basis.rows
        else:
            rows = tuple(tuple(r) for r in basis)
        if not rows:
            raise LatticeError("empty basis")
        n = len(rows)
        if n > MAX_ENUM_RANK:
            raise EnumerationTooLarge(f"rank {n} exceeds the enumeration limit {MAX_ENUM_RANK}")
        qrows = [[to_q(v) for v in row] for row in rows]
        den = 1
        for row in qrows:
            for v in row:
                den = lcm(den, int(v.denominator))
        self.rows = rows
        self.scale = den
        int_rows = [[int(v * den) for v in row] for row in qrows]
        from .reduce import lll_with_transform

        red, u = lll_with_transform(int_rows)
        self.reduced = red
        self.transform = u
        self.mu, self.r = gso_coefficients(red)
        self.n = n

    def to_original(self, x) -> tuple[int, ...]:
        n = self.n
        out = [0] * n
        for i in range(n):
            if x[i]:
                ui = self.transform[i]
                for j in range(n):
                    out[j] += x[i] * ui[j]
        return tuple(out)

    def target_coords(self, t) -> list[mpq]:
        tq = [to_q(v) * self.scale for v in t]
        if len(tq) != len(self.reduced[0]):
            raise LatticeError("target dimension mismatch")
        y = coords_in_span(self.reduced, tq)
        return _gso_coords(self.mu, y)

    def svp(self) -> EnumResult:
        res = svp_gso(self.mu, self.r)
        # collect all minima to apply the tie rule in original coordinates
        best = res.dist_sq
        cands = self._all_within(None, best, svp=True)
        x = min(_sign_normalize(self.to_original(c)) for c in cands)
        return EnumResult(x, best / (self.scale * self.scale))

    def cvp(self, t) -> EnumResult:
        tau = self.target_coords(t)
        res = cvp_gso(self.mu, self.r, tau)
        best = res.dist_sq
        if best == 0:
            cands = [res.coeffs]
        else:
            cands = self._all_within(tau, best, svp=False)
        x = min(self.to_original(c) for c in cands)
        return EnumResult(x, best / (self.scale * self.scale))

    def _all_within(self, tau, best, svp):
        """All coefficient vectors (reduced basis) at exact distance ``best``."""
        n = self.n
        fmu, fr, scale = _as_float_data(self.mu, self.r)
        radius = float(best / scale) * MARGIN
        if svp:
            ftau = np.zeros(n)
            x0 = [0] * n
        else:
            x0 = babai_gso(self.mu, self.r, tau)
            rel = []
            for j in range(n):
                s = tau[j] - x0[j]
                for i in range(j + 1, n):
                    if x0[i]:
                        s -= x0[i] * self.mu[i][j]
                rel.append(s)
            ftau = np.array([float(v) for v in rel])
        # a fixed radius: walk with a huge buffer and no shrinking below best
        sols, dists, _ = enum_walk(fmu, fr, ftau, radius, svp, _MAX_SOLS)
        zero = [0] * n
        out = []
        for s in range(len(dists)):
            x = tuple(x0[j] + int(sols[s, j]) for j in range(n))
            d = exact_dist_sq(self.mu, self.r, zero if svp else tau, x)
            if d == best:
                out.append(x)
        if not out:
            raise AssertionError("enumeration lost the exact minimum")
        if svp:
            out += [tuple(-c for c in x) for x in out]
        return out


def svp_enum(basis) -> EnumResult:
    """Shortest nonzero vector; coefficients w.r.t. the given rows.

    Ties: first nonzero coefficient positive, then lexicographically smallest.
    """
    return _Prepared(basis).svp()


def cvp_enum(basis, t: Sequence) -> EnumResult:
    """Exact closest lattice point to t (t must lie in the span)."""
    return _Prepared(basis).cvp(t)


def enum_batch(basis, targets: Sequence[Sequence]) -> list[EnumResult]:
    targets = list(targets)
    if not targets:
        return []
    prep = _Prepared(basis)
    return [prep.cvp(t) for t in targets]


def short_vectors(basis, radius_sq) -> list[tuple[tuple[int, ...], mpq]]:
    """Every nonzero lattice vector with squared norm <= radius_sq, one of each +-pair.

    Plain exact Fincke-Pohst; meant for small ranks (ground truth, tests).
    """
    prep = _Prepared(basis)
    n, mu, r = prep.n, prep.mu, prep.r
    bound = to_q(radius_sq) * prep.scale * prep.scale
    fr = [float(v) for v in r]
    out = []
    x = [0] * n

    def rec(j, partial):
        c = mpq(0)
        for i in range(j + 1, n):
            if x[i]:
                c -= x[i] * mu[i][j]
        room = float(bound - partial) / fr[j]
        w = room**0.5 + 1e-6 * (1 + room**0.5)
        fc = float(c)
        lo, hi = int(np.floor(fc - w)) - 1, int(np.ceil(fc + w)) + 1
        for v in range(lo, hi + 1):
            d = (v - c) ** 2 * r[j]
            p = partial + d
            if p > bound:
                continue
            x[j] = v
            if j == 0:
                if p and _sign_normalize(tuple(x)) == tuple(x):
                    out.append((tuple(x), p))
            else:
                rec(j - 1, p)
        x[j] = 0

    rec(n - 1, mpq(0))
    s2 = prep.scale * prep.scale
    res = []
    for xr, p in out:
        v = basis_combination(prep.reduced, xr)
        res.append((tuple(v), p / s2))
    res.sort(key=lambda e: (e[1], e[0]))
    return res


def basis_combination(rows, x):
    m = len(rows[0])
    out = [0] * m
    for c, row in zip(x, rows):
        if c:
            for j in range(m):
                out[j] += c * row[j]
    return out


def successive_minima_sq(basis) -> list[mpq]:
    """lambda_1^2 <= ... <= lambda_n^2 by exhaustive listing and greedy independence."""
    rows = basis.rows if isinstance(basis, (Basis, ProjectedBasis)) else tuple(tuple(r) for r in basis)
    n = len(rows)
    radius = max(sum(to_q(v) ** 2 for v in row) for row in rows)
    prep = _Prepared(basis)
    s2 = prep.scale * prep.scale
    radius = min(radius, max(mpq(sum(v * v for v in row), s2) for row in prep.reduced))
    echelon: list[list[mpq]] = []
    mins = []
    for v, nsq in short_vectors(basis, radius):
        w = [mpq(t) for t in v]
        for e in echelon:
            p = next(k for k, t in enumerate(e) if t)
            if w[p]:
                f = w[p] / e[p]
                w = [a - f * b for a, b in zip(w, e)]
        if any(w):
            echelon.append(w)
            mins.append(nsq)
            if len(mins) == n:
                break
    if len(mins) != n:
        raise AssertionError("short vector listing missed a minimum")
    return mins
