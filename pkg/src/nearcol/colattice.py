"""Nearest-colattice decoding along a block filtration of a reduced basis.

Everything after :func:`precompute` works in exact GSO coordinates: a vector
v in span(B) is carried as rho_j = <v, b_j*> / ||b_j*||^2, so its squared
norm is sum rho_j^2 ||b_j*||^2 and subtracting x_i b_i only touches
rho_0..rho_i.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import lcm
from typing import Sequence

from gmpy2 import mpq

from .enumeration import cvp_gso, float_gso, svp_gso
from .exactlin import (
    Basis,
    GSOData,
    LatticeError,
    ProjectedBasis,
    dot,
    gram_schmidt,
    norm_sq,
    project_block,
    round_half_up,
    to_q,
)
from .reduce import MAX_BKZ_BLOCK, HsvpOracleKind, bkz, lll

__all__ = [
    "Filtration",
    "PrecomputedDecoder",
    "DecodeResult",
    "BatchDecodeError",
    "block_layout",
    "lift",
    "nearest_plane",
    "precompute",
    "nearest_colattice",
    "batch_decode",
    "bdd_threshold",
]


@dataclass(frozen=True)
class Filtration:
    """Cut indices 0 = d_0 < d_1 < ... < d_k = n; Lambda_i spans the first d_i rows."""

    cuts: tuple[int, ...]

    def __post_init__(self):
        c = self.cuts
        if len(c) < 2 or c[0] != 0 or any(b <= a for a, b in zip(c, c[1:])):
            raise LatticeError(f"invalid filtration cuts {c}")
        if self.beta > MAX_BKZ_BLOCK:
            raise LatticeError(f"block of rank {self.beta} exceeds {MAX_BKZ_BLOCK}")

    @property
    def blocks(self) -> list[tuple[int, int]]:
        return list(zip(self.cuts, self.cuts[1:]))

    @property
    def beta(self) -> int:
        return max(b - a for a, b in zip(self.cuts, self.cuts[1:]))

    @property
    def complete(self) -> bool:
        return self.beta == 1


def block_layout(n: int, beta: int, remainder: str = "trailing") -> Filtration:
    """Blocks of rank beta; the leftover block goes last or second to last."""
    if not 1 <= beta <= n:
        raise LatticeError(f"block size {beta} out of range for rank {n}")
    full, rem = divmod(n, beta)
    sizes = [beta] * full
    if rem:
        if remainder == "trailing":
            sizes.append(rem)
        elif remainder == "penultimate":
            sizes.insert(len(sizes) - 1, rem) if sizes else sizes.append(rem)
        else:
            raise LatticeError(f"unknown remainder placement {remainder!r}")
    cuts = [0]
    for s in sizes:
        cuts.append(cuts[-1] + s)
    return Filtration(tuple(cuts))


@dataclass(frozen=True)
class DecodeResult:
    point: tuple[int, ...]
    dist_sq: mpq
    per_block_dist_sq: tuple[mpq, ...]
    coeffs: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "point": [int(x) for x in self.point],
            "dist_sq": str(self.dist_sq),
            "per_block_dist_sq": [str(d) for d in self.per_block_dist_sq],
        }


class _IntegralGSO:
    """Integer form of the GSO: d_j = prod_{k<=j} ||b_k*||^2, lam_ij = d_j mu_ij,
    w_j = d_{j-1} b_j*. A vector v in span(B) with denominator T is carried as
    integers N_j with rho_j = N_j / (T d_j), so decoding needs no rational gcds."""

    def __init__(self, gso: GSOData):
        n = gso.n
        d = []
        acc = mpq(1)
        for r in gso.bstar_sq:
            acc *= r
            d.append(_as_int(acc))
        self.d = d
        self.dprev = [1] + d[:-1]
        self.lam = [[_as_int(gso.mu[i][j] * d[j]) for j in range(i)] for i in range(n)]
        self.w = [[_as_int(x * self.dprev[j]) for x in gso.bstar[j]] for j in range(n)]


def _as_int(q) -> int:
    if q.denominator != 1:
        raise AssertionError("integral GSO entry is not an integer")
    return int(q.numerator)


@dataclass(frozen=True, eq=False)
class PrecomputedDecoder:
    basis: Basis
    gso: GSOData
    filtration: Filtration
    block_bases: tuple[ProjectedBasis, ...]
    _igso: _IntegralGSO = field(default=None, repr=False, compare=False)
    _block_data: tuple = field(default=(), repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.basis.n

    def block_gso(self, s: int, e: int):
        mu = [[self.gso.mu[s + i][s + j] for j in range(e - s)] for i in range(e - s)]
        return mu, list(self.gso.bstar_sq[s:e])


class BatchDecodeError(LatticeError):
    def __init__(self, failures: dict, results: list):
        self.failures = failures
        self.results = results
        lines = ", ".join(f"#{i}: {e}" for i, e in sorted(failures.items()))
        super().__init__(f"{len(failures)} target(s) failed: {lines}")


def lift(sublattice_basis, t: Sequence) -> tuple[mpq, ...]:
    """Short representative of t modulo the sublattice (nearest-plane recurrence).

    Returns r = t - sum c_i v_i with every |<r, v_i*>| / ||v_i*||^2 <= 1/2.
    """
    rows = sublattice_basis.rows if isinstance(sublattice_basis, (Basis, ProjectedBasis)) else sublattice_basis
    s = [-to_q(x) for x in t]
    if not rows:
        return tuple(-x for x in s)
    g = gram_schmidt(rows)
    for i in range(len(rows) - 1, -1, -1):
        c = round_half_up(dot(s, g.bstar[i]) / g.bstar_sq[i])
        if c:
            vi = rows[i]
            s = [a - c * b for a, b in zip(s, vi)]
    return tuple(-x for x in s)


def _gso_coords(gso: GSOData, t: Sequence[mpq]) -> list[mpq]:
    """rho_j = <t, b_j*>/||b_j*||^2; raises if t is outside span(B)."""
    rho = [dot(t, bs) / r for bs, r in zip(gso.bstar, gso.bstar_sq)]
    inside = sum((x * x * r for x, r in zip(rho, gso.bstar_sq)), mpq(0))
    if inside != norm_sq(t):
        raise LatticeError("target is not in the span of the basis")
    return rho


def _subtract(gso: GSOData, rho: list, idx: int, x: int):
    """rho <- rho - coordinates of x b_idx."""
    mu = gso.mu[idx]
    for j in range(idx):
        rho[j] -= x * mu[j]
    rho[idx] -= x


def _nearest_plane_coords(gso: GSOData, rho: list, coeffs: list, upto: int):
    """Nearest-plane reduction of rho over rows 0..upto-1 (same orientation as lift)."""
    for j in range(upto - 1, -1, -1):
        c = rho[j]
        if c.denominator == 1 and c == 0:
            continue
        # lift subtracts -round_half_up(-rho_j): ties go to the smaller integer
        x = -round_half_up(-c)
        if x:
            _subtract(gso, rho, j, x)
            coeffs[j] += x


def _finish(basis: Basis, gso: GSOData, coeffs, rho, per_block) -> DecodeResult:
    dist = sum((x * x * r for x, r in zip(rho, gso.bstar_sq)), mpq(0))
    if dist != sum(per_block, mpq(0)):
        raise AssertionError("per-block distances do not add up")
    return DecodeResult(basis.combination(coeffs), dist, tuple(per_block), tuple(int(c) for c in coeffs))


def nearest_plane(basis: Basis, gso: GSOData, t: Sequence) -> DecodeResult:
    """Babai's nearest plane; per-block entries are the n one-dimensional terms."""
    tq = [to_q(x) for x in t]
    if len(tq) != basis.m:
        raise LatticeError("target dimension mismatch")
    rho = _gso_coords(gso, tq)
    coeffs = [0] * basis.n
    _nearest_plane_coords(gso, rho, coeffs, basis.n)
    per = [rho[j] * rho[j] * gso.bstar_sq[j] for j in range(basis.n)]
    return _finish(basis, gso, coeffs, rho, per)


def _make_decoder(basis: Basis, filtration: Filtration) -> PrecomputedDecoder:
    gso = gram_schmidt(basis)
    blocks = tuple(project_block(basis, gso, s, e - s) for s, e in filtration.blocks)
    dec = PrecomputedDecoder(basis, gso, filtration, blocks)
    block_data = []
    for s, e in filtration.blocks:
        mu, r = dec.block_gso(s, e)
        block_data.append((mu, r, float_gso(mu, r)))
    block_data = tuple(block_data)
    object.__setattr__(dec, "_igso", _IntegralGSO(gso))
    object.__setattr__(dec, "_block_data", block_data)
    return dec


def precompute(
    basis: Basis,
    beta: int,
    reducer: HsvpOracleKind | None = None,
    remainder: str = "trailing",
    tours: int = 8,
) -> PrecomputedDecoder:
    """Reduce once (LLL for beta=1, BKZ-beta otherwise) and cut into blocks of rank beta."""
    n = basis.n
    if not 1 <= beta <= min(n, MAX_BKZ_BLOCK):
        raise LatticeError(f"block size {beta} out of range [1, {min(n, MAX_BKZ_BLOCK)}]")
    if reducer is None:
        reducer = HsvpOracleKind.BKZ(beta, tours) if beta >= 2 else HsvpOracleKind.LLL(mpq(99, 100))
    if reducer.variant == "lll" or n == 1:
        red = lll(basis, reducer.delta) if n > 1 else basis
    else:
        b = min(max(reducer.beta, 2), n)
        red = bkz(basis, b, reducer.tours)
    return _make_decoder(red, block_layout(n, beta, remainder))


def decoder_from_basis(basis: Basis, filtration: Filtration) -> PrecomputedDecoder:
    """Decoder over an already reduced basis (no reduction performed)."""
    if filtration.cuts[-1] != basis.n:
        raise LatticeError("filtration does not end at the basis rank")
    return _make_decoder(basis, filtration)


def nearest_colattice(decoder: PrecomputedDecoder, t: Sequence) -> DecodeResult:
    """Walk the filtration top-down: exact CVP in each quotient, lift, subtract."""
    basis, ig = decoder.basis, decoder._igso
    n = basis.n
    tq = [to_q(x) for x in t]
    if len(tq) != basis.m:
        raise LatticeError("target dimension mismatch")
    T = 1
    for x in tq:
        T = lcm(T, int(x.denominator))
    ti = [int(x * T) for x in tq]
    d, dprev, lam = ig.d, ig.dprev, ig.lam
    num = [dot(ti, w) for w in ig.w]
    if basis.n < basis.m:
        inside = sum((mpq(num[j] * num[j], d[j] * dprev[j]) for j in range(n)), mpq(0))
        if inside != norm_sq(ti):
            raise LatticeError("target is not in the span of the basis")
    coeffs = [0] * n

    def sub(i, x):
        xt = x * T
        li = lam[i]
        for j in range(i):
            num[j] -= xt * li[j]
        num[i] -= xt * d[i]
        coeffs[i] += x

    blocks = decoder.filtration.blocks
    per = [mpq(0)] * len(blocks)
    for bi in range(len(blocks) - 1, -1, -1):
        s, e = blocks[bi]
        mu, r, fdata = decoder._block_data[bi]
        tau = [mpq(num[j], T * d[j]) for j in range(s, e)]
        res = cvp_gso(mu, r, tau, fdata)
        for off, x in enumerate(res.coeffs):
            if x:
                sub(s + off, x)
        per[bi] = res.dist_sq
        # short representative of the coset modulo Lambda_{i-1}: nearest plane
        # with the lift orientation, x_j = ceil(rho_j - 1/2)
        for j in range(s - 1, -1, -1):
            den = T * d[j]
            x = -((den - 2 * num[j]) // (2 * den))
            if x:
                sub(j, x)
    dist = sum((mpq(num[j] * num[j], T * T * d[j] * dprev[j]) for j in range(n)), mpq(0))
    if dist != sum(per, mpq(0)):
        raise AssertionError("per-block distances do not add up")
    return DecodeResult(basis.combination(coeffs), dist, tuple(per), tuple(coeffs))


def batch_decode(decoder: PrecomputedDecoder, targets: Sequence[Sequence], threads: int = 1) -> list[DecodeResult]:
    """Decode every target against the shared decoder; order follows the input."""
    targets = list(targets)

    def one(t):
        try:
            return nearest_colattice(decoder, t)
        except LatticeError as exc:
            return exc

    if threads > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(one, targets))
    else:
        out = [one(t) for t in targets]
    failures = {i: r for i, r in enumerate(out) if isinstance(r, Exception)}
    if failures:
        raise BatchDecodeError(failures, out)
    return out


@dataclass(frozen=True)
class BddThreshold:
    """Decoding radius of the tail block, plus the heuristic reference value."""

    threshold_sq: mpq  # lambda_1(tail)^2 / 4, exact
    tail_rank: int
    hermite_theta: float
    heuristic_radius: float

    @property
    def threshold(self) -> float:
        return math.sqrt(float(self.threshold_sq))


def bdd_threshold(decoder: PrecomputedDecoder) -> BddThreshold:
    """Half the first minimum of the last quotient block.

    Any target whose error projects onto the tail quotient with norm below
    this radius has its tail coset recovered by the exact tail CVP.
    """
    s, e = decoder.filtration.blocks[-1]
    mu, r = decoder.block_gso(s, e)
    lam_sq = svp_gso(mu, r).dist_sq
    n = decoder.n
    beta = e - s
    log_covol = sum(math.log(float(x)) for x in decoder.gso.bstar_sq) / (2 * n)
    log_b1 = math.log(float(norm_sq(decoder.basis.rows[0]))) / 2
    log_hf = log_b1 - log_covol
    if beta >= 2 and n > 1:
        log_theta = log_hf * 2 * (beta - 1) / (n - 1)
    else:
        log_theta = 0.0
    heur = math.exp(log_theta * (2 * beta - n) / (2 * beta) + log_covol)
    return BddThreshold(lam_sq / 4, beta, math.exp(log_theta), heur)
