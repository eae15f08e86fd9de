"""Exact integer/rational linear algebra over lattice bases.

Every real-valued quantity is a ``gmpy2.mpq``; integers are plain Python ints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq, mpz

__all__ = [
    "Q",
    "LatticeError",
    "DependentRowsError",
    "Basis",
    "GSOData",
    "ProjectedBasis",
    "to_q",
    "dot",
    "norm_sq",
    "gram_schmidt",
    "project_block",
    "dual_basis",
    "kernel_sublattice",
    "bezout_point",
    "covolume_sq",
    "round_half_up",
    "coords_in_span",
    "solve_coordinates",
    "in_lattice",
    "format_matrix",
    "parse_matrix",
    "parse_vector",
    "format_vector",
]

Q = mpq
ZERO = mpq(0)
HALF = mpq(1, 2)


class LatticeError(ValueError):
    """Invalid lattice input (bad shape, indices, non-primitive data...)."""


class DependentRowsError(LatticeError):
    """The rows handed over are linearly dependent over the rationals."""


def to_q(x) -> mpq:
    """Coerce an int, Fraction, mpq or ``"p/q"`` string to an exact rational."""
    if isinstance(x, str):
        return mpq(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact scalars")
    if isinstance(x, Fraction):
        return mpq(int(x.numerator), int(x.denominator))
    return mpq(x)


def dot(u: Sequence, v: Sequence):
    s = 0
    for a, b in zip(u, v):
        s += a * b
    return s


def norm_sq(u: Sequence):
    s = 0
    for a in u:
        s += a * a
    return s


def round_half_up(x) -> int:
    """Nearest integer, ties toward +infinity."""
    q = to_q(x)
    return int(gmpy2.f_div(q.numerator * 2 + q.denominator, 2 * q.denominator))


def _bareiss_det(mat: list[list]) -> int:
    """Fraction-free determinant of an integer square matrix."""
    a = [[mpz(x) for x in row] for row in mat]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = mpz(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            row_k = a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return int(sign * a[n - 1][n - 1])


def _gram(rows) -> list[list]:
    n = len(rows)
    g = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            g[i][j] = g[j][i] = dot(rows[i], rows[j])
    return g


@dataclass(frozen=True)
class Basis:
    """Integer basis; the rows generate the lattice.

    Construction checks that the rows are linearly independent.
    """

    rows: tuple[tuple[int, ...], ...]

    def __init__(self, rows: Iterable[Iterable[int]], *, check: bool = True):
        r = tuple(tuple(int(x) for x in row) for row in rows)
        object.__setattr__(self, "rows", r)
        if r:
            m = len(r[0])
            if any(len(row) != m for row in r):
                raise LatticeError("ragged basis rows")
            if len(r) > m:
                raise DependentRowsError(f"{len(r)} rows in ambient dimension {m}")
        if check and r and self.covolume_sq == 0:
            raise DependentRowsError("basis rows are linearly dependent")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @cached_property
    def gram(self) -> list[list[int]]:
        return _gram(self.rows)

    @cached_property
    def covolume_sq(self) -> int:
        return _bareiss_det(self.gram)

    def combination(self, coeffs: Sequence[int]) -> tuple[int, ...]:
        """Lattice vector sum(coeffs[i] * rows[i])."""
        if len(coeffs) != self.n:
            raise LatticeError("coefficient vector has wrong length")
        out = [0] * self.m
        for c, row in zip(coeffs, self.rows):
            if c:
                for j, x in enumerate(row):
                    out[j] += c * x
        return tuple(out)

    def scaled(self, k: int) -> "Basis":
        return Basis([[k * x for x in row] for row in self.rows], check=False)

    def __repr__(self) -> str:
        return f"Basis(n={self.n}, m={self.m}, rows={[list(r) for r in self.rows]!r})"


@dataclass(frozen=True)
class GSOData:
    """Exact Gram-Schmidt data: ``mu[i][j]`` for j <= i, ``bstar_sq`` and ``bstar``."""

    mu: tuple[tuple[mpq, ...], ...]
    bstar_sq: tuple[mpq, ...]
    bstar: tuple[tuple[mpq, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.bstar_sq)


@dataclass(frozen=True)
class ProjectedBasis:
    """Rows ``pi_s(b_{s+1..s+k})``: a basis of the quotient lattice Lambda_{s+k}/Lambda_s."""

    rows: tuple[tuple[mpq, ...], ...]
    parent_offset: int

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.rows[0]) if self.rows else 0


def _rows_of(basis) -> tuple:
    if isinstance(basis, (Basis, ProjectedBasis)):
        return basis.rows
    return tuple(tuple(row) for row in basis)


def gso_coefficients(rows) -> tuple[list[list[mpq]], list[mpq]]:
    """mu and squared GSO norms from the Gram matrix, without forming b_i*."""
    n = len(rows)
    g = _gram(rows)
    mu = [[ZERO] * n for _ in range(n)]
    r = [ZERO] * n
    for i in range(n):
        gi = g[i]
        mui = mu[i]
        for j in range(i):
            s = mpq(gi[j])
            muj = mu[j]
            for k in range(j):
                s -= muj[k] * mui[k] * r[k]
            if r[j] == 0:
                raise DependentRowsError(f"row {j} is dependent on previous rows")
            mui[j] = s / r[j]
        s = mpq(gi[i])
        for k in range(i):
            s -= mui[k] * mui[k] * r[k]
        r[i] = s
        mui[i] = mpq(1)
        if s == 0:
            raise DependentRowsError(f"row {i} is dependent on previous rows")
    return mu, r


def gram_schmidt(basis) -> GSOData:
    rows = _rows_of(basis)
    mu, r = gso_coefficients(rows)
    n = len(rows)
    m = len(rows[0]) if rows else 0
    bstar: list[list[mpq]] = []
    for i in range(n):
        v = [mpq(x) for x in rows[i]]
        for j in range(i):
            c = mu[i][j]
            if c:
                bj = bstar[j]
                for k in range(m):
                    v[k] -= c * bj[k]
        bstar.append(v)
    return GSOData(
        mu=tuple(tuple(row) for row in mu),
        bstar_sq=tuple(r),
        bstar=tuple(tuple(v) for v in bstar),
    )


def project_block(basis, gso: GSOData, start: int, length: int) -> ProjectedBasis:
    """Project rows start..start+length-1 orthogonally to the first ``start`` rows."""
    rows = _rows_of(basis)
    n = len(rows)
    if start < 0 or length < 1 or start + length > n:
        raise LatticeError(f"block [{start}, {start + length}) out of range for rank {n}")
    m = len(rows[0])
    out = []
    for i in range(start, start + length):
        v = [mpq(x) for x in rows[i]]
        for j in range(start):
            c = gso.mu[i][j]
            if c:
                bj = gso.bstar[j]
                for k in range(m):
                    v[k] -= c * bj[k]
        out.append(tuple(v))
    return ProjectedBasis(rows=tuple(out), parent_offset=start)


def _solve(a: list[list[mpq]], b: list[list[mpq]]) -> list[list[mpq]]:
    """Solve a X = b by Gauss-Jordan; a is square and invertible."""
    n = len(a)
    aug = [list(map(mpq, a[i])) + list(map(mpq, b[i])) for i in range(n)]
    w = len(aug[0])
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise DependentRowsError("singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        rowc = aug[col]
        for j in range(col, w):
            rowc[j] /= p
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                rowi = aug[i]
                for j in range(col, w):
                    rowi[j] -= f * rowc[j]
    return [row[n:] for row in aug]


def dual_basis(basis) -> tuple[tuple[mpq, ...], ...]:
    """Rows d_i in span(basis) with <d_i, b_j> = delta_ij, i.e. G^{-1} B."""
    rows = _rows_of(basis)
    if not rows:
        return ()
    g = _gram(rows)
    d = _solve(g, [list(r) for r in rows])
    return tuple(tuple(r) for r in d)


def solve_coordinates(basis, t: Sequence) -> list[mpq]:
    """Coordinates y with sum y_i b_i = projection of t onto span(basis)."""
    rows = _rows_of(basis)
    g = _gram(rows)
    rhs = [[dot(r, t)] for r in rows]
    return [row[0] for row in _solve(g, rhs)]


def coords_in_span(basis, t: Sequence) -> list[mpq]:
    """Like :func:`solve_coordinates` but raises if t is not in span(basis)."""
    y = solve_coordinates(basis, t)
    rows = _rows_of(basis)
    m = len(rows[0])
    for k in range(m):
        s = ZERO
        for yi, row in zip(y, rows):
            s += yi * row[k]
        if s != t[k]:
            raise LatticeError("target is not in the span of the basis")
    return y


def in_lattice(basis, v: Sequence) -> bool:
    try:
        y = coords_in_span(basis, [mpq(x) for x in v])
    except LatticeError:
        return False
    return all(c.denominator == 1 for c in y)


def _kernel_columns(a: Sequence[int]) -> tuple[list[list[int]], list[int], int]:
    """Unimodular column reduction of the row vector a.

    Returns (kernel coefficient vectors, bezout coefficient vector z, g)
    with a.z = g = gcd(a) > 0.
    """
    n = len(a)
    if n == 0 or all(x == 0 for x in a):
        raise LatticeError("dual coefficient vector is zero")
    v = [mpz(x) for x in a]
    cols = [[mpz(1) if i == j else mpz(0) for i in range(n)] for j in range(n)]
    acc = 0
    for i in range(1, n):
        u, w = v[acc], v[i]
        if w == 0:
            continue
        if u == 0:
            v[acc], v[i] = v[i], v[acc]
            cols[acc], cols[i] = cols[i], cols[acc]
            continue
        g, x, y = gmpy2.gcdext(u, w)
        ca, ci = cols[acc], cols[i]
        cols[acc] = [x * p + y * q for p, q in zip(ca, ci)]
        cols[i] = [(-w // g) * p + (u // g) * q for p, q in zip(ca, ci)]
        v[acc], v[i] = g, mpz(0)
    if v[acc] < 0:
        v[acc] = -v[acc]
        cols[acc] = [-x for x in cols[acc]]
    kern = [[int(x) for x in cols[j]] for j in range(n) if j != acc]
    return kern, [int(x) for x in cols[acc]], int(v[acc])


def kernel_sublattice(basis: Basis, c: Sequence[int], *, reduce: bool = True) -> Basis:
    """Basis of {x in Lambda : <c, x> = 0} where c is given by a_i = <c, b_i>."""
    if len(c) != basis.n:
        raise LatticeError("dual coefficient vector has wrong length")
    kern, _, _ = _kernel_columns(c)
    rows = [basis.combination(z) for z in kern]
    out = Basis(rows, check=False) if rows else Basis([], check=False)
    if reduce and out.n >= 2:
        from .reduce import lll

        out = lll(out)
    return out


def bezout_point(basis: Basis, c: Sequence[int], s: int) -> tuple[int, ...]:
    """Lattice point x with <c, x> = s, c given by a_i = <c, b_i>."""
    if len(c) != basis.n:
        raise LatticeError("dual coefficient vector has wrong length")
    _, z, g = _kernel_columns(c)
    if int(s) % g:
        raise LatticeError(f"gcd {g} of dual coefficients does not divide {s}; c is not primitive")
    k = int(s) // g
    return basis.combination([k * zi for zi in z])


def covolume_sq(basis) -> mpq:
    """det of the Gram matrix."""
    if isinstance(basis, Basis):
        return mpq(basis.covolume_sq)
    rows = _rows_of(basis)
    _, r = gso_coefficients(rows)
    out = mpq(1)
    for x in r:
        out *= x
    return out


# --- text formats ------------------------------------------------------------


def format_matrix(basis: Basis, header: str | None = None) -> str:
    """``n m`` then one row per line; an optional JSON header line goes first."""
    lines = [header] if header else []
    lines.append(f"{basis.n} {basis.m}")
    lines += [" ".join(str(x) for x in row) for row in basis.rows]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> tuple[Basis, str | None]:
    """Inverse of :func:`format_matrix`; returns (basis, header or None)."""
    header = None
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if lines and lines[0].startswith("{"):
        header = lines.pop(0)
    if not lines:
        raise LatticeError("missing 'n m' line")
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError:
        raise LatticeError(f"bad shape line {lines[0]!r}") from None
    if len(lines) - 1 != n:
        raise LatticeError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        try:
            row = [int(x) for x in ln.split()]
        except ValueError:
            raise LatticeError(f"line {k}: non-integer entry") from None
        if len(row) != m:
            raise LatticeError(f"line {k}: expected {m} entries, found {len(row)}")
        rows.append(row)
    return Basis(rows), header


def parse_vector(line: str) -> tuple[mpq, ...]:
    """Whitespace-separated integers or ``p/q`` tokens."""
    try:
        return tuple(mpq(tok) for tok in line.split())
    except ValueError:
        raise LatticeError(f"bad rational vector {line.strip()!r}") from None


def format_vector(v: Sequence) -> str:
    return " ".join(str(mpq(x)) for x in v)
