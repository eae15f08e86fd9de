"""Acceptance criteria 1-11, one test each.

Every test appends a one-line verdict to RESULTS; conftest prints them in the
terminal summary. Run directly (``python3 tests/test_acceptance.py``) to get
the same lines without pytest.
"""

from __future__ import annotations

import math
import statistics
import time

import pytest
from gmpy2 import mpq

from nearcol import reduce as red
from nearcol.cli import bench_one
from nearcol.colattice import (
    batch_decode,
    bdd_threshold,
    block_layout,
    decoder_from_basis,
    nearest_colattice,
    precompute,
)
from nearcol.cvpp import absolu_decode, build_absolu_basis, cvpp_decode, cvpp_precompute
from nearcol.enumeration import cvp_enum, successive_minima_sq, svp_enum
from nearcol.exactlin import Basis, gram_schmidt, norm_sq
from nearcol.latgen import (
    Stream,
    bdd_instance,
    goldstein_mayer,
    mu_exact_rank2,
    transference_check,
    uniform_target,
)
from nearcol.reduce import HsvpOracleKind, bkz, gamma_of, lll, lovasz_svp_from_hsvp

RESULTS: list[str] = []


def verdict(k: int, ok: bool, detail: str):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_oracle_equivalence():
    t0 = time.perf_counter()
    bad = 0
    for k in range(50):
        n = (4, 6, 8)[k % 3]
        basis = goldstein_mayer(n, 10 * n, 100 + k).basis
        dec = precompute(basis, n)
        t = uniform_target(basis, k)
        if nearest_colattice(dec, t).dist_sq != cvp_enum(basis, t).dist_sq:
            bad += 1
    el = time.perf_counter() - t0
    verdict(1, bad == 0 and el < 60, f"beta=n vs exact CVP: {bad}/50 mismatches, {el:.1f}s (limit 60s)")


def test_c02_babai_bound():
    decodes = bad_gso = bad_brute = 0
    for k in range(30):
        n = 4 + k % 5
        basis = goldstein_mayer(n, 10 * n, 200 + k).basis
        dec = precompute(basis, 1)
        quarter = sum(dec.gso.bstar_sq, mpq(0)) / 4
        for j in range(5):
            t = uniform_target(basis, 1000 * k + j)
            d = nearest_colattice(dec, t).dist_sq
            decodes += 1
            bad_gso += d > quarter
            bad_brute += d > 2**n * cvp_enum(basis, t).dist_sq
    verdict(
        2,
        bad_gso == 0 and bad_brute == 0,
        f"{decodes} decodes, {bad_gso} above sum(b*^2)/4, {bad_brute} above 2^n * exact",
    )


def test_c03_sum_covering():
    checks = bad = 0
    for k in range(10):
        n = (4, 6, 8, 10, 12)[k % 5]
        basis = goldstein_mayer(n, 10 * n, 300 + k).basis
        dec = precompute(basis, 2)
        mus = [mu_exact_rank2(b) for b in dec.block_bases]
        for j in range(20):
            r = nearest_colattice(dec, uniform_target(basis, 1000 * k + j))
            checks += 1
            if any(d > m for d, m in zip(r.per_block_dist_sq, mus)) or r.dist_sq > sum(mus, mpq(0)):
                bad += 1
    verdict(3, bad == 0, f"{checks} decodes at beta=2, {bad} with a block above its covering radius")


BETAS_4 = (2, 4, 8, 12, 23)


@pytest.mark.slow
def test_c04_quality_trend():
    t0 = time.perf_counter()
    rows = []
    mono = True
    ratios = []
    for seed in range(5):
        basis = goldstein_mayer(46, 460, seed).basis
        targets = [uniform_target(basis, seed * 1000 + k) for k in range(20)]
        means = [bench_one(basis, targets, b)["mean"] for b in BETAS_4]
        rows.append(means)
        mono &= all(b <= a * 1.05 for a, b in zip(means, means[1:]))
        ratios.append(means[-1] / means[0])
    el = time.perf_counter() - t0
    avg = [statistics.mean(c) for c in zip(*rows)]
    ratio = statistics.mean(ratios)
    table = " ".join(f"b{b}={m:.3f}" for b, m in zip(BETAS_4, avg))
    verdict(
        4,
        mono and ratio <= 0.8 and el < 1800,
        f"means {table}; nonincreasing(5%)={mono}; mean(b23)/mean(b2)={ratio:.3f} (need <=0.8); {el:.0f}s",
    )


def test_c05_cvpp_guarantee():
    kind = HsvpOracleKind.ExactEnum()
    bad = 0
    factors = []
    calls = {}
    for k in range(100):
        n = 4 + k % 7
        basis = goldstein_mayer(n, 10 * n, 500 + k).basis
        pre = cvpp_precompute(basis, kind)
        calls.setdefault(n, pre.oracle_calls)
        g2 = gamma_of(kind, n).value()
        t = uniform_target(basis, k)
        best = cvp_enum(basis, t).dist_sq
        got = cvpp_decode(pre, t).dist_sq
        bad += got > n**3 * g2**3 * best
        factors.append(math.sqrt(float(got / best)) if best else 1.0)
    factors.sort()
    dist = f"factor min={factors[0]:.3f} median={factors[50]:.3f} max={factors[-1]:.3f}"
    cc = ",".join(f"n{n}:{c}/{2 * n * n}" for n, c in sorted(calls.items()))
    verdict(5, bad == 0, f"100 instances, {bad} bound violations; {dist}; oracle calls/2n^2 {cc}")


def test_c06_absolu_bound():
    kind = HsvpOracleKind.ExactEnum()
    bad = 0
    for k in range(50):
        n = 2 + k % 7
        basis = goldstein_mayer(n, 10 * n, 600 + k).basis
        ab = build_absolu_basis(basis, kind)
        lam_n = successive_minima_sq(basis)[-1]
        g2 = gamma_of(kind, n).value()
        d = absolu_decode(ab, uniform_target(basis, k)).dist_sq
        bad += d > n * g2 * lam_n / 4
    verdict(6, bad == 0, f"50 instances n<=8, {bad} above n*gamma^2*lambda_n^2/4")


def test_c07_lovasz_reduction():
    kind = HsvpOracleKind.LLL(mpq(3, 4))
    bad = 0
    for k in range(50):
        n = 2 + k % 7
        basis = goldstein_mayer(n, 10 * n, 700 + k).basis
        v = lovasz_svp_from_hsvp(basis, kind)
        lam1 = svp_enum(basis).dist_sq
        bad += norm_sq(v) > 2 ** (n - 1) * lam1
    verdict(7, bad == 0, f"50 instances n<=8, LLL(3/4) oracle, {bad} above 2^(n-1)*lambda_1^2")


def test_c08_transference():
    st = Stream(8, 8)
    bad = 0
    lo = hi = None
    for k in range(50):
        while True:
            rows = [[st.below(201) - 100 for _ in range(2)] for _ in range(2)]
            if rows[0][0] * rows[1][1] != rows[0][1] * rows[1][0]:
                break
        rep = transference_check(Basis(rows))
        bad += not (rep.mu_exact and rep.lower_ok and rep.upper_ok)
        lo = rep.product if lo is None else min(lo, rep.product)
        hi = rep.product if hi is None else max(hi, rep.product)
    verdict(8, bad == 0, f"50 rank-2 lattices, {bad} outside [1, 4]; product range [{float(lo):.3f}, {float(hi):.3f}]")


@pytest.mark.slow
def test_c09_random_lambda1():
    n = 40
    ratios = []
    for seed in range(20):
        basis = goldstein_mayer(n, 400, seed).basis
        b1 = bkz(basis, 24).rows[0]
        ratios.append(math.sqrt(norm_sq(b1)) / math.exp(math.log(float(basis.covolume_sq)) / (2 * n)))
    m = statistics.mean(ratios) / math.sqrt(n)
    verdict(9, 0.15 <= m <= 0.35, f"mean BKZ-24 |b1|/covol^(1/n) = {m:.4f} sqrt(n) (band [0.15, 0.35])")


@pytest.mark.slow
def test_c10_batch_amortization():
    basis = goldstein_mayer(46, 460, 10).basis
    targets = [uniform_target(basis, 10_000 + k) for k in range(200)]
    t0 = time.perf_counter()
    dec = precompute(basis, 8)
    pre = time.perf_counter() - t0
    before = red.stats["reduction"]
    t1 = time.perf_counter()
    batch_decode(dec, targets)
    dt = time.perf_counter() - t1
    calls = red.stats["reduction"] - before
    verdict(
        10,
        dt <= 0.25 * pre and calls == 0,
        f"precompute {pre:.2f}s, 200 decodes {dt:.2f}s ({100 * dt / pre:.1f}%, limit 25%), reduction calls during decode: {calls}",
    )


@pytest.mark.slow
def test_c11_bdd_recovery():
    basis = goldstein_mayer(20, 200, 11).basis
    dec = precompute(basis, 10)
    thr = bdd_threshold(dec).threshold_sq
    rates = {}
    for rel in (mpq(9, 10), mpq(1, 10)):
        ok = 0
        for k in range(100):
            inst = bdd_instance(basis, rel, 11_000 + k, ref_len_sq=thr)
            ok += nearest_colattice(dec, inst.target).point == inst.planted
        rates[rel] = ok
    good = rates[mpq(9, 10)] >= 95 and rates[mpq(1, 10)] == 100
    verdict(11, good, f"recovered {rates[mpq(9, 10)]}/100 at 0.9x threshold (need 95), {rates[mpq(1, 10)]}/100 at 0.1x (need 100)")


if __name__ == "__main__":
    import sys

    fails = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                fails += 1
    sys.exit(1 if fails else 0)
