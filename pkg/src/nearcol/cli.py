"""Command-line interface: instance generation, decoding, benchmarks, verification.

Exit codes: 0 success, 1 a checked invariant failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

from gmpy2 import mpq

from . import reduce as _reduce
from .colattice import (
    BatchDecodeError,
    batch_decode,
    block_layout,
    decoder_from_basis,
    nearest_colattice,
    nearest_plane,
    precompute,
)
from .cvpp import cvpp_decode, cvpp_precompute
from .enumeration import _Prepared
from .exactlin import Basis, LatticeError, format_matrix, gram_schmidt, norm_sq, parse_matrix, parse_vector
from .latgen import goldstein_mayer, knapsack, uniform_target
from .reduce import HsvpOracleKind, bkz, lll

KINDS = {"gm": goldstein_mayer, "knapsack": knapsack}
ALGOS = ("babai", "colattice", "cvpp", "exact")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


def _read_basis(path: str) -> tuple[Basis, str | None]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return parse_matrix(text)
    except LatticeError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _read_targets(path: str, m: int) -> list[tuple]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    out, errors = [], []
    for k, ln in enumerate(lines, start=1):
        if not ln.strip():
            continue
        try:
            v = parse_vector(ln)
            if len(v) != m:
                raise LatticeError(f"expected {m} entries, found {len(v)}")
            out.append(v)
        except LatticeError as exc:
            errors.append(f"{path}:{k}: {exc}")
    if errors:
        raise UsageError("\n".join(errors))
    return out


def _normalized(dist_sq, basis: Basis) -> float:
    log_cov = math.log(float(basis.covolume_sq)) / (2 * basis.n)
    if dist_sq == 0:
        return 0.0
    return math.exp(math.log(float(dist_sq)) / 2 - log_cov)


# --- solvers -----------------------------------------------------------------


class _Solver:
    """Precomputed state for one algorithm; ``decode`` handles a single target."""

    def __init__(self, basis: Basis, algo: str, beta, remainder: str, oracle: str):
        if algo not in ALGOS:
            raise UsageError(f"unknown algo {algo!r}")
        if algo in ("babai", "exact", "cvpp") and beta not in (None, 1 if algo == "babai" else None):
            raise UsageError(f"--beta does not apply to --algo {algo}")
        if algo == "colattice" and beta is None:
            raise UsageError("--algo colattice needs --beta")
        if beta is not None and not 1 <= beta <= basis.n:
            raise UsageError(f"--beta {beta} out of range for rank {basis.n}")
        self.algo = algo
        self.basis = basis
        before = _reduce.stats["oracle"]
        if algo == "babai":
            red = lll(basis)
            self.state = (red, gram_schmidt(red))
        elif algo == "colattice":
            self.state = precompute(basis, beta, remainder=remainder)
        elif algo == "cvpp":
            kind = HsvpOracleKind.ExactEnum() if oracle == "enum" else HsvpOracleKind.LLL()
            self.state = cvpp_precompute(basis, kind)
        else:
            self.state = _Prepared(basis)
        self.oracle_calls = _reduce.stats["oracle"] - before

    def decode(self, t):
        if self.algo == "babai":
            return nearest_plane(self.state[0], self.state[1], t)
        if self.algo == "colattice":
            return nearest_colattice(self.state, t)
        if self.algo == "cvpp":
            return cvpp_decode(self.state, t)
        res = self.state.cvp(t)
        return _ExactRecord(self.basis.combination(res.coeffs), res.dist_sq)


class _ExactRecord:
    def __init__(self, point, dist_sq):
        self.point = point
        self.dist_sq = dist_sq
        self.per_block_dist_sq = (dist_sq,)


def _record(command, params, seed, res, basis, times, calls) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "point": [int(x) for x in res.point],
        "dist_sq": str(res.dist_sq),
        "per_block_dist_sq": [str(d) for d in res.per_block_dist_sq],
        "normalized_distance": _normalized(res.dist_sq, basis),
        "oracle_call_count": calls,
        "wall_times": times,
    }


def _seed_of(header):
    if header:
        try:
            return json.loads(header).get("seed")
        except json.JSONDecodeError:
            return None
    return None


# --- commands ----------------------------------------------------------------


def cmd_gen(args) -> int:
    inst = KINDS[args.kind](args.n, args.bits, args.seed)
    text = format_matrix(inst.basis, inst.header())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _params(args) -> dict:
    return {"algo": args.algo, "beta": args.beta, "remainder": args.remainder, "oracle": args.oracle}


def cmd_solve(args) -> int:
    basis, header = _read_basis(args.basis)
    targets = _read_targets(args.target, basis.m)
    if len(targets) != 1:
        raise UsageError(f"{args.target}: expected exactly one target vector")
    t0 = time.perf_counter()
    solver = _Solver(basis, args.algo, args.beta, args.remainder, args.oracle)
    t1 = time.perf_counter()
    res = _decode_or_usage(solver, targets[0])
    t2 = time.perf_counter()
    rec = _record("solve", _params(args), _seed_of(header), res, basis, {"precompute": t1 - t0, "decode": t2 - t1}, solver.oracle_calls)
    print(json.dumps(rec))
    return 0


def _decode_or_usage(solver, t):
    try:
        return solver.decode(t)
    except LatticeError as exc:
        raise UsageError(str(exc)) from None


def cmd_batch(args) -> int:
    basis, header = _read_basis(args.basis)
    targets = _read_targets(args.targets, basis.m)
    if not targets:
        return 0
    t0 = time.perf_counter()
    solver = _Solver(basis, args.algo, args.beta, args.remainder, args.oracle)
    pre_s = time.perf_counter() - t0
    seed = _seed_of(header)
    if args.algo == "colattice" and args.threads > 1:
        t1 = time.perf_counter()
        try:
            results = batch_decode(solver.state, targets, threads=args.threads)
        except BatchDecodeError as exc:
            raise UsageError(str(exc)) from None
        each = (time.perf_counter() - t1) / len(targets)
        timed = [(r, each) for r in results]
    else:
        timed = []
        for t in targets:
            t1 = time.perf_counter()
            r = _decode_or_usage(solver, t)
            timed.append((r, time.perf_counter() - t1))
    for r, dt in timed:
        rec = _record("batch", _params(args), seed, r, basis, {"precompute": pre_s, "decode": dt}, solver.oracle_calls)
        print(json.dumps(rec))
    return 0


def _kannan(basis: Basis, t, beta: int) -> mpq:
    """Embedding baseline: reduce [[B, 0], [t, M]] and read off t - v."""
    den = 1
    for x in t:
        den = math.lcm(den, int(mpq(x).denominator))
    m_emb = max(1, math.isqrt(int(max(norm_sq(r) for r in basis.rows))) // 2) * den
    rows = [[den * x for x in r] + [0] for r in basis.rows] + [[int(x * den) for x in t] + [m_emb]]
    emb = Basis(rows, check=False)
    red = bkz(emb, min(beta, emb.n)) if beta >= 2 else lll(emb)
    best = min((r for r in red.rows if abs(r[-1]) == m_emb), key=norm_sq, default=None)
    if best is None:
        return mpq(-1)
    return mpq(norm_sq(best[:-1]), den * den)


def cmd_bench_tradeoff(args) -> int:
    betas = _int_list(args.betas, "--betas")
    if any(b < 1 or b > args.n for b in betas):
        raise UsageError("--betas entries must lie in [1, n]")
    seeds = _int_list(args.seeds, "--seeds") if "," in args.seeds or "-" in args.seeds else list(range(int(args.seeds)))
    cols = ["n", "beta", "seed", "mean_normalized_distance", "precompute_s", "mean_decode_s", "gso_profile"]
    if args.kannan:
        cols.append("kannan_mean_normalized_distance")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(cols)
    for seed in seeds:
        basis = goldstein_mayer(args.n, args.bits, seed).basis
        targets = [uniform_target(basis, seed * 1000 + k) for k in range(args.targets)]
        for beta in betas:
            row = bench_one(basis, targets, beta, args.remainder)
            out = [args.n, beta, seed, f"{row['mean']:.9f}", f"{row['pre']:.3f}", f"{row['dec']:.5f}", row["profile"]]
            if args.kannan:
                ds = [_kannan(basis, t, beta) for t in targets]
                out.append(f"{sum(_normalized(d, basis) for d in ds) / len(ds):.9f}")
            w.writerow(out)
            sys.stdout.flush()
    return 0


def bench_one(basis: Basis, targets, beta: int, remainder: str = "trailing") -> dict:
    """Precompute once, decode all targets; mean normalized distance and timings."""
    t0 = time.perf_counter()
    dec = precompute(basis, beta, remainder=remainder)
    pre = time.perf_counter() - t0
    t1 = time.perf_counter()
    res = batch_decode(dec, targets)
    dec_s = (time.perf_counter() - t1) / max(1, len(targets))
    norms = [_normalized(r.dist_sq, basis) for r in res]
    profile = ";".join(f"{math.log(float(r)) / 2:.6f}" for r in dec.gso.bstar_sq)
    return {"mean": sum(norms) / len(norms), "pre": pre, "dec": dec_s, "profile": profile, "results": res}


def _int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers") from None
    if not vals:
        raise UsageError(f"{flag} is empty")
    return vals


def cmd_verify(args) -> int:
    from . import verify

    suites = list(verify.SUITES) if args.suite == "all" else [args.suite]
    instances = []
    for path in args.instance or []:
        basis, header = _read_basis(path)
        instances.append((path, basis, header))
    failed = False
    for name in suites:
        try:
            n_checks = verify.SUITES[name](instances, args.seed)
            print(f"suite {name}: ok ({n_checks} checks)")
        except verify.VerifyFailure as exc:
            print(f"suite {name}: FAILED: {exc}")
            failed = True
            break
    return 1 if failed else 0


# --- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nearcol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random lattice instance")
    g.add_argument("--kind", choices=sorted(KINDS), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--bits", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    def decoding_flags(q):
        q.add_argument("--basis", required=True, help="instance file")
        q.add_argument("--algo", choices=ALGOS, required=True)
        q.add_argument("--beta", type=int)
        q.add_argument("--remainder", choices=("trailing", "penultimate"), default="trailing")
        q.add_argument("--oracle", choices=("enum", "lll"), default="enum", help="oracle for --algo cvpp")
        q.add_argument("--threads", type=int, default=1)

    s = sub.add_parser("solve", help="decode one target")
    decoding_flags(s)
    s.add_argument("--target", required=True)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("batch", help="precompute once, decode every target in a file")
    decoding_flags(b)
    b.add_argument("--targets", required=True)
    b.set_defaults(func=cmd_batch)

    t = sub.add_parser("bench-tradeoff", help="CSV of decoding quality against block size")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--bits", type=int, required=True)
    t.add_argument("--betas", required=True)
    t.add_argument("--targets", type=int, default=20)
    t.add_argument("--seeds", default="1", help="count, or comma-separated list")
    t.add_argument("--remainder", choices=("trailing", "penultimate"), default="trailing")
    t.add_argument("--kannan", action="store_true", help="add the embedding baseline column")
    t.add_argument("--threads", type=int, default=1)
    t.set_defaults(func=cmd_bench_tradeoff)

    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--suite", choices=("exact", "colattice", "cvpp", "transference", "all"), default="all")
    v.add_argument("--instance", action="append", help="instance file to include (repeatable)")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
