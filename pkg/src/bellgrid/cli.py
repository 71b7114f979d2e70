"""Command-line front end.

Usage:
    bellgrid tensor --n 3 --v 0.5 [--out t.json]
    bellgrid bounds --n 6 --v 0.1765 [--oracle] | bounds --load t.json
    bellgrid window --n 2..10 [--format csv]
    bellgrid scan --n-range 4..8 --v-sweep 0.1:0.3:0.01 --format csv
    bellgrid oracle --n 3 --v 1.0 [--mode exhaustive|alternating]
    bellgrid verify

Numbers go to stdout (or --out), diagnostics to stderr.
Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bounds import classify, reports_to_csv, violation_window
from .lhv import (
    MAX_PROJECTION_NORM,
    DeterministicStrategy,
    all_patterns,
    factored_inner_product,
    lhv_inner_product,
    max_lhv_inner_product,
    projection_decomposition,
    run_oracle,
    trig_identity_suite,
)
from .tensor import CorrelationTensor, ghz_werner_tensor

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ORACLE_MAX_PARTIES = 9


class UsageError(Exception):
    pass


def parse_range(text: str) -> tuple[int, int]:
    """'a..b' (inclusive) or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected a..b") from None
    if hi < lo:
        raise UsageError(f"empty range {text!r}")
    return lo, hi


def parse_sweep(text: str) -> list[float]:
    """'start:stop:step' (stop inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise UsageError("sweep step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + k * step, 12) for k in range(max(count, 0))]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad sweep {text!r}; expected start:stop:step") from None
    if not values:
        raise UsageError(f"empty sweep {text!r}")
    for v in values:
        if not 0 <= v <= 1:
            raise UsageError(f"visibility {v} outside [0, 1]")
    return values


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load_tensor(args) -> CorrelationTensor:
    if getattr(args, "load", None):
        return CorrelationTensor.from_json(Path(args.load).read_text())
    if args.n is None or args.v is None:
        raise UsageError("give --n and --v, or --load <path>")
    return ghz_werner_tensor(int(args.n), args.v)


def _threads() -> int:
    raw = os.environ.get("BELL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"BELL_THREADS must be an integer, got {raw!r}") from None


# -- commands -----------------------------------------------------------------


def cmd_tensor(args) -> int:
    tensor = ghz_werner_tensor(args.n, args.v)
    _emit(tensor.to_json(indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    tensor = _load_tensor(args)
    lhv_max = None
    if args.oracle:
        if tensor.n_parties > ORACLE_MAX_PARTIES:
            print(f"skipping LHV oracle for N = {tensor.n_parties} > {ORACLE_MAX_PARTIES}", file=sys.stderr)
        else:
            lhv_max, _ = max_lhv_inner_product(tensor, seed=args.seed)
    report = classify(tensor, lhv_max, method=args.method, seed=args.seed)
    if args.format == "csv":
        _emit(reports_to_csv([report]), args.out)
    else:
        _emit(_dump(report.to_dict()), args.out)
    return EXIT_OK


def cmd_window(args) -> int:
    spec = args.n_range or args.n
    if spec is None:
        raise UsageError("give --n a..b")
    lo, hi = parse_range(str(spec))
    rows = [violation_window(n).to_dict() for n in range(lo, hi + 1)]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["n_parties", "lower", "upper", "nonempty"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "lower": repr(r["lower"]), "upper": repr(r["upper"]), "nonempty": str(r["nonempty"]).lower()})
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dump(rows), args.out)
    return EXIT_OK


def _scan_point(job):
    n, v, seed = job
    return classify(ghz_werner_tensor(n, v), seed=seed)


def cmd_scan(args) -> int:
    lo, hi = parse_range(args.n_range or str(args.n))
    vs = parse_sweep(args.v_sweep) if args.v_sweep else ([args.v] if args.v is not None else None)
    if vs is None:
        raise UsageError("give --v-sweep start:stop:step or --v")
    if lo < 2:
        raise ValueError("n_parties must be ≥ 2")
    jobs = [(n, v, args.seed) for n, v in itertools.product(range(lo, hi + 1), vs)]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_scan_point, jobs))
    else:
        reports = [_scan_point(j) for j in jobs]
    reports.sort(key=lambda r: (r.n_parties, r.visibility))
    if args.format == "json":
        _emit(_dump([r.to_dict() for r in reports]), args.out)
    else:
        _emit(reports_to_csv(reports), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    tensor = _load_tensor(args)
    result = run_oracle(tensor, args.mode, seed=args.seed)
    _emit(_dump(result.to_dict()), args.out)
    if not result.satisfied:
        print("LHV maximum exceeds 2^N T_max", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def verify_report(seed: int | None = None) -> dict:
    """Trig identities, projection-norm dichotomy and factored-form equivalence at N = 2, 3."""
    trig = trig_identity_suite(3)

    norms = [projection_decomposition(s).norm for s in all_patterns(3)]
    at_zero = sum(1 for x in norms if abs(x) <= 1e-12)
    at_max = sum(1 for x in norms if abs(x - MAX_PROJECTION_NORM) <= 1e-12)
    dichotomy = {"zero": at_zero, "max": at_max, "passed": at_zero == 2 and at_max == 6}

    rng = np.random.default_rng(seed if seed is not None else 0)
    worst = 0.0
    checked = 0
    for n in (2, 3):
        tensors = [ghz_werner_tensor(n, 1.0), CorrelationTensor(n, rng.uniform(-1, 1, 2**n), "random")]
        for t in tensors:
            for idx in range(2 ** (3 * n)):
                s = DeterministicStrategy.from_packed(idx, n)
                worst = max(worst, abs(factored_inner_product(s, t) - lhv_inner_product(s, t)))
                checked += 1
    factored = {"strategies_checked": checked, "max_abs_error": worst, "passed": worst <= 1e-9}

    return {
        "trig_identities": trig.to_dict(),
        "projection_dichotomy": dichotomy,
        "factored_equivalence": factored,
        "passed": trig.passed and dichotomy["passed"] and factored["passed"],
    }


def cmd_verify(args) -> int:
    report = verify_report(args.seed)
    _emit(_dump(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellgrid", description="Three-setting Bell inequality calculator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=("json",)):
        sp.add_argument("--out", help="write output to this path instead of stdout")
        sp.add_argument("--seed", type=int, default=None, help="seed for multistart maximizers")
        sp.add_argument("--format", choices=["json", "csv"], default=fmt[0])

    sp = sub.add_parser("tensor", help="GHZ-Werner correlation tensor as JSON")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--v", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_tensor)

    sp = sub.add_parser("bounds", help="(E,E), T_max, 2^N T_max and verdicts")
    sp.add_argument("--n", type=int)
    sp.add_argument("--v", type=float)
    sp.add_argument("--load", help="tensor JSON file")
    sp.add_argument("--method", choices=["grid_refine", "alternating", "closed_form_ghz"])
    sp.add_argument("--oracle", action="store_true", help="also run the exhaustive LHV oracle (N <= 9)")
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("window", help="GHZ-Werner violation windows")
    sp.add_argument("--n", help="range a..b")
    sp.add_argument("--n-range", dest="n_range")
    common(sp)
    sp.set_defaults(func=cmd_window)

    sp = sub.add_parser("scan", help="sweep N and V, one report row per point")
    sp.add_argument("--n", type=int)
    sp.add_argument("--n-range", dest="n_range")
    sp.add_argument("--v", type=float)
    sp.add_argument("--v-sweep", dest="v_sweep")
    common(sp, fmt=("csv",))
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("oracle", help="maximize over deterministic LHV strategies")
    sp.add_argument("--n", type=int)
    sp.add_argument("--v", type=float)
    sp.add_argument("--load")
    sp.add_argument("--mode", choices=["exhaustive", "alternating"], default="exhaustive")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("verify", help="check the identities behind the bound")
    common(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
