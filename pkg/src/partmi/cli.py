"""``partmi`` command line.

Exit codes: 0 success, 1 input error, 2 a normalisation was undefined (the
raw score is still printed), 3 exact-count budget exceeded, 4 bound
violations found by ``verify-bound``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .core import InputError, contingency_from_labelings, load_aligned
from .counting import DEFAULT_BUDGET, BudgetExceeded, log_omega, omega_mode
from .harness import DEMOS, load_sweep_config, records_to_csv, write_sweep
from .measures import NORMALIZATIONS, MeasureSpec, score_table, six_measures
from .verify import (
    DEFAULT_TABLE_BUDGET,
    DESK_CASES,
    FULL_CASES,
    FULL_TABLE_BUDGET,
    BoundCheckConfig,
    check_bound,
)

EXIT_OK, EXIT_INPUT, EXIT_UNDEFINED, EXIT_BUDGET, EXIT_VIOLATION = 0, 1, 2, 3, 4
DEFAULT_SEED = 0
RANK_TOL = 1e-12


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2))


def _report_dict(rep) -> dict:
    d = rep.as_dict()
    if rep.undefined:
        d["score"] = "undefined"
    return d


def _specs(args) -> list[MeasureSpec]:
    units = args.units
    omega = args.omega
    if getattr(args, "all", False):
        return six_measures(omega_mode(omega or "ec"), units)
    if args.base == "reduced":
        mode = omega_mode(omega or "ec")
    else:
        if omega is not None:
            raise InputError(f"--omega only applies to the reduced base, not {args.base}")
        mode = None
    return [MeasureSpec(args.base, args.norm, mode, args.form, units)]


# --------------------------------------------------------------------------
# subcommands


def cmd_compare(args) -> int:
    c, g = load_aligned(args.truth, args.cand)
    ct = contingency_from_labelings(c, g)
    reports = [score_table(ct, s, args.budget) for s in _specs(args)]
    if args.all:
        _emit({"truth": str(args.truth), "candidate": str(args.cand),
               "measures": {r.measure: _report_dict(r) for r in reports}})
    else:
        _emit(_report_dict(reports[0]))
    return EXIT_UNDEFINED if any(r.undefined for r in reports) else EXIT_OK


def _ranks(values: list[float | None]) -> list[int | None]:
    """Competition ranks, 1 = highest; near-equal values share a rank."""
    order = sorted((i for i, v in enumerate(values) if v is not None),
                   key=lambda i: -values[i])
    ranks: list[int | None] = [None] * len(values)
    prev = None
    for pos, i in enumerate(order):
        v = values[i]
        if prev is not None and abs(v - values[prev]) <= RANK_TOL * max(1.0, abs(v)):
            ranks[i] = ranks[prev]
        else:
            ranks[i] = pos + 1
        prev = i
    return ranks


def matrix_rows(truth: Path, cands: list[Path], specs: list[MeasureSpec], budget: int):
    """Score every candidate; returns (rows, errors). Ranks are added in place."""
    rows, errors = [], []
    base_specs = {s.name: MeasureSpec(s.base, "none", s.omega_mode, s.mi_form, s.units)
                  for s in specs if s.normalization == "asym"}
    for path in cands:
        try:
            c, g_aligned = load_aligned(truth, path)
            ct = contingency_from_labelings(c, g_aligned)
            reps = {s.name: score_table(ct, s, budget) for s in specs}
            base = {k: score_table(ct, b, budget).score for k, b in base_specs.items()}
        except InputError as exc:
            errors.append({"candidate": str(path), "error": str(exc)})
            continue
        rows.append({"candidate": str(path), "q_c": ct.shape[0],
                     "scores": {k: r.score for k, r in reps.items()},
                     "undefined": [k for k, r in reps.items() if r.undefined],
                     "_base": base})
    for s in specs:
        ranks = _ranks([r["scores"][s.name] for r in rows])
        for r, rk in zip(rows, ranks):
            r.setdefault("ranks", {})[s.name] = rk
    for name in base_specs:
        base_ranks = _ranks([r["_base"][name] for r in rows])
        got = [r["ranks"][name] for r in rows]
        if any(a is not None and a != b for a, b in zip(got, base_ranks)):
            raise AssertionError(f"{name} ranks differ from its unnormalised base")
    for r in rows:
        del r["_base"]
    return rows, errors


def cmd_matrix(args) -> int:
    specs = _specs(args)
    names = [s.name for s in specs]
    rows, errors = matrix_rows(Path(args.truth), [Path(p) for p in args.cands], specs, args.budget)
    if args.json:
        _emit({"truth": args.truth, "measures": names, "rows": rows, "errors": errors})
    else:
        head = ["candidate", "q_c"] + names + [f"rank_{n}" for n in names]
        lines = [head]
        for r in rows:
            sc = ["undefined" if r["scores"][n] is None else f"{r['scores'][n]:.6f}" for n in names]
            rk = ["" if r["ranks"][n] is None else str(r["ranks"][n]) for n in names]
            lines.append([r["candidate"], str(r["q_c"])] + sc + rk)
        if args.csv:
            import csv
            csv.writer(sys.stdout, lineterminator="\n").writerows(lines)
        else:
            widths = [max(len(x[i]) for x in lines) for i in range(len(head))]
            for ln in lines:
                print("  ".join(x.ljust(w) for x, w in zip(ln, widths)).rstrip())
        for e in errors:
            print(f"error: {e['candidate']}: {e['error']}", file=sys.stderr)
    if errors:
        return EXIT_INPUT
    if any(r["undefined"] for r in rows):
        return EXIT_UNDEFINED
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def cmd_omega(args) -> int:
    est = log_omega(_int_list(args.rows), _int_list(args.cols), args.mode, args.budget)
    _emit(est.as_dict())
    return EXIT_OK


def cmd_verify_bound(args) -> int:
    table = dict(((qc, qg), nmax) for qc, qg, nmax in (FULL_CASES if args.full else DESK_CASES))
    budget = args.budget or (FULL_TABLE_BUDGET if args.full else DEFAULT_TABLE_BUDGET)
    if args.qc is None and args.qg is None:
        cases = [(qc, qg, args.n_max or nmax) for (qc, qg), nmax in table.items()]
    else:
        if args.qc is None or args.qg is None:
            raise InputError("give both --qc and --qg, or neither to run the standard cases")
        nmax = args.n_max or table.get((args.qc, args.qg))
        if nmax is None:
            raise InputError("--n-max is required for this (qc, qg)")
        cases = [(args.qc, args.qg, nmax)]
    results = []
    for qc, qg, nmax in cases:
        cfg = BoundCheckConfig(qc, qg, nmax, args.omega, budget)
        res = check_bound(cfg)
        results.append(res)
        if not args.quiet:
            print(f"# q_c={qc} q_g={qg} n<={nmax} ({cfg.omega_mode}): "
                  f"{res.cases_checked} tables, {len(res.violations)} violations",
                  file=sys.stderr)
    out = {
        "cases_checked": sum(r.cases_checked for r in results),
        "violations": [v for r in results for v in r.as_dict()["violations"]],
        "equality_mismatches": [v for r in results for v in r.as_dict()["equality_mismatches"]],
        "cases": [{k: v for k, v in r.as_dict().items()
                   if k not in ("violations", "equality_mismatches")} for r in results],
    }
    _emit(out)
    bad = out["violations"] or out["equality_mismatches"]
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config, args.seed)
    if args.units != "nats":
        cfg.measures = [MeasureSpec(m.base, m.normalization, m.omega_mode, m.mi_form, args.units)
                        for m in cfg.measures]
    records = cfg.run()
    if args.out:
        man = write_sweep(cfg, records, args.out)
        if not args.quiet:
            print(f"seed: {cfg.seed}")
            print(f"wrote {len(records)} records to {args.out} (manifest {man})")
    else:
        print(f"# seed: {cfg.seed}")
        sys.stdout.write(records_to_csv(records, [m.name for m in cfg.measures]))
    return EXIT_OK


def cmd_demo(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    text = DEMOS[args.name](seed)
    if args.json:
        _emit({"demo": args.name, "seed": seed, "output": text.splitlines()})
    else:
        print(f"seed: {seed}")
        print(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--units", choices=("nats", "bits"), default="nats")
    common.add_argument("--seed", type=int, default=None)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="machine-readable JSON output")
    fmt.add_argument("--csv", action="store_true", help="CSV output where tabular")
    common.add_argument("--quiet", action="store_true")

    measure = argparse.ArgumentParser(add_help=False)
    measure.add_argument("--base", choices=("plain", "adjusted", "reduced"), default="reduced")
    measure.add_argument("--norm", choices=NORMALIZATIONS, default="asym")
    measure.add_argument("--omega", choices=("exact", "ec"), default=None,
                         help="Omega estimate for the reduced base (default ec)")
    measure.add_argument("--form", choices=("factorial", "stirling"), default="factorial")
    measure.add_argument("--all", action="store_true",
                         help="the six measures {plain,adjusted,reduced} x {sym_arith,asym}")
    measure.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                         help="node budget for exact Omega")

    p = argparse.ArgumentParser(prog="partmi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"partmi {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("compare", parents=[common, measure], help="score one candidate")
    s.add_argument("--truth", required=True)
    s.add_argument("--cand", required=True)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("matrix", parents=[common, measure], help="score and rank many candidates")
    s.add_argument("--truth", required=True)
    s.add_argument("cands", nargs="+", metavar="CANDIDATE")
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("omega", parents=[common], help="log number of tables with given margins")
    s.add_argument("--rows", required=True, help="comma-separated row sums (candidate sizes)")
    s.add_argument("--cols", required=True, help="comma-separated column sums (truth sizes)")
    s.add_argument("--mode", choices=("exact", "ec"), default="ec")
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.set_defaults(func=cmd_omega)

    s = sub.add_parser("verify-bound", parents=[common], help="exhaustive check of I(c;g) <= I(g;g)")
    s.add_argument("--qc", type=int)
    s.add_argument("--qg", type=int)
    s.add_argument("--n-max", type=int)
    s.add_argument("--omega", choices=("exact", "ec"), default="exact")
    s.add_argument("--full", action="store_true", help="larger n ranges and budget")
    s.add_argument("--budget", type=int, default=None, help="table budget")
    s.set_defaults(func=cmd_verify_bound)

    s = sub.add_parser("sweep", parents=[common], help="run a synthetic perturbation sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("demo", parents=[common], help="worked examples")
    s.add_argument("name", choices=sorted(DEMOS))
    s.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
