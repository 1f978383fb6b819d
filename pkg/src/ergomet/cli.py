"""Command line entry point: ``ergomet <verb> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .harness import SCENARIOS, ConfigError, ExperimentConfig, run_scenario, tomllib
from .joinings import empirical_joining, factor_condition, invariance_defect
from .measures import block_distribution, empirical_measure, measure_from_json
from .orbit import besicovitch, besicovitch_density, quasigeneric_check
from .symbolic import Point, Subsequence
from .transport import dbar_lower, dbar_upper, fano_dbar_lower, ot_block


def _load(path):
    path = Path(path)
    text = path.read_bytes()
    if path.suffix == ".toml":
        return tomllib.loads(text.decode())
    return json.loads(text)


def _subsequence(text: str) -> Subsequence:
    if text == "all":
        return Subsequence.all()
    kind, _, arg = text.partition(":")
    if kind == "explicit":
        return Subsequence.explicit(int(v) for v in arg.split(","))
    if kind in ("stride", "geometric"):
        return Subsequence(kind, int(arg))
    raise argparse.ArgumentTypeError(f"bad subsequence {text!r}; use all, stride:S, geometric:B or explicit:n1,n2,...")


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="") if path and path != "-" else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.load(args.config, args.scenario)
        res = run_scenario(cfg, args.out, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for c in res.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['detail']}")
    print(f"{cfg.scenario}: {'all checks passed' if res.passed else 'FAILED'}")
    return 0 if res.passed else 1


def cmd_besicovitch(args) -> int:
    p = Point.from_json(_load(args.p))
    q = Point.from_json(_load(args.q))
    fn = besicovitch_density if args.form == "density" else besicovitch
    est = fn(p, q, args.subsequence, args.horizon, args.resolution)
    _write_rows(args.out, ["n_k", "value"], est.rows())
    print(f"{est.form} Besicovitch estimate: {est.value!r}", file=sys.stderr)
    return 0


def cmd_genericity(args) -> int:
    p = Point.from_json(_load(args.point))
    m = measure_from_json(_load(args.measure))
    rep = quasigeneric_check(p, m, args.subsequence, args.horizon, args.k, args.tol)
    _write_rows(args.out, ["n_k", "discrepancy"], rep.rows())
    print(f"verdict: {'generic' if rep.verdict else 'not generic'} at tol {args.tol}", file=sys.stderr)
    return 0 if rep.verdict else 1


def cmd_dbar(args) -> int:
    a = measure_from_json(_load(args.a))
    b = measure_from_json(_load(args.b))
    upper = dbar_upper(a, b, args.coupling, args.seed, args.horizon)
    rows = []
    for k, low in dbar_lower(a, b, args.kmax):
        fano = fano_dbar_lower(a, b, k) if k >= 2 else ""
        rows.append((k, low, upper, fano))
    _write_rows(args.out, ["k", "lower", "upper", "fano_lower"], rows)
    if args.plan_out:
        _, plan = ot_block(block_distribution(a, args.kmax), block_distribution(b, args.kmax))
        Path(args.plan_out).write_text(plan.to_csv())
    return 0


def cmd_joining(args) -> int:
    pts = [Point.from_json(obj) for obj in _load(args.points)]
    j = empirical_joining(pts, args.subsequence, args.horizon, args.k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "joining_distribution.csv").write_text(j.to_csv())
    marg = [j.marginal(i).tv(empirical_measure(p, j.n, j.k)) for i, p in enumerate(pts)]
    table = []
    for N in range(1, len(pts)):
        for word in args.cylinders.split(","):
            delta = args.delta if args.delta else 2.0 ** -(len(word) - 1)
            table.append(factor_condition(pts[0], pts[N], word, delta, args.subsequence, args.horizon, N).as_dict())
    report = {
        "n": j.n,
        "k": j.k,
        "invariance_defect": invariance_defect(j),
        "marginal_tv": marg,
        "factor_conditions": table,
    }
    (out / "joining_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ergomet", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run an experiment scenario")
    r.add_argument("scenario", choices=SCENARIOS)
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--jobs", type=int, default=1, help="parallel rows (deterministic)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("besicovitch", help="Besicovitch estimate between two points")
    b.add_argument("--p", required=True, help="point JSON")
    b.add_argument("--q", required=True, help="point JSON")
    b.add_argument("--subsequence", type=_subsequence, default=Subsequence.all())
    b.add_argument("--horizon", type=int, default=10_000)
    b.add_argument("--resolution", type=int, default=64)
    b.add_argument("--form", choices=("average", "density"), default="average")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_besicovitch)

    g = sub.add_parser("genericity", help="quasi-genericity trace of a point")
    g.add_argument("--point", required=True)
    g.add_argument("--measure", required=True)
    g.add_argument("--subsequence", type=_subsequence, default=Subsequence.geometric(2))
    g.add_argument("--horizon", type=int, default=100_000)
    g.add_argument("-k", type=int, default=2)
    g.add_argument("--tol", type=float, default=0.02)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_genericity)

    d = sub.add_parser("dbar", help="d-bar bounds between two measures")
    d.add_argument("--a", required=True)
    d.add_argument("--b", required=True)
    d.add_argument("--kmax", type=int, default=4)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--horizon", type=int, default=100_000)
    d.add_argument("--coupling", default="maximal-per-step",
                   choices=("independent", "monotone", "maximal-per-step"))
    d.add_argument("--out", default="-")
    d.add_argument("--plan-out", help="write the order-kmax optimal plan as CSV")
    d.set_defaults(func=cmd_dbar)

    j = sub.add_parser("joining", help="empirical joining of a tuple of points")
    j.add_argument("--points", required=True, help="JSON list of points")
    j.add_argument("--subsequence", type=_subsequence, default=Subsequence.all())
    j.add_argument("--horizon", type=int, default=10_000)
    j.add_argument("-k", type=int, default=1)
    j.add_argument("--cylinders", default="0,1")
    j.add_argument("--delta", type=float, default=None)
    j.add_argument("--out", required=True)
    j.set_defaults(func=cmd_joining)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
