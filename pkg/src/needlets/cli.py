"""Command line interface.

Three entry points under a single ``needlets`` command:

* ``frame check``     run the frame invariant suite, exit 0/1
* ``estimate``        threshold estimate with confidence interval at a point
* ``simulate``        replicated experiments (rates, coverage, decay, bernstein)

``simulate`` writes three artifacts per run sharing one stem: a delimited
``.csv`` table, a ``.json`` record with the full summary, and a ``.png``
figure.  Exit codes: 0 success, 1 invariant failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .checks import format_results, run_checks
from .densities import model_from_spec
from .estimators import choose_J, estimate_report, make_config, plug_in_sup
from .experiments import ExperimentPlan, persist, run_bernstein, run_coverage, run_decay, run_rates
from .figures import render_record
from .frame import analyze_sample, build_frame
from .sphere import SphereDim, check_samples, unit_vector
from .textio import dumps_17g


def _parse_point(text: str, d: int) -> np.ndarray:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != d:
        raise ValueError(f"point has {len(parts)} components, expected {d}")
    return unit_vector(np.array(parts, dtype=np.float64))


def _parse_n_list(text: str) -> tuple:
    return tuple(int(p) for p in text.split(","))


def _parse_levels(text: str) -> list:
    """Accept '2..7' ranges (inclusive) or '2,3,5' lists."""
    if ".." in text:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty level range {text!r}")
        return list(range(lo, hi + 1))
    return sorted({int(p) for p in text.split(",")})


def _load_samples(path: str, d: int) -> np.ndarray:
    """Comma or whitespace delimited (n, d) table; one optional header row."""
    with open(path) as fh:
        first = fh.readline()
    delimiter = "," if "," in first else None
    skip = 0
    try:
        [float(p) for p in first.replace(",", " ").split()]
    except ValueError:
        skip = 1
    pts = np.loadtxt(path, delimiter=delimiter, skiprows=skip, ndmin=2)
    if pts.shape[1] != d:
        raise ValueError(f"sample file has {pts.shape[1]} columns, expected {d}")
    return check_samples(pts, d)


def _load_model(path: str, frame) -> object:
    with open(path) as fh:
        spec = json.load(fh)
    return model_from_spec(spec, frame)


def _cmd_frame_check(args) -> int:
    results = run_checks(args.dim, args.jmax, args.tol)
    print(format_results(results))
    return 0 if all(r.passed for r in results) else 1


def _cmd_estimate(args) -> int:
    pts = _load_samples(args.input, args.dim)
    n = pts.shape[0]
    sd = SphereDim(args.dim)
    x = _parse_point(args.point, args.dim)
    J = choose_J(n, sd.d)
    j_max = args.jmax if args.jmax is not None else max(J - 1, 2)
    frame = build_frame(sd.d, j_max)
    J = min(J, frame.j_max + 1)
    table = analyze_sample(frame, pts, J, method=args.method)
    if args.sup == "plug-in":
        sup_f = plug_in_sup(frame, table, J)
        source = "plug-in"
    else:
        sup_f = float(args.sup)
        source = "known"
        if sup_f <= 0.0:
            raise ValueError(f"--sup must be positive, got {sup_f}")
    config = make_config(sd, n, sup_f, alpha=args.alpha, J=J, sup_norm_source=source)
    report = estimate_report(frame, table, config, x,
                             survivor_w=args.survivor_w, method=args.method)
    text = dumps_17g(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    lo, hi = report["ci"]
    print(f"estimate {report['estimate']:.6g}  ci [{lo:.6g}, {hi:.6g}]  "
          f"J {report['J']}  survivors {len(report['survivors'])}")
    return 0


def _simulate_frame(args, levels=None):
    if levels is not None:
        need = max(levels)
    else:
        need = max(choose_J(n, args.dim) - 1 for n in args.n)
        if args.kind == "bernstein":
            need = max(need, args.level)
    j_max = args.jmax if args.jmax is not None else max(need, 2)
    if j_max < need:
        raise ValueError(f"--jmax {j_max} too small, the run needs levels up to {need}")
    return build_frame(args.dim, j_max)


def _write_outputs(record: dict, out: str) -> None:
    csv_path, json_path = persist(record, out)
    png_path = render_record(record, out)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print(f"wrote {png_path}")


def _cmd_simulate(args) -> int:
    if args.kind == "decay":
        levels = _parse_levels(args.levels)
        frame = _simulate_frame(args, levels=levels)
        model = _load_model(args.model, frame)
        x0 = _parse_point(args.point, args.dim)
        record = run_decay(model, frame, x0, levels)
        _write_outputs(record, args.out)
        s = record["summary"]
        for key in ("near_beta_slope", "term_sum_slope", "approx_err_slope"):
            val = s.get(key)
            print(f"{key} = {'none' if val is None else f'{val:.4f}'}")
        return 0

    frame = _simulate_frame(args)
    model = _load_model(args.model, frame)
    plan = ExperimentPlan(
        model=model.to_spec(),
        query_point=tuple(_parse_point(args.point, args.dim)),
        n_grid=args.n,
        replications=args.reps,
        seed=args.seed,
        alpha=args.alpha,
        estimator=args.estimator if args.kind == "rates" else "threshold",
        holder_t=args.holder_t if args.kind == "rates" else None,
        level=args.level if args.kind == "bernstein" else 3,
        workers=args.workers,
        survivor_w=getattr(args, "survivor_w", False),
    )
    runner = {"rates": run_rates, "coverage": run_coverage, "bernstein": run_bernstein}[args.kind]
    record = runner(frame, plan)
    _write_outputs(record, args.out)
    s = record["summary"]
    if args.kind == "rates":
        print(f"slope = {s['slope']:.4f} (se {s['slope_se']:.4f}), "
              f"theory exponent = {s['theory_exponent']}")
    elif args.kind == "coverage":
        slope = s["width_slope"]
        print(f"coverage = {s['coverage']:.4f}, mean width = {s['mean_width']:.6g}, "
              f"width slope = {'none' if slope is None else f'{slope:.4f}'}")
    else:
        print(f"exceedance = {s['exceedance_rate']:.6g} (bound {s['bound']:.6g}), "
              f"max mean abs dev = {s['mad_max']:.6g} (bound {s['mad_bound']:.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="needlets",
                                 description="Adaptive density estimation on the sphere.")
    ap.add_argument("--version", action="version", version=f"needlets {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_frame = sub.add_parser("frame", help="frame utilities")
    frame_sub = p_frame.add_subparsers(dest="frame_command", required=True)
    p_check = frame_sub.add_parser("check", help="run the frame invariant suite")
    p_check.add_argument("--dim", type=int, default=3)
    p_check.add_argument("--jmax", type=int, default=6)
    p_check.add_argument("--tol", type=float, default=1e-9)
    p_check.set_defaults(func=_cmd_frame_check)

    p_est = sub.add_parser("estimate", help="estimate a density at a point from samples")
    p_est.add_argument("--input", required=True, help="CSV of unit vectors, one per row")
    p_est.add_argument("--dim", type=int, default=3)
    p_est.add_argument("--point", required=True, help="comma separated evaluation point")
    p_est.add_argument("--alpha", type=float, default=0.05)
    p_est.add_argument("--sup", default="plug-in",
                       help="'plug-in' or a known sup-norm bound (default plug-in)")
    p_est.add_argument("--jmax", type=int, default=None)
    p_est.add_argument("--method", choices=("exact", "interp"), default="exact")
    p_est.add_argument("--survivor-w", action="store_true",
                       help="recompute the threshold width from the survivor count")
    p_est.add_argument("--out", default=None, help="write the JSON report here")
    p_est.set_defaults(func=_cmd_estimate)

    p_sim = sub.add_parser("simulate", help="replicated experiments")
    sim_sub = p_sim.add_subparsers(dest="kind", required=True)

    def common(p, needs_reps=True):
        p.add_argument("--model", required=True, help="model spec JSON")
        p.add_argument("--dim", type=int, default=3)
        p.add_argument("--point", required=True)
        p.add_argument("--out", required=True, help="output stem or .csv/.json path")
        p.add_argument("--jmax", type=int, default=None)
        if needs_reps:
            p.add_argument("--n", type=_parse_n_list, required=True,
                           help="comma separated sample sizes")
            p.add_argument("--reps", type=int, required=True)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--alpha", type=float, default=0.05)
            p.add_argument("--workers", type=int, default=1)

    p_rates = sim_sub.add_parser("rates", help="risk decay against sample size")
    common(p_rates)
    p_rates.add_argument("--estimator", choices=("threshold", "linear"), default="threshold")
    p_rates.add_argument("--holder-t", type=float, default=None,
                         help="smoothness used by the linear truncation rule")
    p_rates.set_defaults(func=_cmd_simulate)

    p_cov = sim_sub.add_parser("coverage", help="confidence interval coverage and width")
    common(p_cov)
    p_cov.add_argument("--survivor-w", action="store_true")
    p_cov.set_defaults(func=_cmd_simulate)

    p_dec = sim_sub.add_parser("decay", help="coefficient decay across levels, no sampling")
    common(p_dec, needs_reps=False)
    p_dec.add_argument("--levels", required=True, help="'2..7' or '2,3,5'")
    p_dec.set_defaults(func=_cmd_simulate)

    p_bern = sim_sub.add_parser("bernstein", help="coefficient deviation bound at one level")
    common(p_bern)
    p_bern.add_argument("--level", type=int, default=3)
    p_bern.set_defaults(func=_cmd_simulate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
