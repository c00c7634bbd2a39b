"""Command-line interface: ``basketpool {calibrate,t1e,power,sweep,oracle}``.

Exit codes: 0 success, 2 bad flags, 3 infeasible design, 4 oracle discrepancy.
All numbers are printed with six significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .calibration import (
    DEFAULT_NSIM,
    DEFAULT_SEED,
    DesignSpec,
    InfeasibleDesign,
    calibrate,
    exact_t1e,
    type1_error,
)
from .combiner import CombinationMethod, WeightScheme
from .power import ScenarioSpec, overall_power, power_given_G
from .sweeps import format_number, parse_grid, sweep_alpha_star, sweep_power

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_DISCREPANCY = 4


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _weights(text):
    if text == "equal":
        return WeightScheme()
    if text.startswith("n="):
        n = _floats(text[2:])
        try:
            return WeightScheme.sample_size(n)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
    raise argparse.ArgumentTypeError(f"weights must be 'equal' or 'n=<comma list>', got {text!r}")


def _grid(text):
    try:
        return parse_grid(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _sim_flags(p):
    p.add_argument("--nsim", type=int, default=DEFAULT_NSIM, help="replicates (default 100000)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 43)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers; never changes the numbers")


def _design_flags(p, k_required=True):
    if k_required:
        p.add_argument("--k", type=int, required=True, help="number of indications")
    p.add_argument("--tau", type=float, required=True, help="pruning p-value threshold")
    p.add_argument("--alpha", type=float, default=0.05, help="overall type I error")
    p.add_argument("--method", choices=[m.value for m in CombinationMethod], default="invnorm")
    p.add_argument("--weights", type=_weights, default=WeightScheme(),
                   help="'equal' or 'n=10,30,60'")
    _sim_flags(p)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="basketpool",
        description="Calibrate and simulate prune-and-pool basket trial designs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate the pooled significance level")
    _design_flags(p)
    p.add_argument("--mode", choices=["quantile", "bisection"], default="quantile")
    p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("t1e", help="type I error at a given pooled level")
    _design_flags(p)
    p.add_argument("--alpha-star", type=float, required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("power", help="power given G active cohorts, or overall power")
    _design_flags(p)
    p.add_argument("--g", type=int, default=None, help="active cohorts; omit for overall")
    p.add_argument("--gamma", type=_floats, default=[2.0], help="scalar or comma list")
    p.add_argument("--prior", type=_floats, default=None, help="prior over G=1..K")
    p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("sweep", help="alpha-star or power over a (K, tau) grid")
    p.add_argument("--kind", choices=["alpha-star", "power"], required=True)
    p.add_argument("--k-list", type=_ints, default=[2, 3, 4, 5, 6])
    p.add_argument("--tau-grid", type=_grid, default=parse_grid("0.01:1.0:0.01"),
                   help="start:stop:step or comma list")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=[m.value for m in CombinationMethod], default="invnorm")
    p.add_argument("--weights", type=_weights, default=WeightScheme())
    p.add_argument("--gamma", type=_floats, default=[2.0])
    p.add_argument("--prior", type=_floats, default=None)
    _sim_flags(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o", default=None, help="file path (default stdout)")

    p = sub.add_parser("oracle", help="compare Monte Carlo type I error to the exact value")
    p.add_argument("--k", type=int, choices=[1, 2], required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--alpha-star", type=float, required=True)
    _sim_flags(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def _design(args, K=None):
    return DesignSpec(K=args.k if K is None else K, tau=args.tau, alpha=args.alpha,
                      method=args.method, weights=args.weights, nsim=args.nsim, seed=args.seed)


def _num(x):
    if x is None:
        return None
    if isinstance(x, bool):
        return x
    return float(format_number(x)) if math.isfinite(x) else None


def _emit(report, fmt, out):
    if fmt == "json":
        out.write(json.dumps(report) + "\n")
        return
    for key, value in report.items():
        if isinstance(value, dict):
            out.write(f"{key}:\n")
            for k, v in value.items():
                if isinstance(v, dict):
                    v = "  ".join(f"{kk}={_text(vv)}" for kk, vv in v.items())
                else:
                    v = _text(v)
                out.write(f"  {k}  {v}\n")
        else:
            out.write(f"{key:<15} {_text(value)}\n")


def _text(v):
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_number(v)
    return str(v)


def _infeasible(err, fmt, out):
    report = {"feasible": False, "alpha": _num(err.alpha), "ceiling": _num(err.ceiling)}
    _emit(report, fmt, out)
    sys.stderr.write(f"infeasible design: {err}\n")
    return EXIT_INFEASIBLE


def cmd_calibrate(args, out):
    res = calibrate(_design(args), mode=args.mode, workers=args.workers)
    report = {
        "alpha_star": _num(res.alpha_star),
        "w_star": _num(res.w_star),
        "achieved_t1e": _num(res.achieved_t1e),
        "se": _num(res.mc_standard_error),
        "feasible": res.feasible,
    }
    if res.w_star is None:
        report["critical_value"] = _num(res.critical_value)
    _emit(report, args.format, out)
    return EXIT_OK


def cmd_t1e(args, out):
    est = type1_error(_design(args), args.alpha_star, workers=args.workers)
    _emit({"t1e": _num(est.value), "se": _num(est.se), "rejections": est.count,
           "nsim": args.nsim}, args.format, out)
    return EXIT_OK


def cmd_power(args, out):
    design = _design(args)
    gamma = args.gamma[0] if len(args.gamma) == 1 else args.gamma
    res_cal = calibrate(design, workers=args.workers)
    if args.g is not None:
        if args.prior is not None:
            raise ValueError("--prior applies to overall power; drop --g")
        est = power_given_G(ScenarioSpec(design, args.g, gamma), res_cal, workers=args.workers)
        per_G = {str(args.g): {"power": _num(est.value), "se": _num(est.se)}}
        overall = est.value
    else:
        res = overall_power(design, gamma, args.prior, res_cal, workers=args.workers)
        per_G = {str(g): {"power": _num(e.value), "se": _num(e.se)} for g, e in res.per_G.items()}
        overall = res.overall
    _emit({"per_G": per_G, "overall": _num(overall),
           "alpha_star_used": _num(res_cal.alpha_star)}, args.format, out)
    return EXIT_OK


def cmd_sweep(args, out):
    common = dict(alpha=args.alpha, method=args.method, weights=args.weights,
                  nsim=args.nsim, seed=args.seed, workers=args.workers)
    if args.kind == "alpha-star":
        table = sweep_alpha_star(args.k_list, args.tau_grid, **common)
    else:
        gamma = args.gamma[0] if len(args.gamma) == 1 else args.gamma
        table = sweep_power(args.k_list, args.tau_grid, gamma=gamma, prior=args.prior, **common)
    text = table.to_csv() if args.format == "csv" else table.to_json()
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_oracle(args, out):
    exact = exact_t1e(args.k, args.tau, args.alpha_star)
    design = DesignSpec(K=args.k, tau=args.tau, nsim=args.nsim, seed=args.seed)
    est = type1_error(design, args.alpha_star, workers=args.workers)
    diff = est.value - exact
    if est.se > 0:
        z = diff / est.se
    else:
        z = 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)
    report = {"exact": _num(exact), "mc": _num(est.value), "se": _num(est.se),
              "discrepancy_se": _num(z) if math.isfinite(z) else str(z)}
    _emit(report, args.format, out)
    return EXIT_OK if abs(z) <= 4.0 else EXIT_DISCREPANCY


COMMANDS = {
    "calibrate": cmd_calibrate,
    "t1e": cmd_t1e,
    "power": cmd_power,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    try:
        return COMMANDS[args.command](args, out)
    except InfeasibleDesign as err:
        return _infeasible(err, getattr(args, "format", "text"), out)
    except ValueError as err:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"basketpool {args.command}: error: {err}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
