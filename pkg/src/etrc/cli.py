"""Command-line front end.

Exit status: 0 when every certificate passes, 1 when a certificate
(Riccati residual, positive definiteness, ISS decrease) fails, 2 on any
other error. Errors are printed to stderr as one JSON object.
"""

import argparse
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import pipeline
from ._backend import BACKEND
from .errors import (
    ConvergenceError,
    EtrcError,
    HypothesisViolated,
    NotPositiveDefinite,
    RobustnessCheckFailed,
    VerificationFailed,
)
from .scenario import (
    PRESETS,
    apply_overrides,
    load_scenario,
    write_metrics_table,
    write_trace_csv,
)

log = logging.getLogger("etrc")

EXIT_OK, EXIT_CERTIFICATE, EXIT_ERROR = 0, 1, 2

CERTIFICATE_ERRORS = (ConvergenceError, HypothesisViolated, NotPositiveDefinite,
                      RobustnessCheckFailed, VerificationFailed)


def _fmt_matrix(m, digits=4):
    m = np.atleast_2d(m)
    return "[" + "; ".join(" ".join(f"{v:.{digits}f}" for v in row) for row in m) + "]"


def _load(args):
    cfg = load_scenario(args.scenario)
    overrides = list(args.set or [])
    if getattr(args, "dt", None) is not None:
        overrides.append(f"sim.dt={args.dt!r}")
    return apply_overrides(cfg, overrides)


def _out_path(args, filename):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, filename)


def _print_synthesis(syn, q_label, q_min, mu=None):
    print(f"kind: {syn.kind}")
    if syn.kind == "matched":
        print(f"K1: {_fmt_matrix(syn.k)}")
    else:
        print(f"K2: {_fmt_matrix(syn.k)}")
        print(f"L: {_fmt_matrix(syn.l)}  (l_formula={syn.l_formula})")
    print(f"S: {_fmt_matrix(syn.s)}")
    print(f"riccati_residual: {syn.residual:.3e}")
    print(f"closed_loop_spectral_abscissa: {syn.closed_loop_spectral_abscissa:.6g}")
    print(f"lambda_min({q_label}): {q_min:.9g}")
    if mu is not None:
        print(f"mu: {mu:.9g}")


def cmd_synthesize(args):
    cfg = _load(args)
    try:
        d = pipeline.design(cfg)
    except HypothesisViolated as exc:
        if exc.synthesis is None:
            raise
        _print_synthesis(exc.synthesis, "Q2", exc.min_eigenvalue)
        print(f"certificate failed: {exc}")
        return EXIT_CERTIFICATE
    _print_synthesis(d.synthesis, "Q1" if cfg.kind == "matched" else "Q2", d.q_lambda_min, d.mu)
    for note in d.notes:
        print(f"note: {note}")
    return EXIT_OK if d.synthesis.residual_ok else EXIT_CERTIFICATE


def _run_and_check(d, kind, args):
    trace = pipeline.run(d, kind, horizon=args.horizon)
    ok = True
    if kind != "periodic":
        report = pipeline.decrease_report(d, trace)
        status = "pass" if report.passed else "FAIL"
        print(f"{kind}: ISS decrease {status} (max excess {report.max_excess:.3g}, "
              f"tolerance {report.tolerance:.3g})")
        ok = report.passed
    return trace, ok


def cmd_simulate(args):
    cfg = _load(args)
    d = pipeline.design(cfg)
    kind = args.trigger or cfg.trigger.kind
    trace, ok = _run_and_check(d, kind, args)
    stem = f"{cfg.name}_{kind}"
    write_trace_csv(trace, _out_path(args, f"{stem}_trace.csv"))
    write_metrics_table([(kind, trace.metrics)], _out_path(args, f"{stem}_metrics.csv"))
    m = trace.metrics
    print(f"{kind}: tau_max={m['tau_max']:.6g} tau_min={m['tau_min']:.6g} "
          f"tau_avg={m['tau_avg']:.6g} u_total={m['u_total']}")
    return EXIT_OK if ok and d.synthesis.residual_ok else EXIT_CERTIFICATE


def cmd_bounds(args):
    cfg = _load(args)
    d = pipeline.design(cfg)
    print(f"L1: {d.l1:.9g}")
    print(f"L2: {d.l2:.9g}")
    print(f"L3: {d.l3:.9g}")
    print(f"mu: {d.mu:.9g}")
    kinds = [args.trigger] if args.trigger else ["static", "dynamic"]
    for kind in kinds:
        bound = pipeline.inter_event_bound(d, kind)
        print(f"{kind}_tau: {bound.tau:.9g}")
    if "dynamic" in kinds and d.l1 > d.lam and cfg.trigger.theta > 1.0 / (d.l1 - d.lam):
        print(f"note: theta={cfg.trigger.theta:g} exceeds 1/(L1 - lambda) = "
              f"{1.0 / (d.l1 - d.lam):.6g}")
    return EXIT_OK


def cmd_compare(args):
    cfg = _load(args)
    d = pipeline.design(cfg)
    rows, ok = [], d.synthesis.residual_ok
    for kind in ("periodic", "static", "dynamic"):
        trace, passed = _run_and_check(d, kind, args)
        ok = ok and passed
        write_trace_csv(trace, _out_path(args, f"{cfg.name}_{kind}_trace.csv"))
        rows.append((kind, trace.metrics))
    path = _out_path(args, f"{cfg.name}_compare.csv")
    write_metrics_table(rows, path)
    print(f"{'mechanism':<10} {'tau_max':>10} {'tau_min':>10} {'tau_avg':>10} {'u_total':>8}")
    for kind, m in rows:
        print(f"{kind:<10} {m['tau_max']:>10.4g} {m['tau_min']:>10.4g} {m['tau_avg']:>10.4g} "
              f"{m['u_total']:>8d}")
    print(f"table written to {path}")
    return EXIT_OK if ok else EXIT_CERTIFICATE


def cmd_presets(args):
    for name, cfg in PRESETS.items():
        print(f"{name}: {cfg.kind} uncertainty, n={len(cfg.plant.a_nominal)}, "
              f"horizon {cfg.sim.horizon:g} s")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="etrc", description="Robust event-triggered control: synthesis, simulation, bounds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({BACKEND} kernel)")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, trigger_choices=None):
        p.add_argument("--scenario", required=True, help="preset name or path to a TOML scenario")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted override, e.g. trigger.sigma=0.7 (repeatable)")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--dt", type=float, help="integration step in seconds")
        p.add_argument("--horizon", type=float, help="simulated time in seconds")
        if trigger_choices:
            p.add_argument("--trigger", choices=trigger_choices,
                           help="trigger rule (default: the scenario's trigger.kind)")

    scenario_args(sub.add_parser("synthesize", help="robust gains, residual, lambda_min(Q), mu"))
    scenario_args(sub.add_parser("simulate", help="one closed-loop run; writes trace and metrics"),
                  ["periodic", "static", "dynamic"])
    scenario_args(sub.add_parser("bounds", help="Lipschitz constants and inter-event bounds"),
                  ["static", "dynamic"])
    scenario_args(sub.add_parser("compare", help="periodic, static and dynamic runs side by side"))
    sub.add_parser("presets", help="list built-in scenarios")
    return parser


COMMANDS = {
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "compare": cmd_compare,
    "presets": cmd_presets,
}


def _configure_logging():
    level = os.environ.get("ETRC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except EtrcError as exc:
        err = {"error": exc.category, "message": str(exc)}
        if isinstance(exc, HypothesisViolated) and exc.min_eigenvalue is not None:
            err["min_eigenvalue"] = exc.min_eigenvalue
        print(json.dumps(err), file=sys.stderr)
        return EXIT_CERTIFICATE if isinstance(exc, CERTIFICATE_ERRORS) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
