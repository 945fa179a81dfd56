"""
Command line interface.

    perpsim run --config FILE [--workers N] [--out FILE.csv] [--no-timing]
    perpsim theta-star --config FILE
    perpsim slope --config FILE [--workers N]
    perpsim verify-lyapunov --config FILE [--probes K] [--n N]
    perpsim reproduce-appendix --out DIR [--reps N | --budget-ms MS] [--workers N]

Exit codes: 0 success, 2 configuration error, 3 Lyapunov refusal, 4 numeric failure.
"""
import argparse
import sys

import numpy as np

from .appendix import reproduce_appendix
from .errors import PerpsimError
from .log import configure, get_logger
from .lyapunov import MIN_DRIFT_SAMPLES, random_probes, select_params, verify_drift
from .parser import load_config
from .rng import RngStream
from .runner import PerpRunner, write_rows
from .slope import slope_for_scenario
from .spectral import find_theta_star, psi

logger = get_logger(__name__)

NUMERIC_EXIT = 4
PASS_FRACTION = 0.95


def _format_vector(values):
    return "[" + ", ".join(f"{v:.10g}" for v in np.ravel(values)) + "]"


def cmd_run(args):
    scenarios = load_config(args.config, verbose=args.verbose)
    runner = PerpRunner(workers=args.workers, verbose=args.verbose)
    rows = runner.run_all(scenarios)

    if args.out:
        runner.save_csv(args.out, timing=not args.no_timing)
    else:
        write_rows(rows, sys.stdout, timing=not args.no_timing)
    return 0


def cmd_theta_star(args):
    for sc in load_config(args.config, verbose=args.verbose):
        model = sc.build_model()
        env = find_theta_star(model)
        print(f"# {sc.label}")
        print(f"theta_star = {env.theta_star!r}")
        print(f"mu = {env.mu!r}")
        print(f"psi(theta_star) = {psi(model, env.theta_star)!r}")
        print(f"u_star = {_format_vector(env.u_star)}")
        print("K_theta_star =")
        for row in env.tilted_kernel:
            print(f"  {_format_vector(row)}")
    return 0


def cmd_slope(args):
    for sc in load_config(args.config, verbose=args.verbose):
        fit = slope_for_scenario(sc, workers=args.workers)
        print(f"# {sc.label}")
        print(f"slope = {fit.slope!r} (se {fit.std_err!r})")
        print(f"theta_star = {fit.theta_star!r}")
        print("delta,estimate,std_err,c_star")
        for p in fit.points:
            print(f"{p.delta!r},{p.estimate!r},{p.std_err!r},{p.c_star!r}")
    return 0


def cmd_verify_lyapunov(args):
    status = 0
    for sc in load_config(args.config, verbose=args.verbose):
        model = sc.build_model()
        env = find_theta_star(model)
        for delta in sc.deltas or [sc.delta]:
            effective = sc.perpetuity_delta(delta)
            params = select_params(model, env, effective, enforce_budget=not sc.force_sd)
            probes = random_probes(RngStream(sc.seed, 0), params, args.probes, model.n_states)
            checks = verify_drift(RngStream(sc.seed, 1), model, env, params, probes, n=args.n)

            passed = sum(c.passed for c in checks)
            print(f"# {sc.label} delta={delta!r}")
            print("s,d,x,ratio,std_err,passed")
            for c in checks:
                s, d, x = c.probe
                print(f"{s!r},{d!r},{x},{c.ratio!r},{c.std_err!r},{str(c.passed).lower()}")
            print(f"passed {passed}/{len(checks)}")

            if passed < PASS_FRACTION * len(checks):
                logger.error("drift condition failed on %d of %d probes at delta=%g", len(checks) - passed, len(checks), delta)
                status = NUMERIC_EXIT
    return status


def cmd_reproduce_appendix(args):
    reproduce_appendix(
        args.out,
        reps=args.reps,
        budget_ms=args.budget_ms,
        workers=args.workers,
        timing=not args.no_timing,
        verbose=args.verbose,
    )
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="perpsim", description="Rare-event simulation of Markov-modulated perpetuities")
    p.add_argument("--verbose", "-v", action="store_true", help="Log progress at info level")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run every scenario of a config file and write the CSV")
    run.add_argument("--config", required=True, help="Scenario file (key=value blocks separated by ---)")
    run.add_argument("--workers", type=int, default=1, help="Worker processes")
    run.add_argument("--out", help="CSV path (stdout when omitted); metadata goes to <out>.meta.json")
    run.add_argument("--no-timing", action="store_true", help="Write wall_ms as NA")
    run.set_defaults(func=cmd_run)

    theta = sub.add_parser("theta-star", help="Print theta*, mu, u* and the tilted kernel")
    theta.add_argument("--config", required=True)
    theta.set_defaults(func=cmd_theta_star)

    slope = sub.add_parser("slope", help="Fit log phi against log delta over the scenario deltas")
    slope.add_argument("--config", required=True)
    slope.add_argument("--workers", type=int, default=1)
    slope.set_defaults(func=cmd_slope)

    verify = sub.add_parser("verify-lyapunov", help="Monte Carlo check of the drift inequality on random probes")
    verify.add_argument("--config", required=True)
    verify.add_argument("--probes", type=int, default=100, help="Probes per delta")
    verify.add_argument("--n", type=int, default=MIN_DRIFT_SAMPLES, help="Samples per probe")
    verify.set_defaults(func=cmd_verify_lyapunov)

    appendix = sub.add_parser("reproduce-appendix", help="Run the published scenario grid")
    appendix.add_argument("--out", required=True, help="Output directory")
    budget = appendix.add_mutually_exclusive_group()
    budget.add_argument("--reps", type=int, help="Replications per row")
    budget.add_argument("--budget-ms", type=int, help="Wall-clock budget per row")
    appendix.add_argument("--workers", type=int, default=1)
    appendix.add_argument("--no-timing", action="store_true")
    appendix.set_defaults(func=cmd_reproduce_appendix)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure(args.verbose)

    try:
        return args.func(args)
    except PerpsimError as e:
        logger.error("%s", e)
        return e.exit_code
    except OSError as e:
        logger.error("%s", e)
        return NUMERIC_EXIT


def entry():
    sys.exit(main())
