"""
Scenario grid of the published numerical tables, with the published estimates and CVs.
"""
import csv
import math
from pathlib import Path

from .log import get_logger
from .parser import Scenario
from .runner import PerpRunner, emit_csv, metadata_path, save_metadata

logger = get_logger(__name__)

ARCH_PARAMS = ((1.0, 0.75), (2.0, 0.75), (1.0, 0.8), (2.0, 0.8))
ARCH_DELTAS = (0.1, 0.05, 1e-3, 5e-4, 1e-5)
MARKOV_DELTAS = (0.1, 0.05, 0.02, 0.005, 0.002)
ESTIMATORS = ("crude", "si", "sd")
ARCH_CRUDE_CAP = 1_000
MARKOV_CRUDE_CAP = 100_000
MARKOV_N_STAR_FACTOR = 1000.0
DEFAULT_REPS = 10_000

REFERENCE_HEADER = ("scenario", "model", "estimator", "delta", "estimate", "cv")

# (estimate, cv) per estimator, in the order of the delta tuple; cv None where the table says N/A
REFERENCE = {
    ("arch1", 1.0, 0.75): {
        "crude": ((6.65e-2, 3.75), (2.89e-2, 5.80), (1.11e-4, 95.05), (2.11e-5, 217.9), (0.0, None)),
        "si": ((6.84e-2, 1.79), (2.84e-2, 1.76), (1.10e-4, 1.75), (4.01e-5, 1.79), (1.34e-7, 1.72)),
        "sd": ((6.80e-2, 3.68), (2.82e-2, 5.81), (1.45e-4, 24.77), (4.22e-5, 29.93), (2.48e-7, 37.71)),
    },
    ("arch1", 2.0, 0.75): {
        "crude": ((1.51e-1, 2.37), (6.64e-2, 3.75), (2.61e-4, 61.92), (8.19e-5, 110.5), (0.0, None)),
        "si": ((1.50e-1, 1.92), (6.85e-2, 2.48), (3.00e-4, 1.87), (1.09e-4, 1.69), (3.69e-7, 1.69)),
        "sd": ((1.50e-1, 2.38), (6.92e-2, 3.66), (5.54e-4, 42.46), (1.61e-5, 42.72), (9.13e-9, 34.65)),
    },
    ("arch1", 1.0, 0.8): {
        "crude": ((7.79e-2, 3.44), (3.53e-2, 5.23), (2.27e-4, 66.39), (9.13e-5, 104.6), (0.0, None)),
        "si": ((7.78e-2, 1.72), (3.43e-2, 1.56), (2.02e-4, 1.57), (8.00e-5, 1.53), (4.21e-7, 1.55)),
        "sd": ((7.84e-2, 3.39), (3.47e-2, 5.21), (1.31e-4, 27.97), (6.52e-5, 23.15), (8.09e-7, 26.51)),
    },
    ("arch1", 2.0, 0.8): {
        "crude": ((1.59e-1, 2.30), (7.96e-2, 3.40), (4.49e-4, 47.20), (2.69e-4, 60.92), (0.0, None)),
        "si": ((1.62e-1, 1.67), (7.74e-2, 1.57), (5.12e-4, 1.57), (2.03e-4, 1.74), (1.07e-6, 1.59)),
        "sd": ((1.61e-1, 2.28), (7.77e-2, 3.44), (4.32e-4, 44.24), (1.39e-4, 23.65), (5.93e-7, 32.41)),
    },
    ("two_state",): {
        "crude": ((7.23e-2, 3.58), (2.61e-2, 6.12), (3.09e-3, 17.98), (0.0, None), (0.0, None)),
        "si": ((5.82e-2, 45.89), (2.08e-2, 10.45), (5.24e-3, 14.67), (5.92e-4, 11.25), (1.37e-4, 9.25)),
        "sd": ((5.73e-2, 4.05), (2.23e-2, 6.62), (3.51e-3, 16.83), (4.40e-4, 47.68), (2.35e-5, 44.40)),
    },
}


def _arch_name(alpha0, alpha1, estimator, delta):
    return f"arch1_{alpha0:g}_{alpha1:g}_{estimator}_{delta:g}"


def _markov_name(estimator, delta):
    return f"two_state_{estimator}_{delta:g}"


def appendix_scenarios(reps=None, budget_ms=None, seed=0):
    """
    One scenario per published table row.

    :param reps: replications per row (DEFAULT_REPS when neither reps nor budget_ms is given)
    :param budget_ms: wall-clock budget per row instead of reps
    """
    if reps is None and budget_ms is None:
        reps = DEFAULT_REPS
    run = {"reps": reps, "budget_ms": budget_ms, "seed": seed}

    scenarios = []
    for alpha0, alpha1 in ARCH_PARAMS:
        for estimator in ESTIMATORS:
            for delta in ARCH_DELTAS:
                extra = {}
                if estimator == "crude":
                    extra["step_cap"] = ARCH_CRUDE_CAP
                elif estimator == "sd":
                    extra["force_sd"] = True
                scenarios.append(
                    Scenario(
                        name=_arch_name(alpha0, alpha1, estimator, delta),
                        model="arch1",
                        alpha0=alpha0,
                        alpha1=alpha1,
                        estimator=estimator,
                        delta=delta,
                        **run,
                        **extra,
                    )
                )

    for estimator in ESTIMATORS:
        for delta in MARKOV_DELTAS:
            extra = {}
            if estimator == "crude":
                extra["step_cap"] = MARKOV_CRUDE_CAP
            elif estimator == "si":
                extra["n_star"] = math.ceil(MARKOV_N_STAR_FACTOR * math.log(1.0 / delta))
            else:
                extra["force_sd"] = True
            scenarios.append(
                Scenario(
                    name=_markov_name(estimator, delta),
                    model="two_state",
                    estimator=estimator,
                    delta=delta,
                    **run,
                    **extra,
                )
            )
    return scenarios


def reference_rows():
    """Published (scenario, model, estimator, delta, estimate, cv) rows in grid order."""
    rows = []
    for key, tables in REFERENCE.items():
        deltas = MARKOV_DELTAS if key[0] == "two_state" else ARCH_DELTAS
        for estimator in ESTIMATORS:
            for delta, (estimate, cv) in zip(deltas, tables[estimator]):
                name = _markov_name(estimator, delta) if key[0] == "two_state" else _arch_name(key[1], key[2], estimator, delta)
                rows.append((name, key[0], estimator, delta, estimate, cv))
    return rows


def config_text(scenarios):
    return "\n---\n".join(sc.to_text() for sc in scenarios) + "\n"


def write_reference(path):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(REFERENCE_HEADER)
        for name, model, estimator, delta, estimate, cv in reference_rows():
            w.writerow([name, model, estimator, repr(delta), repr(estimate), "NA" if cv is None else repr(cv)])
    logger.info("Saved reference -> %s", path)
    return path


def reproduce_appendix(out_dir, reps=None, budget_ms=None, workers=1, seed=0, timing=True, verbose=False):
    """
    Run the whole grid and write appendix.conf, appendix.csv (+ .meta.json) and
    appendix_reference.csv into ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenarios = appendix_scenarios(reps=reps, budget_ms=budget_ms, seed=seed)

    conf = out_dir / "appendix.conf"
    conf.write_text(config_text(scenarios), encoding="utf-8")
    write_reference(out_dir / "appendix_reference.csv")

    runner = PerpRunner(workers=workers, verbose=verbose)
    rows = runner.run_all(scenarios)
    csv_path = emit_csv(rows, out_dir / "appendix.csv", timing)
    save_metadata(rows, metadata_path(csv_path))
    return rows
