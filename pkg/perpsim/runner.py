"""
Replication driver: turns scenarios into merged statistics and CSV rows.

Replications run in fixed-size chunks of stream ids ``[start, stop)``. Each chunk is folded
into its own SummaryStats and the chunks are merged in chunk order, so a fixed (seed, reps)
gives the same bits whatever the number of workers.
"""
import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import LyapunovRefusal
from .estimators import SamplerConfig, default_n_star, load_estimator
from .log import get_logger, progress as progress_bar
from .lyapunov import select_params
from .rng import RngStream
from .spectral import find_theta_star
from .stats import SummaryStats

logger = get_logger(__name__)

CHUNK_SIZE = 1000
CSV_HEADER = (
    "scenario",
    "model",
    "estimator",
    "delta",
    "reps",
    "estimate",
    "std_err",
    "cv",
    "ci_lo",
    "ci_hi",
    "mean_steps",
    "max_steps",
    "capped_count",
    "seed",
    "wall_ms",
)
NA = "NA"


@dataclass(frozen=True)
class PreparedRun:
    """Everything a worker needs to rebuild the estimator; picklable."""
    estimator: str
    model: object
    cfg: SamplerConfig
    env: object = None
    lyap: object = None

    def build(self):
        cls = load_estimator(self.estimator)
        return cls(self.model, self.env, self.lyap, self.cfg)


def default_step_cap(model, estimator):
    if estimator == "crude":
        return 1_000 if model.n_states == 1 else 100_000
    return 1_000_000


def prepare_run(
    model,
    estimator,
    delta,
    *,
    a=0.9,
    n_star=None,
    step_cap=None,
    force_sd=False,
    debug=False,
    env=None,
    n_star_delta=None,
):
    """
    Solve the spectral problem and the Lyapunov constants an estimator needs at ``delta``.

    :param delta: perpetuity delta
    :param n_star_delta: delta used for the default n_star (the user level for ARCH scenarios)
    :param force_sd: run the state-dependent sampler even when the drift budget fails
    :raises LyapunovRefusal: sd at a delta without admissible constants
    """
    cls = load_estimator(estimator)
    step_cap = step_cap or default_step_cap(model, estimator)
    if n_star is None:
        n_star = default_n_star(n_star_delta or delta)
    if cls.name == "crude":
        n_star = min(n_star, step_cap)

    cfg = SamplerConfig(
        delta=delta,
        a=a,
        n_star=n_star,
        step_cap=step_cap,
        demo=cls.name == "naive",
        debug=debug,
    )

    if cls.needs_env and env is None:
        env = find_theta_star(model)
    lyap = None
    if cls.needs_lyap:
        lyap = select_params(model, env, delta, enforce_budget=not force_sd)
    return PreparedRun(estimator=cls.name, model=model, cfg=cfg, env=env if cls.needs_env else None, lyap=lyap)


def run_chunk(prepared, seed, start, stop):
    estimator = prepared.build()
    stats = SummaryStats()
    for stream_id in range(start, stop):
        stats.add(estimator.replicate(RngStream(seed, stream_id)))
    return stats


def chunk_bounds(reps, chunk_size=CHUNK_SIZE):
    return [(start, min(start + chunk_size, reps)) for start in range(0, reps, chunk_size)]


def simulate(prepared, reps, seed, workers=1, chunk_size=CHUNK_SIZE, progress=False):
    """Run ``reps`` replications with stream ids 0..reps-1 and merge them in chunk order."""
    bounds = chunk_bounds(reps, chunk_size)
    total = SummaryStats()
    desc = f"{prepared.estimator} delta={prepared.cfg.delta:g}"

    if workers <= 1:
        chunks = (run_chunk(prepared, seed, start, stop) for start, stop in bounds)
        for chunk in progress_bar(chunks, total=len(bounds), desc=desc, enabled=progress):
            total = total.merge(chunk)
        return total

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_chunk, prepared, seed, start, stop) for start, stop in bounds]
        for future in progress_bar(futures, total=len(futures), desc=desc, enabled=progress):
            total = total.merge(future.result())
    return total


def simulate_budget(prepared, budget_ms, seed, workers=1, chunk_size=CHUNK_SIZE):
    """
    Run chunks until ``budget_ms`` of wall clock is spent; at least one chunk always runs.

    The replication count depends on the machine, so the result is not reproducible.
    """
    deadline = time.perf_counter() + budget_ms / 1000.0
    total = SummaryStats()
    start = 0

    if workers <= 1:
        while True:
            total = total.merge(run_chunk(prepared, seed, start, start + chunk_size))
            start += chunk_size
            if time.perf_counter() >= deadline:
                return total

    with ProcessPoolExecutor(max_workers=workers) as pool:
        while True:
            wave = [
                pool.submit(run_chunk, prepared, seed, lo, lo + chunk_size)
                for lo in range(start, start + workers * chunk_size, chunk_size)
            ]
            for future in wave:
                total = total.merge(future.result())
            start += workers * chunk_size
            if time.perf_counter() >= deadline:
                return total


@dataclass
class RunRow:
    scenario: str
    model: str
    estimator: str
    delta: float
    stats: SummaryStats
    seed: int
    wall_ms: float
    metadata: dict = field(default_factory=dict)

    @property
    def reps(self):
        return self.stats.n

    @property
    def estimate(self):
        return self.stats.mean

    def csv_fields(self, timing=True):
        s = self.stats
        return [
            self.scenario,
            self.model,
            self.estimator,
            _fmt(self.delta),
            str(s.n),
            _fmt(s.mean),
            _fmt(s.std_err),
            _fmt(s.cv),
            _fmt(s.ci_lo),
            _fmt(s.ci_hi),
            _fmt(s.mean_steps),
            str(s.max_steps),
            str(s.capped_count),
            str(self.seed),
            _fmt(self.wall_ms) if timing else NA,
        ]


def _fmt(value):
    if value is None:
        return NA
    value = float(value)
    if math.isnan(value):
        return NA
    return repr(value)


def _metadata(sc, prepared, delta, user_delta):
    cfg = prepared.cfg
    meta = {
        "scenario": sc.label,
        "estimator": prepared.estimator,
        "delta": user_delta,
        "effective_delta": delta,
        "level_mapping": "alpha1/delta" if delta != user_delta else "none",
        "n_star": cfg.n_star,
        "a": cfg.a,
        "step_cap": cfg.step_cap,
        "bias": load_estimator(prepared.estimator).bias,
        "model": prepared.model.describe(),
        "budget_mode": sc.budget_ms is not None,
        "deterministic": sc.budget_ms is None,
    }
    if prepared.env is not None:
        meta["theta_star"] = prepared.env.theta_star
        meta["mu"] = prepared.env.mu
        meta["u_star"] = prepared.env.u_star.tolist()
    if prepared.lyap is not None:
        meta["lyapunov"] = prepared.lyap.as_dict()
        meta["guaranteed"] = prepared.lyap.guaranteed
    return meta


def run_scenario(sc, workers=1, progress=False, delta=None, env=None, chunk_size=CHUNK_SIZE):
    """
    Run one scenario at one delta (``sc.delta`` unless given).

    :raises LyapunovRefusal: sd without admissible constants; the largest admissible delta is
        reported on the scenario's own scale
    """
    user_delta = sc.delta if delta is None else delta
    effective = sc.perpetuity_delta(user_delta)
    model = sc.build_model()

    try:
        prepared = prepare_run(
            model,
            sc.estimator,
            effective,
            a=sc.a,
            n_star=sc.n_star,
            step_cap=sc.step_cap,
            force_sd=sc.force_sd,
            debug=sc.debug,
            env=env,
            n_star_delta=user_delta,
        )
    except LyapunovRefusal as e:
        largest = e.largest_admissible_delta
        if largest is not None and effective != user_delta:
            largest *= user_delta / effective
        hint = f"largest admissible delta is {largest:g}" if largest is not None else "no admissible delta found"
        raise LyapunovRefusal(f"scenario {sc.label}: {e}; {hint}", delta=user_delta, largest_admissible_delta=largest) from e

    logger.info("Running %s (%s, delta=%g)", sc.label, prepared.estimator, user_delta)
    started = time.perf_counter()
    if sc.budget_ms is not None:
        stats = simulate_budget(prepared, sc.budget_ms, sc.seed, workers, chunk_size)
        logger.warning("scenario %s runs in budget mode; replication count %d is not reproducible", sc.label, stats.n)
    else:
        stats = simulate(prepared, sc.reps, sc.seed, workers, chunk_size, progress)
    wall_ms = round((time.perf_counter() - started) * 1000.0, 3)

    if stats.capped_count:
        logger.warning("scenario %s: %d replication(s) hit the step cap", sc.label, stats.capped_count)

    return RunRow(
        scenario=sc.label,
        model=model.name,
        estimator=prepared.estimator,
        delta=user_delta,
        stats=stats,
        seed=sc.seed,
        wall_ms=wall_ms,
        metadata=_metadata(sc, prepared, effective, user_delta),
    )


def write_rows(rows, f, timing=True):
    w = csv.writer(f, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.csv_fields(timing))


def emit_csv(rows, path, timing=True):
    """
    Write rows under CSV_HEADER. ``timing=False`` writes wall_ms as NA so files compare byte for byte.

    :raises OSError: with the offending path in the message
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            write_rows(rows, f, timing)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e

    logger.info("Saved CSV -> %s", path)
    return path


def save_metadata(rows, path):
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump([row.metadata for row in rows], f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e

    logger.info("Saved metadata -> %s", path)
    return path


def metadata_path(csv_path):
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".meta.json")


class PerpRunner:
    """
    Runs parsed scenarios and keeps their rows until saved.

    Attributes
    ----------
    workers : int
        Worker processes per scenario
    verbose : bool
        Show a progress bar per scenario
    chunk_size : int
        Replications per chunk
    """

    def __init__(self, workers=1, verbose=False, chunk_size=CHUNK_SIZE):
        self.workers = workers
        self.verbose = verbose
        self.chunk_size = chunk_size

        self.cache = []

    def run(self, scenario):
        """
        Run a scenario at each of its deltas; the tilt envelope is solved once per scenario.

        :return: list of RunRow
        """
        deltas = scenario.deltas or [scenario.delta]
        env = None
        if load_estimator(scenario.estimator).needs_env:
            env = find_theta_star(scenario.build_model())

        rows = []
        for delta in deltas:
            rows.append(
                run_scenario(
                    scenario,
                    workers=self.workers,
                    progress=self.verbose,
                    delta=delta,
                    env=env,
                    chunk_size=self.chunk_size,
                )
            )
        self.cache.extend(rows)
        return rows

    def run_all(self, scenarios):
        rows = []
        for scenario in scenarios:
            rows.extend(self.run(scenario))
        return rows

    def save_csv(self, path, timing=True):
        """Write the cached rows to ``path`` and their metadata next to it."""
        if not self.cache:
            logger.error("Nothing in cache")
            return None

        path = emit_csv(self.cache, path, timing)
        save_metadata(self.cache, metadata_path(path))
        return path
