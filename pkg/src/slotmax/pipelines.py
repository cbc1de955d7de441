"""End-to-end runs, experiment sweeps, and the result CSV contract.

A run builds the exposure model from the input CSVs, executes one selection
algorithm, and emits one result row. Sweeps repeat that over a list of
parameter values (optionally several algorithms), averaging each cell over
``reps`` repetitions.

Reported runtime covers the selection phase only (clustering, pruning and
picking), not file parsing or model construction, since every algorithm
shares the same model. Output CSVs are byte-deterministic for identical
configs; measured wall-clock is therefore written to the file only when
``embed_timing`` is set (it is always available on the returned rows and
on stderr).
"""

from __future__ import annotations

import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

from .corpus import ExposureModel, build_exposure_model, enumerate_slots, parse_billboards, \
    parse_trajectories
from .errors import InternalInvariantError, ValidationError
from .influence import naive_influence
from .partition import merge_members, prune_clusters, theta_partition, write_partition_csv, \
    write_partition_summary
from .psg import PsgParams, prune
from .selection import SelectionResult, brute_force_opt, greedy, max_coverage, random_k, top_k

ALGORITHMS = (
    "greedy", "psg_greedy", "part_greedy", "part_psg_greedy",
    "random", "top_k", "max_coverage", "psg_random", "brute_force",
)
SEEDED_ALGORITHMS = {"psg_greedy", "part_psg_greedy", "random", "psg_random"}

CSV_HEADER = ("algorithm,k,theta,lambda_m,seed,reps,influence,influence_min,"
              "influence_max,runtime_ms,ground_before,ground_after,"
              "clusters_before,clusters_after")

INFLUENCE_TOL = 1e-9


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    k: int
    billboards: str
    trajectories: str
    out: str | None = None
    theta: float = 0.2
    lambda_m: float = 100.0
    delta_minutes: int = 5
    t_start: int = 0
    t_end: int = 1440
    h: float = 8.0
    ell: float = 8.0
    seed: int = 0
    reps: int = 1
    embed_timing: bool = False
    workers: int = 1
    dump_partition: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(
                f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}"
            )
        if self.reps < 1:
            raise ValidationError("reps must be at least 1")


@dataclass
class ExperimentRow:
    algorithm: str
    k: int
    theta: float
    lambda_m: float
    seed: int
    reps: int
    influence: float
    influence_min: float
    influence_max: float
    runtime_ms: int
    ground_before: int
    ground_after: int
    clusters_before: int
    clusters_after: int
    chosen: list[int] | None = None
    short: bool = False
    error: str | None = None

    def to_csv(self, embed_timing: bool) -> str:
        ms = self.runtime_ms if embed_timing else 0
        return (f"{self.algorithm},{self.k},{self.theta:.12g},{self.lambda_m:.12g},"
                f"{self.seed},{self.reps},{self.influence:.12g},{self.influence_min:.12g},"
                f"{self.influence_max:.12g},{ms},{self.ground_before},{self.ground_after},"
                f"{self.clusters_before},{self.clusters_after}")


def build_model(config: RunConfig) -> tuple[ExposureModel, list]:
    billboards = parse_billboards(config.billboards)
    trajectories = parse_trajectories(config.trajectories)
    slots = enumerate_slots(billboards, config.t_start, config.t_end, config.delta_minutes)
    model = build_exposure_model(billboards, trajectories, slots, config.lambda_m)
    return model, trajectories


@dataclass
class _Cell:
    result: SelectionResult
    elapsed_ms: float
    ground_after: int
    clusters_before: int
    clusters_after: int


def _execute(model: ExposureModel, trajectories, config: RunConfig, seed: int) -> _Cell:
    ground = list(range(model.n_slots))
    algo = config.algorithm
    clusters_before = clusters_after = 0
    t0 = time.perf_counter()

    if algo in ("part_greedy", "part_psg_greedy"):
        part = theta_partition(model, ground, config.theta)
        kept, _ = prune_clusters(part)
        clusters_before = len(part.clusters)
        clusters_after = len(kept)
        ground = sorted(merge_members(kept))
        if config.dump_partition:
            write_partition_csv(part, config.dump_partition + "_members.csv")
            write_partition_summary(part, config.dump_partition + "_summary.csv")
    elif config.dump_partition:
        raise ValidationError(f"algorithm {algo!r} builds no partition to dump")

    if algo in ("psg_greedy", "part_psg_greedy"):
        reduction = prune(model, ground, PsgParams(config.h, config.ell, seed))
        ground = sorted(reduction.reduced)

    if algo in ("greedy", "psg_greedy", "part_greedy", "part_psg_greedy"):
        result = greedy(model, ground, config.k)
    elif algo == "random":
        result = random_k(model, ground, config.k, seed)
    elif algo == "psg_random":
        reduction = prune(model, ground, PsgParams(config.h, config.ell, seed))
        ground = sorted(reduction.reduced)
        result = random_k(model, ground, config.k, seed)
    elif algo == "top_k":
        result = top_k(model, ground, config.k)
    elif algo == "max_coverage":
        if trajectories is None:
            raise ValidationError("max_coverage needs the trajectory records")
        result = max_coverage(model, trajectories, ground, config.k)
    else:
        result = brute_force_opt(model, ground, config.k)

    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    check = naive_influence(model, result.chosen)
    if abs(check - result.influence) > INFLUENCE_TOL:
        raise InternalInvariantError(
            f"reported influence {result.influence!r} disagrees with the naive "
            f"re-evaluation {check!r}"
        )
    return _Cell(result, elapsed_ms, len(ground), clusters_before, clusters_after)


def run(config: RunConfig, model: ExposureModel | None = None,
        trajectories=None) -> ExperimentRow:
    """Execute one algorithm, averaging over config.reps repetitions."""
    if model is None:
        model, trajectories = build_model(config)
    cells = []
    for rep in range(config.reps):
        seed = config.seed + rep if config.algorithm in SEEDED_ALGORITHMS else config.seed
        cells.append(_execute(model, trajectories, config, seed))
    influences = [c.result.influence for c in cells]
    if config.algorithm not in SEEDED_ALGORITHMS and len(set(influences)) > 1:
        raise InternalInvariantError(
            f"deterministic algorithm {config.algorithm} varied across repetitions: "
            f"{influences}"
        )
    first = cells[0]
    return ExperimentRow(
        algorithm=config.algorithm,
        k=config.k,
        theta=config.theta,
        lambda_m=config.lambda_m,
        seed=config.seed,
        reps=config.reps,
        influence=sum(influences) / len(influences),
        influence_min=min(influences),
        influence_max=max(influences),
        runtime_ms=int(round(sum(c.elapsed_ms for c in cells) / len(cells))),
        ground_before=model.n_slots,
        ground_after=first.ground_after,
        clusters_before=first.clusters_before,
        clusters_after=first.clusters_after,
        chosen=first.result.chosen,
        short=first.result.short,
    )


def run_psg_greedy(config: RunConfig) -> ExperimentRow:
    return run(replace(config, algorithm="psg_greedy"))


def run_part_greedy(config: RunConfig) -> ExperimentRow:
    return run(replace(config, algorithm="part_greedy"))


def run_part_psg_greedy(config: RunConfig) -> ExperimentRow:
    return run(replace(config, algorithm="part_psg_greedy"))


def _error_row(config: RunConfig, message: str) -> ExperimentRow:
    nan = float("nan")
    return ExperimentRow(config.algorithm, config.k, config.theta, config.lambda_m,
                         config.seed, config.reps, nan, nan, nan, 0, 0, 0, 0, 0,
                         error=message)


def sweep(config: RunConfig, vary: str, values, algorithms=None) -> list[ExperimentRow]:
    """One row per (algorithm, value); failed cells get a nan marker and the
    sweep continues. Rows come back in the given (algorithm, value) order."""
    if vary not in ("k", "theta", "lambda"):
        raise ValidationError(f"vary must be one of k, theta, lambda; got {vary!r}")
    values = list(values)
    if not values:
        raise ValidationError("no sweep values given")
    algorithms = list(algorithms) if algorithms else [config.algorithm]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {a!r}")

    field = {"k": "k", "theta": "theta", "lambda": "lambda_m"}[vary]
    caster = int if vary == "k" else float
    cell_configs = [
        replace(config, algorithm=a, **{field: caster(v)})
        for a in algorithms
        for v in values
    ]

    models: dict[float, tuple] = {}
    if vary == "lambda":
        for v in values:
            lam = float(v)
            if lam not in models:
                models[lam] = build_model(replace(config, lambda_m=lam))
    else:
        models[config.lambda_m] = build_model(config)

    def one(cfg: RunConfig) -> ExperimentRow:
        model, trajectories = models[cfg.lambda_m]
        try:
            return run(cfg, model, trajectories)
        except ValidationError as exc:
            # internal-invariant errors must surface; only input-level
            # failures become marker rows
            print(f"sweep cell ({cfg.algorithm}, {vary}={getattr(cfg, field)}) failed: {exc}",
                  file=sys.stderr)
            return _error_row(cfg, str(exc))

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(one, cell_configs))
    else:
        rows = [one(cfg) for cfg in cell_configs]
    return rows


def write_rows(path, config: RunConfig, rows: list[ExperimentRow]) -> None:
    """Write result rows with the config echoed as leading comment lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for f in fields(config):
            fh.write(f"# {f.name}={getattr(config, f.name)}\n")
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.to_csv(config.embed_timing) + "\n")
