"""Seeded experiment engine: repeated runs, error statistics, sweeps and CSV I/O."""

from __future__ import annotations

import csv
import itertools
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import IO, Iterable, Sequence

import numpy as np

from .aco import AcoConfig, run_aco
from .qaco import QacoConfig, run_qaco
from .qap import QapInstance, brute_force_opt
from .report import RunReport

ALGORITHMS = ("qaco", "aco")
FITNESS_TOL = 1e-9
SUCCESS_TARGET = 98.5


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def substream_seed(master: int, *keys) -> np.random.SeedSequence:
    """Seed sequence for one (instance, algorithm, ants, run) cell.

    Derived from stable hashes of the keys, so the stream does not depend on
    scheduling order or worker count.
    """
    return np.random.SeedSequence([int(master), *(_key(k) for k in keys)])


def substream(master: int, *keys) -> tuple[np.random.Generator, int]:
    ss = substream_seed(master, *keys)
    return np.random.default_rng(ss), int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class BenchmarkSpec:
    instances: Sequence[QapInstance]
    algorithms: Sequence[str] = ("qaco",)
    runs: int = 100
    seed: int = 0
    ants: int = 1
    escalate_ants: bool = False
    ant_cap: int = 16
    error_target: float = 1.0
    qaco: QacoConfig = field(default_factory=QacoConfig)
    aco: AcoConfig = field(default_factory=AcoConfig)
    workers: int = 1

    def validate(self) -> None:
        if not self.instances:
            raise ValueError("benchmark needs at least one instance")
        if not self.algorithms:
            raise ValueError("benchmark needs at least one algorithm")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm(s): {', '.join(unknown)}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 1 <= self.ants <= self.ant_cap:
            raise ValueError(f"ants must be in [1, ant_cap={self.ant_cap}]")
        names = [inst.name for inst in self.instances]
        if len(set(names)) != len(names):
            raise ValueError("instance names must be unique")


@dataclass(frozen=True)
class BenchmarkRow:
    instance: str
    algorithm: str
    ants: int
    runs: int
    mean_iterations: float
    error_percent: float
    seed: int


CSV_COLUMNS = [f.name for f in fields(BenchmarkRow)]


def _one_run(args) -> RunReport:
    instance, algorithm, ants, run, master, qcfg, acfg = args
    rng, seed = substream(master, instance.name, algorithm, ants, run)
    if algorithm == "qaco":
        return run_qaco(instance, qcfg, rng, seed=seed)
    return run_aco(instance, replace(acfg, ants_per_iteration=ants), rng, seed=seed)


def run_trials(
    instance: QapInstance,
    algorithm: str,
    runs: int,
    master_seed: int,
    ants: int = 1,
    qaco_config: QacoConfig = QacoConfig(),
    aco_config: AcoConfig = AcoConfig(),
    workers: int = 1,
) -> list[RunReport]:
    jobs = [(instance, algorithm, ants, r, master_seed, qaco_config, aco_config) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one_run, jobs, chunksize=max(1, runs // (4 * workers))))
    return [_one_run(job) for job in jobs]


def error_percent(reports: Iterable[RunReport], optimum: float) -> float:
    reports = list(reports)
    misses = sum(r.best.fitness < optimum - FITNESS_TOL for r in reports)
    return 100.0 * misses / len(reports)


def mean_iterations(reports: Iterable[RunReport]) -> float:
    return float(np.mean([r.exit_iteration for r in reports]))


def _row(instance, algorithm, ants, reports, optimum, seed) -> BenchmarkRow:
    return BenchmarkRow(
        instance=instance.name,
        algorithm=algorithm,
        ants=ants,
        runs=len(reports),
        mean_iterations=mean_iterations(reports),
        error_percent=error_percent(reports, optimum),
        seed=seed,
    )


def run_benchmark(spec: BenchmarkSpec) -> list[BenchmarkRow]:
    """Run every algorithm on every instance.

    With ``escalate_ants`` the classical colony is rerun with one more ant per
    generation until its error rate is at most ``error_target`` percent or
    ``ant_cap`` is reached; the starting and final ant counts are both reported.
    """
    spec.validate()
    rows: list[BenchmarkRow] = []
    for instance in spec.instances:
        optimum = brute_force_opt(instance).fitness
        for algorithm in spec.algorithms:
            def trials(ants):
                return run_trials(instance, algorithm, spec.runs, spec.seed, ants,
                                  spec.qaco, spec.aco, spec.workers)

            if algorithm == "qaco":
                rows.append(_row(instance, "qaco", 1, trials(1), optimum, spec.seed))
                continue
            ants = spec.ants
            first = _row(instance, "aco", ants, trials(ants), optimum, spec.seed)
            rows.append(first)
            if not spec.escalate_ants:
                continue
            last = first
            while last.error_percent > spec.error_target and ants < spec.ant_cap:
                ants += 1
                last = _row(instance, "aco", ants, trials(ants), optimum, spec.seed)
            if last is not first:
                rows.append(last)
    return rows


def write_csv(rows: Iterable[BenchmarkRow], fh: IO[str]) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in vars(row).items()})


def read_csv(fh: IO[str]) -> list[BenchmarkRow]:
    out = []
    for rec in csv.DictReader(fh):
        out.append(BenchmarkRow(
            instance=rec["instance"],
            algorithm=rec["algorithm"],
            ants=int(rec["ants"]),
            runs=int(rec["runs"]),
            mean_iterations=float(rec["mean_iterations"]),
            error_percent=float(rec["error_percent"]),
            seed=int(rec["seed"]),
        ))
    return out


def format_table(rows: Sequence[BenchmarkRow]) -> str:
    head = f"{'instance':<10} {'algorithm':<9} {'ants':>4} {'runs':>5} {'mean iter':>10} {'error %':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.instance:<10} {r.algorithm:<9} {r.ants:>4} {r.runs:>5} "
            f"{r.mean_iterations:>10.2f} {r.error_percent:>8.1f}"
        )
    return "\n".join(lines)


# -- parameter sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    beta0: float
    conver_condition: int | None  # None: fitted per instance from the solution-set size
    table_scale: float
    instances: int
    runs: int
    mean_iterations: float
    success_percent: float
    meets_target: bool


SWEEP_COLUMNS = [f.name for f in fields(SweepRow)]


def sweep(
    instances: Sequence[QapInstance],
    beta0s: Sequence[float],
    conver_conditions: Sequence[int | None],
    table_scales: Sequence[float] = (1.0,),
    runs: int = 100,
    seed: int = 0,
    base: QacoConfig = QacoConfig(),
    workers: int = 1,
) -> list[SweepRow]:
    """Grid evaluation of the quantum colony over exploration, stagnation and table scale."""
    if not instances:
        raise ValueError("sweep needs at least one instance")
    out = []
    for beta0, cc, scale in itertools.product(beta0s, conver_conditions, table_scales):
        cfg = replace(
            base,
            beta_e0=beta0,
            conver_condition=cc,
            max_iter=None if cc is None else base.max_iter,
            update_table=base.update_table.scaled(scale),
        )
        iters, successes, total = [], 0, 0
        for instance in instances:
            optimum = brute_force_opt(instance).fitness
            reports = run_trials(instance, "qaco", runs, seed, 1, cfg, workers=workers)
            iters.extend(r.exit_iteration for r in reports)
            successes += sum(r.best.fitness >= optimum - FITNESS_TOL for r in reports)
            total += len(reports)
        success = 100.0 * successes / total
        out.append(SweepRow(beta0, cc, scale, len(instances), runs, float(np.mean(iters)),
                            success, success >= SUCCESS_TARGET))
    return out


def write_sweep_csv(rows: Iterable[SweepRow], fh: IO[str]) -> None:
    writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        rec = {k: repr(v) if isinstance(v, float) else v for k, v in vars(row).items()}
        rec["conver_condition"] = "auto" if row.conver_condition is None else row.conver_condition
        writer.writerow(rec)
