"""Per-run traces shared by the quantum and classical colonies.

A report serializes to JSON Lines: one ``run`` header record followed by one
``iter`` record per iteration.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import IO

from .qap import Solution


@dataclass
class IterationRecord:
    iteration: int
    measured: str
    repaired: str
    fitness: float
    beta: float
    better: bool
    angles: list[float] | None = None


@dataclass
class RunReport:
    algorithm: str
    best: Solution
    exit_iteration: int
    max_iter: int
    conver_condition: int
    seed: int | None = None
    ants: int = 1
    trace: list[IterationRecord] = field(default_factory=list)

    def best_so_far(self) -> list[float]:
        out, cur = [], float("-inf")
        for rec in self.trace:
            cur = max(cur, rec.fitness)
            out.append(cur)
        return out

    def to_records(self) -> list[dict]:
        head = {
            "record": "run",
            "algorithm": self.algorithm,
            "best_bits": self.best.bits,
            "best_fitness": self.best.fitness,
            "exit_iteration": self.exit_iteration,
            "max_iter": self.max_iter,
            "conver_condition": self.conver_condition,
            "seed": self.seed,
            "ants": self.ants,
        }
        return [head] + [{"record": "iter", **asdict(r)} for r in self.trace]

    def dump(self, fh: IO[str]) -> None:
        for rec in self.to_records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.to_records())

    @classmethod
    def loads(cls, text: str) -> "RunReport":
        lines = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].get("record") != "run":
            raise ValueError("run report must start with a 'run' record")
        head = lines[0]
        trace = []
        for rec in lines[1:]:
            if rec.pop("record", None) != "iter":
                raise ValueError("expected 'iter' records after the header")
            trace.append(IterationRecord(**rec))
        return cls(
            algorithm=head["algorithm"],
            best=Solution(head["best_bits"], head["best_fitness"]),
            exit_iteration=head["exit_iteration"],
            max_iter=head["max_iter"],
            conver_condition=head["conver_condition"],
            seed=head["seed"],
            ants=head["ants"],
            trace=trace,
        )
