"""Classical ant colony baseline on a start/end graph over the decision variables.

Positions ``1..n`` are the variables, ``0`` is the nest and ``n+1`` the exit.
An ant walks from the nest over unvisited positions; every variable it visits
is set to 1. Trails live on the edges of this graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qap import QapInstance, Solution, fitness
from .report import IterationRecord, RunReport


@dataclass(frozen=True)
class AcoConfig:
    rho: float = 0.05
    beta_e: float = 0.13
    max_iter: int = 62
    conver_condition: int = 59
    ants_per_iteration: int = 1

    def validate(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if not 0.0 <= self.beta_e <= 1.0:
            raise ValueError(f"beta_e must be in [0, 1], got {self.beta_e}")
        if not self.max_iter >= self.conver_condition >= 1:
            raise ValueError("need max_iter >= conver_condition >= 1")
        if self.ants_per_iteration < 1:
            raise ValueError("need at least one ant per iteration")


def new_trail(n: int) -> np.ndarray:
    return np.zeros((n + 2, n + 2))


def walk(tau, beta: float, n: int, rng: np.random.Generator) -> list[int]:
    """Visited positions in order, starting with the nest ``0``."""
    rows = tau.tolist() if isinstance(tau, np.ndarray) else tau
    end = n + 1
    path = [0]
    unvisited = list(range(1, end + 1))
    p = 0
    for _ in range(n):
        u = rng.random()
        weights = [rows[p][i] for i in unvisited]
        total = sum(weights)
        if u < beta or total <= 0:
            # forced exploration, or undefined transition probabilities on an empty trail row
            nxt = unvisited[int(rng.random() * len(unvisited))]
        else:
            target = rng.random() * total
            acc = 0.0
            nxt = unvisited[-1]
            for i, w in zip(unvisited, weights):
                acc += w
                if target < acc:
                    nxt = i
                    break
        path.append(nxt)
        unvisited.remove(nxt)
        p = nxt
        if p == end:
            break
    return path


def path_to_bits(path: list[int], n: int) -> str:
    bits = ["0"] * n
    for pos in path:
        if 1 <= pos <= n:
            bits[pos - 1] = "1"
    return "".join(bits)


def construct_path(tau: np.ndarray, beta: float, n: int, rng: np.random.Generator) -> str:
    return path_to_bits(walk(tau, beta, n, rng), n)


def deposit_weight(f: float) -> float:
    """Positive, increasing stand-in for ``1/F`` so signed fitness never drives trails negative."""
    return 1.0 / (1.0 + math.exp(-f))


def run_aco(
    instance: QapInstance,
    config: AcoConfig,
    rng: np.random.Generator,
    seed: int | None = None,
) -> RunReport:
    config.validate()
    if not instance.constraint.is_unconstrained:
        raise ValueError("the classical baseline only handles unconstrained instances")
    n = instance.n
    tau = new_trail(n)
    best: Solution | None = None
    stagnation = 0
    trace: list[IterationRecord] = []
    exit_iteration = config.max_iter
    cache: dict[str, float] = {}

    for j in range(1, config.max_iter + 1):
        deposit = np.zeros_like(tau)
        snapshot = tau.tolist()
        gen_best: Solution | None = None
        for _ in range(config.ants_per_iteration):
            path = walk(snapshot, config.beta_e, n, rng)
            bits = path_to_bits(path, n)
            if bits not in cache:
                cache[bits] = fitness(instance, bits)
            f = cache[bits]
            w = config.rho * deposit_weight(f)
            for a, b in zip(path, path[1:]):
                deposit[a, b] += w
            if gen_best is None or f > gen_best.fitness:
                gen_best = Solution(bits, f)
        tau = (1.0 - config.rho) * tau + deposit

        better = best is None or gen_best.fitness > best.fitness
        if better:
            best = gen_best
        trace.append(IterationRecord(j, gen_best.bits, gen_best.bits, gen_best.fitness, config.beta_e, better))
        stagnation = 0 if better else stagnation + 1
        if stagnation >= config.conver_condition:
            exit_iteration = j
            break

    return RunReport(
        algorithm="aco",
        best=best,
        exit_iteration=exit_iteration,
        max_iter=config.max_iter,
        conver_condition=config.conver_condition,
        seed=seed,
        ants=config.ants_per_iteration,
        trace=trace,
    )
