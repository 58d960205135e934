"""Hybrid quantum ant colony: one ant register simulated per iteration.

Each iteration prepares the ant qubits with RY rotations given by the pheromone
angles, applies exploration gates (CNOT or Fredkin) each controlled by a freshly
prepared and reset exploration qubit, measures, repairs invalid measurements
and finally nudges the angles from a lookup table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import qsim
from .qap import QapInstance, Solution, fitness, valid_solutions
from .report import IterationRecord, RunReport

CNOT_MODE = "cnot"
FREDKIN_MODE = "fredkin"
UNRAVELED = "unraveled"
EXPLICIT_RESET = "explicit-reset"
EXPLORATION_MODES = (CNOT_MODE, FREDKIN_MODE)
SIM_MODES = (UNRAVELED, EXPLICIT_RESET)

INITIAL_ANGLE = math.pi / 2


def exploration_angle(beta: float) -> float:
    """RY angle that puts probability ``beta`` on ``|1>``."""
    return 2 * math.asin(math.sqrt(beta))


# -- pheromone update table ---------------------------------------------------

# (x_i, b_i, better) -> (delta in units of pi, starred)
_DEFAULT_ROWS = {
    (0, 0, True): (-0.01, True),
    (0, 0, False): (0.04, False),
    (0, 1, True): (-0.05, True),
    (0, 1, False): (0.07, False),
    (1, 0, True): (0.05, True),
    (1, 0, False): (-0.07, False),
    (1, 1, True): (0.01, True),
    (1, 1, False): (-0.04, False),
}


@dataclass(frozen=True)
class UpdateTable:
    """Angle increments keyed by (current bit, best bit, improved?).

    Starred rows change sign while ``cos(theta/2) < 0``.
    """

    rows: dict = field(default_factory=lambda: dict(_DEFAULT_ROWS))

    def delta(self, x_bit: int, b_bit: int, better: bool, theta: float) -> float:
        coeff, starred = self.rows[(x_bit, b_bit, better)]
        d = coeff * math.pi
        if starred and math.cos(theta / 2) < 0:
            d = -d
        return d

    def scaled(self, factor: float) -> "UpdateTable":
        return UpdateTable({k: (v * factor, s) for k, (v, s) in self.rows.items()})


DEFAULT_TABLE = UpdateTable()


def pheromone_update(
    angles: Sequence[float],
    x: str,
    b: str,
    better: bool,
    table: UpdateTable = DEFAULT_TABLE,
) -> list[float]:
    if not len(x) == len(b) == len(angles):
        raise ValueError(f"length mismatch: {len(angles)} angles, x={x!r}, b={b!r}")
    return [
        theta + table.delta(int(xi), int(bi), better, theta)
        for theta, xi, bi in zip(angles, x, b)
    ]


# -- schedules ------------------------------------------------------------------


def beta_schedule(iteration: int, beta_e0: float, max_iter: int) -> float:
    """Linear ramp of the exploration probability from ``beta_e0`` to 1."""
    if not 0 <= iteration <= max_iter:
        raise ValueError(f"iteration {iteration} outside [0, {max_iter}]")
    return min(1.0, beta_e0 + (1.0 - beta_e0) * iteration / max_iter)


def converge_params(n_comb: int) -> tuple[int, int]:
    """Stagnation limit and iteration cap fitted to the size of the solution set.

    Returns ``(conver_condition, max_iter)``.
    """
    if n_comb < 1:
        raise ValueError(f"n_comb must be >= 1, got {n_comb}")
    # rounding keeps float noise from pushing an exact integer over a ceil boundary
    cc = max(1, math.ceil(round(23.3 * math.sqrt(n_comb) - 35.1, 9)))
    max_iter = -(-cc * 105 // 100)
    return cc, max_iter


# -- exploration ------------------------------------------------------------------


@dataclass(frozen=True)
class ExplorationStep:
    """One controlled exploration gate with its control left symbolic."""

    kind: str  # "CNOT" or "CSWAP"
    targets: tuple[int, ...]

    def controlled(self, control: int, offset: int = 0) -> qsim.GateOp:
        wires = tuple(t + offset for t in self.targets)
        return qsim.GateOp(self.kind, (control, *wires))

    def apply_target(self, state: qsim.StateVector, offset: int = 0) -> None:
        if self.kind == "CNOT":
            qsim.apply_x(state, self.targets[0] + offset)
        else:
            qsim.apply_swap(state, self.targets[0] + offset, self.targets[1] + offset)


def exploration_plan(
    n: int,
    mode: str,
    rng: np.random.Generator | None = None,
    drop_last_pair: bool = False,
) -> list[ExplorationStep]:
    """Gate list for one iteration.

    CNOT mode targets every ant qubit once in a fixed order. Fredkin mode uses
    every unordered pair once, shuffled with ``rng``.
    """
    if mode == CNOT_MODE:
        return [ExplorationStep("CNOT", (i,)) for i in range(n)]
    if mode != FREDKIN_MODE:
        raise ValueError(f"unknown exploration mode {mode!r}")
    if n < 2:
        raise ValueError("Fredkin exploration needs at least 2 ant qubits")
    pairs = list(itertools.combinations(range(n), 2))
    if rng is not None:
        pairs = [pairs[i] for i in rng.permutation(len(pairs))]
    if drop_last_pair:
        pairs = pairs[:-1]
    return [ExplorationStep("CSWAP", p) for p in pairs]


def prepare_ants(angles: Sequence[float], offset: int = 0, extra: int = 0) -> qsim.StateVector:
    state = qsim.new_state(len(angles) + extra)
    for i, theta in enumerate(angles):
        qsim.apply_ry(state, i + offset, theta)
    return state


def run_iteration(
    angles: Sequence[float],
    beta: float,
    plan: Sequence[ExplorationStep],
    sim_mode: str,
    rng: np.random.Generator,
) -> str:
    """Simulate one circuit execution and return the measured ant bitstring."""
    if sim_mode == UNRAVELED:
        state = prepare_ants(angles)
        for step in plan:
            if rng.random() < beta:
                step.apply_target(state)
        return qsim.sample_measurement(state, rng)
    if sim_mode == EXPLICIT_RESET:
        # exploration wire is qubit 0, ants are 1..n
        state = prepare_ants(angles, offset=1, extra=1)
        theta_e = exploration_angle(beta)
        for step in plan:
            qsim.apply_ry(state, 0, theta_e)
            qsim.apply_gate(state, step.controlled(0, offset=1))
            qsim.reset_qubit(state, 0, rng)
        return qsim.sample_measurement(state, rng)[1:]
    raise ValueError(f"unknown sim mode {sim_mode!r}")


def outcome_distribution(angles: Sequence[float], beta: float, plan: Sequence[ExplorationStep]) -> np.ndarray:
    """Exact outcome probabilities of the unraveled iteration.

    Sums over all ``2**len(plan)`` apply/skip patterns, so keep plans short.
    """
    n = len(angles)
    base = prepare_ants(angles)
    total = np.zeros(1 << n)
    for pattern in itertools.product((0, 1), repeat=len(plan)):
        k = sum(pattern)
        weight = beta**k * (1 - beta) ** (len(plan) - k)
        if weight == 0.0:
            continue
        state = base.copy()
        for applied, step in zip(pattern, plan):
            if applied:
                step.apply_target(state)
        total += weight * state.probabilities
    return total


# -- repair ---------------------------------------------------------------------


def hamming(a: str, b: str) -> int:
    return sum(c1 != c2 for c1, c2 in zip(a, b))


def gen_s_probabilities(invalid: str, valid_set: Sequence[str]) -> np.ndarray:
    if not valid_set:
        raise ValueError("valid_set is empty")
    d = np.array([hamming(invalid, s) for s in valid_set], dtype=float)
    if np.any(d == 0):
        raise ValueError(f"{invalid!r} is already a valid solution")
    inv = 1.0 / d
    return inv / inv.sum()


def gen_s(invalid: str, valid_set: Sequence[str], rng: np.random.Generator) -> str:
    """Replace an invalid measurement by a valid solution, closer ones favoured.

    Each candidate is drawn with probability inversely proportional to its
    Hamming distance from ``invalid``.
    """
    p = gen_s_probabilities(invalid, valid_set)
    return valid_set[int(rng.choice(len(valid_set), p=p))]


# -- main loop -------------------------------------------------------------------


@dataclass(frozen=True)
class QacoConfig:
    beta_e0: float = 0.13
    conver_condition: int | None = None  # None: derived from the solution-set size
    max_iter: int | None = None
    update_table: UpdateTable = DEFAULT_TABLE
    exploration: str | None = None  # None: CNOT if unconstrained, Fredkin otherwise
    sim_mode: str = UNRAVELED
    drop_last_pair: bool = False
    allow_mismatched_exploration: bool = False
    record_angles: bool = False

    def resolved(self, instance: QapInstance) -> "QacoConfig":
        """Fill in derived defaults and validate against ``instance``."""
        cfg = self
        if cfg.conver_condition is None or cfg.max_iter is None:
            cc, mi = converge_params(instance.constraint.n_comb(instance.n))
            if cfg.conver_condition is not None:
                cc = cfg.conver_condition
                mi = -(-cc * 105 // 100)
            cfg = replace(cfg, conver_condition=cc, max_iter=cfg.max_iter if cfg.max_iter is not None else mi)
        natural = CNOT_MODE if instance.constraint.is_unconstrained else FREDKIN_MODE
        if cfg.exploration is None:
            cfg = replace(cfg, exploration=natural)
        if not 0.0 <= cfg.beta_e0 <= 1.0:
            raise ValueError(f"beta_e0 must be in [0, 1], got {cfg.beta_e0}")
        if not cfg.max_iter >= cfg.conver_condition >= 1:
            raise ValueError(f"need max_iter >= conver_condition >= 1, got {cfg.max_iter}, {cfg.conver_condition}")
        if cfg.exploration not in EXPLORATION_MODES:
            raise ValueError(f"unknown exploration mode {cfg.exploration!r}")
        if cfg.sim_mode not in SIM_MODES:
            raise ValueError(f"unknown sim mode {cfg.sim_mode!r}")
        if cfg.exploration != natural and not cfg.allow_mismatched_exploration:
            raise ValueError(
                f"{cfg.exploration} exploration does not match {instance.constraint}; "
                "set allow_mismatched_exploration to force it"
            )
        return cfg


def run_qaco(
    instance: QapInstance,
    config: QacoConfig,
    rng: np.random.Generator,
    seed: int | None = None,
) -> RunReport:
    cfg = config.resolved(instance)
    n = instance.n
    constraint = instance.constraint
    valid = None if constraint.is_unconstrained else valid_solutions(n, constraint)
    cache: dict[str, float] = {}

    angles = [INITIAL_ANGLE] * n
    best: Solution | None = None
    stagnation = 0
    trace: list[IterationRecord] = []
    exit_iteration = cfg.max_iter

    for j in range(1, cfg.max_iter + 1):
        beta = beta_schedule(j, cfg.beta_e0, cfg.max_iter)
        plan = exploration_plan(n, cfg.exploration, rng, cfg.drop_last_pair)
        measured = run_iteration(angles, beta, plan, cfg.sim_mode, rng)
        x = measured if constraint.allows(measured) else gen_s(measured, valid, rng)
        if x not in cache:
            cache[x] = fitness(instance, x)
        f = cache[x]
        better = best is None or f > best.fitness
        trace.append(IterationRecord(
            j, measured, x, f, beta, better, list(angles) if cfg.record_angles else None,
        ))

        stagnation = 0 if better else stagnation + 1
        if stagnation >= cfg.conver_condition:
            exit_iteration = j
            break
        # compare against the best from earlier iterations; on the first pass x is its own reference
        b = best.bits if best is not None else x
        angles = pheromone_update(angles, x, b, better, cfg.update_table)
        if better:
            best = Solution(x, f)

    # the stop check only fires on a non-improving iteration, so best is current here
    return RunReport(
        algorithm="qaco",
        best=best,
        exit_iteration=exit_iteration,
        max_iter=cfg.max_iter,
        conver_condition=cfg.conver_condition,
        seed=seed,
        trace=trace,
    )


# -- circuit export ----------------------------------------------------------------


def _fmt(angle: float) -> str:
    return f"{angle:.15g}"


def export_circuit(angles: Sequence[float], beta: float, plan: Sequence[ExplorationStep]) -> str:
    """OpenQASM 2.0 text of one iteration with an explicitly reset exploration qubit."""
    n = len(angles)
    theta_e = exploration_angle(beta)
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        "qreg e[1];",
        f"qreg a[{n}];",
        f"creg c[{n}];",
    ]
    lines += [f"ry({_fmt(t)}) a[{i}];" for i, t in enumerate(angles)]
    for step in plan:
        lines.append(f"ry({_fmt(theta_e)}) e[0];")
        targets = ",".join(f"a[{t}]" for t in step.targets)
        gate = "cx" if step.kind == "CNOT" else "cswap"
        lines.append(f"{gate} e[0],{targets};")
        lines.append("reset e[0];")
    lines += [f"measure a[{i}] -> c[{i}];" for i in range(n)]
    return "\n".join(lines) + "\n"
