"""Minimal ideal statevector simulator with the gate set QACO needs.

Basis ordering: qubit 0 is the most significant bit of the basis index, so
the amplitude of ``|q0 q1 ... q_{n-1}>`` lives at ``int("q0q1...", 2)``.
All qubit indices in this module are 0-based.

Gates mutate the state in place and return it, so calls can be chained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# 2**24 complex128 amplitudes = 256 MiB.
MAX_QUBITS = 24
# The density-matrix verification path builds full 2**(n+1) unitaries.
MAX_DM_QUBITS = 6

GATE_KINDS = ("RY", "X", "SWAP", "CNOT", "CSWAP")
_ARITY = {"RY": 1, "X": 1, "SWAP": 2, "CNOT": 2, "CSWAP": 3}


class CapacityError(ValueError):
    """Requested register exceeds the simulator's memory limit."""


@dataclass(frozen=True)
class GateOp:
    """A gate and the wires it acts on.

    ``qubits`` lists controls first, e.g. ``CNOT(c, t)`` or ``CSWAP(c, t1, t2)``.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} qubits, got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"qubit indices collide in {self.kind}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.kind}{self.qubits}")


def ry(qubit: int, theta: float) -> GateOp:
    return GateOp("RY", (qubit,), float(theta))


def x(qubit: int) -> GateOp:
    return GateOp("X", (qubit,))


def cnot(control: int, target: int) -> GateOp:
    return GateOp("CNOT", (control, target))


def cswap(control: int, t1: int, t2: int) -> GateOp:
    return GateOp("CSWAP", (control, t1, t2))


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def _tensor(self) -> np.ndarray:
        # view, writes go through to self.amplitudes
        return self.amplitudes.reshape((2,) * self.n_qubits)


def new_state(n_qubits: int) -> StateVector:
    """Return ``|0...0>`` on ``n_qubits`` wires."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def basis_state(bits: str) -> StateVector:
    state = new_state(len(bits))
    state.amplitudes[0] = 0.0
    state.amplitudes[int(bits, 2)] = 1.0
    return state


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def _axis_slice(n: int, axis: int, value: int) -> tuple:
    idx = [slice(None)] * n
    # keep the axis (length 1) so the result is always a writable view
    idx[axis] = slice(value, value + 1)
    return tuple(idx)


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    """Rotate one wire about Y: ``|0> -> cos(theta/2)|0> + sin(theta/2)|1>``."""
    _check_qubit(state, qubit)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    t = state._tensor()
    lo = t[_axis_slice(state.n_qubits, qubit, 0)]
    hi = t[_axis_slice(state.n_qubits, qubit, 1)]
    new_lo = c * lo - s * hi
    new_hi = s * lo + c * hi
    lo[...] = new_lo
    hi[...] = new_hi
    return state


def apply_x(state: StateVector, qubit: int) -> StateVector:
    _check_qubit(state, qubit)
    t = state._tensor()
    t[...] = np.flip(t, axis=qubit).copy()
    return state


def apply_swap(state: StateVector, q1: int, q2: int) -> StateVector:
    _check_qubit(state, q1)
    _check_qubit(state, q2)
    t = state._tensor()
    t[...] = np.swapaxes(t, q1, q2).copy()
    return state


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    for q in op.qubits:
        _check_qubit(state, q)
    kind = op.kind
    if kind == "RY":
        return apply_ry(state, op.qubits[0], op.angle)
    if kind == "X":
        return apply_x(state, op.qubits[0])
    if kind == "SWAP":
        return apply_swap(state, *op.qubits)
    # act on the control=1 half only
    sub = state._tensor()[_axis_slice(state.n_qubits, op.qubits[0], 1)]
    if kind == "CNOT":
        sub[...] = np.flip(sub, axis=op.qubits[1]).copy()
    else:  # CSWAP
        sub[...] = np.swapaxes(sub, op.qubits[1], op.qubits[2]).copy()
    return state


def apply_circuit(state: StateVector, ops: Sequence[GateOp]) -> StateVector:
    for op in ops:
        apply_gate(state, op)
    return state


def index_to_bits(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def sample_measurement(state: StateVector, rng: np.random.Generator) -> str:
    """Measure every wire in the computational basis and return the bitstring."""
    probs = state.probabilities
    # guard the cumulative sum against rounding drift
    cdf = np.cumsum(probs)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    k = min(k, len(probs) - 1)
    return index_to_bits(k, state.n_qubits)


def probability_of(state: StateVector, bits: str) -> float:
    if len(bits) != state.n_qubits:
        raise ValueError(f"bitstring length {len(bits)} != n_qubits {state.n_qubits}")
    return float(abs(state.amplitudes[int(bits, 2)]) ** 2)


def measure_qubit(state: StateVector, qubit: int, rng: np.random.Generator) -> int:
    """Projective measurement of one wire; collapses and renormalizes the state."""
    _check_qubit(state, qubit)
    t = state._tensor()
    hi = t[_axis_slice(state.n_qubits, qubit, 1)]
    p1 = float(np.sum(np.abs(hi) ** 2))
    outcome = 1 if rng.random() < p1 else 0
    keep = t[_axis_slice(state.n_qubits, qubit, outcome)]
    drop = t[_axis_slice(state.n_qubits, qubit, 1 - outcome)]
    drop[...] = 0.0
    keep /= math.sqrt(p1 if outcome else 1.0 - p1)
    return outcome


def reset_qubit(state: StateVector, qubit: int, rng: np.random.Generator) -> StateVector:
    """Measure ``qubit`` and flip it back to ``|0>`` if it came out 1."""
    if measure_qubit(state, qubit, rng):
        apply_x(state, qubit)
    return state


def marginal_probabilities(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    """Outcome distribution of the wires in ``keep`` (in that order), others summed out."""
    t = state.probabilities.reshape((2,) * state.n_qubits)
    drop = tuple(q for q in range(state.n_qubits) if q not in keep)
    marg = t.sum(axis=drop) if drop else t
    remaining = [q for q in range(state.n_qubits) if q not in drop]
    order = [remaining.index(q) for q in keep]
    return np.transpose(marg, order).reshape(-1)


# -- density-matrix verification path ---------------------------------------


@dataclass
class DensityMatrix:
    n_qubits: int
    entries: np.ndarray = field(repr=False)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(state.n_qubits, np.outer(a, a.conj()))

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))


def gate_unitary(op: GateOp, n_qubits: int) -> np.ndarray:
    """Full ``2**n`` unitary of ``op``, built column by column from basis states."""
    dim = 1 << n_qubits
    u = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(dim):
        col = StateVector(n_qubits, np.eye(1, dim, k, dtype=np.complex128).ravel())
        u[:, k] = apply_gate(col, op).amplitudes
    return u


def partial_trace_first(rho: np.ndarray, n_total: int) -> np.ndarray:
    """Trace out qubit 0 of an ``n_total``-qubit density matrix."""
    half = 1 << (n_total - 1)
    r = rho.reshape(2, half, 2, half)
    return np.einsum("aiaj->ij", r)


def dm_run_reset_circuit(
    n_ant: int,
    beta: float,
    plan: Sequence,
    initial_angles: Sequence[float],
) -> DensityMatrix:
    """Exact mixed state of the ant register after the reset-exploration circuit.

    ``plan`` holds exploration steps (anything with ``.controlled(control, offset)``
    returning a :class:`GateOp`, see ``qaco.ExplorationStep``). The exploration wire
    is prepended as qubit 0, prepared with ``RY(2 asin sqrt(beta))`` before every
    step, and traced out and re-initialised afterwards.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if not 1 <= n_ant <= MAX_DM_QUBITS:
        raise CapacityError(f"density-matrix path supports 1..{MAX_DM_QUBITS} ant qubits, got {n_ant}")
    if len(initial_angles) != n_ant:
        raise ValueError("need one initial angle per ant qubit")

    ants = new_state(n_ant)
    for q, theta in enumerate(initial_angles):
        apply_ry(ants, q, theta)
    rho = DensityMatrix.from_state(ants).entries

    explore = apply_ry(new_state(1), 0, 2 * math.asin(math.sqrt(beta)))
    rho_e = np.outer(explore.amplitudes, explore.amplitudes.conj())
    n_total = n_ant + 1
    for step in plan:
        u = gate_unitary(step.controlled(0, 1), n_total)
        full = np.kron(rho_e, rho)
        full = u @ full @ u.conj().T
        rho = partial_trace_first(full, n_total)
    return DensityMatrix(n_ant, rho)
