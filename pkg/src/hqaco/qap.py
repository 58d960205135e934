"""Quadratic assignment instances over binary vectors.

The objective is ``f(X) = sum_{i <= j} X_i M_ij X_j`` on an upper-triangular
matrix ``M`` and is maximized. An optional constraint fixes the number of ones.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from importlib import resources
from os import PathLike
from typing import Iterable

import numpy as np

MAX_ENUMERATION = 24


class QapParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Constraint:
    """``m=None`` is unconstrained; otherwise exactly ``m`` ones are required."""

    m: int | None = None

    @classmethod
    def unconstrained(cls) -> "Constraint":
        return cls(None)

    @classmethod
    def exact_ones(cls, m: int) -> "Constraint":
        return cls(m)

    @property
    def is_unconstrained(self) -> bool:
        return self.m is None

    def check(self, n: int) -> None:
        if self.m is not None and not 1 <= self.m <= n:
            raise ValueError(f"ExactOnes({self.m}) needs 1 <= m <= n={n}")

    def allows(self, bits: str) -> bool:
        return self.m is None or bits.count("1") == self.m

    def n_comb(self, n: int) -> int:
        return 2**n if self.m is None else math.comb(n, self.m)

    def header(self) -> str:
        return "U" if self.m is None else f"E {self.m}"

    def __str__(self) -> str:
        return "Unconstrained" if self.m is None else f"ExactOnes({self.m})"


@dataclass(frozen=True)
class QapInstance:
    n: int
    entries: tuple[float, ...]  # row-major upper triangle, diagonal included
    constraint: Constraint = Constraint()
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        expected = self.n * (self.n + 1) // 2
        if len(self.entries) != expected:
            raise ValueError(f"n={self.n} needs {expected} upper-triangular entries, got {len(self.entries)}")
        if not all(math.isfinite(v) for v in self.entries):
            raise ValueError("instance entries must be finite")
        self.constraint.check(self.n)

    @classmethod
    def from_matrix(cls, matrix, constraint: Constraint = Constraint(), name: str = "") -> "QapInstance":
        m = np.asarray(matrix, dtype=float)
        n = m.shape[0]
        rows = np.triu_indices(n)
        return cls(n, tuple(float(v) for v in m[rows]), constraint, name)

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        m[np.triu_indices(self.n)] = self.entries
        return m

    def rows(self) -> list[list[float]]:
        out, k = [], 0
        for i in range(self.n):
            width = self.n - i
            out.append(list(self.entries[k:k + width]))
            k += width
        return out


def bits_to_array(bits: str) -> np.ndarray:
    return np.fromiter((c == "1" for c in bits), dtype=float, count=len(bits))


def fitness(instance: QapInstance, bits: str) -> float:
    if len(bits) != instance.n:
        raise ValueError(f"bitstring length {len(bits)} != n={instance.n}")
    return float(_batch_fitness(bits_to_array(bits)[None, :], instance.matrix)[0])


def _batch_fitness(xs: np.ndarray, m: np.ndarray) -> np.ndarray:
    return ((xs @ m) * xs).sum(axis=1)


def valid_solutions(n: int, constraint: Constraint = Constraint()) -> list[str]:
    """All admissible bitstrings of length ``n`` in lexicographic order."""
    if n > MAX_ENUMERATION:
        raise ValueError(f"enumeration guard: n={n} > {MAX_ENUMERATION}")
    constraint.check(n)
    if constraint.m is None:
        return [format(k, f"0{n}b") for k in range(2**n)]
    out = []
    for ones in itertools.combinations(range(n), constraint.m):
        b = ["0"] * n
        for i in ones:
            b[i] = "1"
        out.append("".join(b))
    return sorted(out)


@dataclass(frozen=True)
class Solution:
    bits: str
    fitness: float


def evaluate_all(instance: QapInstance) -> dict[str, float]:
    sols = valid_solutions(instance.n, instance.constraint)
    xs = np.array([bits_to_array(b) for b in sols])
    vals = _batch_fitness(xs, instance.matrix)
    return dict(zip(sols, (float(v) for v in vals)))


def brute_force_opt(instance: QapInstance) -> Solution:
    """Exhaustive maximizer; ties go to the lexicographically smallest bitstring."""
    best_bits, best_f = None, -math.inf
    for bits, f in evaluate_all(instance).items():
        if f > best_f:
            best_bits, best_f = bits, f
    return Solution(best_bits, best_f)


def random_instance(
    n: int,
    constraint: Constraint,
    rng: np.random.Generator,
    low: float = -0.5,
    high: float = 0.5,
    name: str = "",
) -> QapInstance:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    values = rng.uniform(low, high, size=n * (n + 1) // 2)
    return QapInstance(n, tuple(float(v) for v in values), constraint, name)


# -- text format ------------------------------------------------------------


def dumps(instance: QapInstance) -> str:
    lines = [f"qap {instance.n} {instance.constraint.header()}"]
    for row in instance.rows():
        lines.append(" ".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def _parse_float(token: str, line: int, column: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise QapParseError(f"expected a number, got {token!r}", line, column) from None
    if not math.isfinite(value):
        raise QapParseError(f"non-finite value {token!r}", line, column)
    return value


def _tokens(line: str) -> Iterable[tuple[int, str]]:
    col = 0
    for tok in line.split():
        col = line.index(tok, col)
        yield col + 1, tok
        col += len(tok)


def loads(text: str, name: str = "") -> QapInstance:
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise QapParseError("empty instance file", 1)
    lineno, header = lines[0]
    toks = list(_tokens(header))
    if not toks or toks[0][1] != "qap":
        raise QapParseError("header must start with 'qap'", lineno)
    if len(toks) < 3:
        raise QapParseError("header must be 'qap <n> U' or 'qap <n> E <m>'", lineno)
    col, n_tok = toks[1]
    if not n_tok.isdigit() or int(n_tok) < 1:
        raise QapParseError(f"bad size {n_tok!r}", lineno, col)
    n = int(n_tok)
    col, tag = toks[2]
    if tag == "U" and len(toks) == 3:
        constraint = Constraint()
    elif tag == "E" and len(toks) == 4:
        col, m_tok = toks[3]
        if not m_tok.isdigit() or not 1 <= int(m_tok) <= n:
            raise QapParseError(f"bad ExactOnes count {m_tok!r} for n={n}", lineno, col)
        constraint = Constraint(int(m_tok))
    else:
        raise QapParseError(f"bad constraint tag {' '.join(t for _, t in toks[2:])!r}", lineno, col)

    body = lines[1:]
    if len(body) != n:
        where = body[-1][0] + 1 if body else lineno + 1
        raise QapParseError(f"expected {n} matrix rows, got {len(body)}", where)
    entries: list[float] = []
    for i, (lineno, line) in enumerate(body):
        row = list(_tokens(line))
        if len(row) != n - i:
            raise QapParseError(f"row {i + 1} needs {n - i} values, got {len(row)}", lineno)
        entries.extend(_parse_float(tok, lineno, col) for col, tok in row)
    return QapInstance(n, tuple(entries), constraint, name)


def save_instance(instance: QapInstance, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(instance))


def load_instance(path: str | PathLike) -> QapInstance:
    from pathlib import Path

    p = Path(path)
    return loads(p.read_text(), name=p.stem)


# -- bundled 4x4 benchmark matrices ----------------------------------------

BUNDLED_NAMES = ("M1", "M2", "M3", "M4", "M5")
BUNDLED_OPTIMA = {"M1": "1100", "M2": "1001", "M3": "1011", "M4": "0110", "M5": "1000"}


def bundled_instance(name: str) -> QapInstance:
    text = resources.files("hqaco.data").joinpath(f"{name.lower()}.qap").read_text()
    return loads(text, name=name)


def bundled_instances() -> dict[str, QapInstance]:
    return {name: bundled_instance(name) for name in BUNDLED_NAMES}
